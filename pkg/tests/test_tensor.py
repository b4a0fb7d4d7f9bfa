import numpy as np
import pytest
from hypothesis import given, strategies as st

from regulus.chart import builtin_surface, eval_metric_jet, rescale_chart
from regulus.geodesic import geodesic_ball
from regulus.tensor import christoffel, curvature_at, curvature_field, gauss_curvature

import oracles


def test_flat_christoffel_vanishes():
    assert not christoffel(eval_metric_jet(builtin_surface("flat"), (1.0, 2.0))).gamma.any()


def test_polar_flat_golden_values():
    G = christoffel(eval_metric_jet(builtin_surface("polar-flat"), (2.0, 0.0)))
    assert abs(G(1, 2, 2) + 2.0) < 1e-10
    assert abs(G(2, 1, 2) - 0.5) < 1e-10 and abs(G(2, 2, 1) - 0.5) < 1e-10
    others = [G(k, i, j) for k in (1, 2) for i in (1, 2) for j in (1, 2)
              if (k, i, j) not in {(1, 2, 2), (2, 1, 2), (2, 2, 1)}]
    assert max(map(abs, others)) < 1e-10


def test_poincare_golden_values():
    G = christoffel(eval_metric_jet(builtin_surface("hyperbolic", (1.0,)), (0.5, 0.0)))
    assert abs(G(1, 1, 1) - 4 / 3) < 1e-10
    assert abs(G(1, 2, 2) + 4 / 3) < 1e-10
    assert abs(G(2, 1, 2) - 4 / 3) < 1e-10


@given(st.sampled_from(["sphere", "hyperbolic", "perturbed-flat", "polar-flat"]),
       st.floats(-0.6, 0.6), st.floats(-0.6, 0.6))
def test_christoffel_lower_symmetry_and_oracle(name, x, y):
    params = {"sphere": (1.0,), "hyperbolic": (1.0,), "perturbed-flat": (0.01, 1.0), "polar-flat": ()}[name]
    p = (x + 1.0, y) if name == "polar-flat" else (x, y)
    gam = christoffel(eval_metric_jet(builtin_surface(name, params), p)).gamma
    assert np.array_equal(gam, gam.transpose(0, 2, 1))
    assert np.allclose(gam, oracles.christoffel_function(name, params)(p), rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("p", [(0.0, 0.0), (0.3, 0.4), (1.0, 0.0)])
def test_unit_sphere_curvature(p):
    assert abs(gauss_curvature(builtin_surface("sphere", (1.0,)), p) - 1.0) < 1e-9


def test_hyperbolic_curvature():
    assert abs(gauss_curvature(builtin_surface("hyperbolic", (1.0,)), (0.5, 0.0)) + 1.0) < 1e-9


def test_flat_curvature_zero(rng):
    assert not curvature_at(builtin_surface("flat"), rng.uniform(-5, 5, (10, 2))).any()


@pytest.mark.parametrize("name,params", [("sphere", (0.5,)), ("sphere", (2.0,)), ("hyperbolic", (1.0,)),
                                         ("hyperbolic", (2.5,)), ("perturbed-flat", (0.005, 1.0)),
                                         ("perturbed-flat", (0.03, 0.5))])
def test_conformal_curvature_matches_brioschi_oracle(name, params, rng):
    chart = builtin_surface(name, params)
    pts = rng.uniform(-0.5, 0.5, (40, 2))
    assert np.abs(curvature_at(chart, pts) - oracles.curvature_function(name, params)(pts)).max() < 1e-8


def test_finite_difference_curvature_order():
    chart = builtin_surface("sphere", (1.0,))
    p = (0.3, 0.2)
    errs = [abs(gauss_curvature(builtin_surface("sphere", (1.0,), "finite-difference", h), p) - 1.0)
            for h in (2e-2, 1e-2, 5e-3)]
    assert gauss_curvature(chart, p) == pytest.approx(1.0, abs=1e-12)
    assert np.log2(errs[0] / errs[1]) >= 1.9 and np.log2(errs[1] / errs[2]) >= 1.9


@given(st.floats(0.2, 5.0), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_curvature_invariant_under_coordinate_scaling(lam, x, y):
    chart = builtin_surface("perturbed-flat", (0.02, 0.7))
    p = np.array([[x, y]])
    assert abs(curvature_at(rescale_chart(chart, lam), lam * p)[0] - curvature_at(chart, p)[0]) < 1e-9


def test_curvature_field_on_balls():
    flat = builtin_surface("flat")
    assert not curvature_field(flat, geodesic_ball(flat, (0, 0), 1.0, 8, 4)).values.any()
    sph = builtin_surface("sphere", (1.0,))
    f = curvature_field(sph, geodesic_ball(sph, (0, 0), 0.5, 8, 4))
    assert np.abs(f.values - 1.0).max() < 1e-9
    pf = builtin_surface("perturbed-flat", (0.005, 1.0))
    ball = geodesic_ball(pf, (0, 0), 0.8, 8, 8)
    f = curvature_field(pf, ball)
    idx = np.random.default_rng(3).choice(ball.n, 20, replace=False)
    assert np.abs(f.values[idx] - oracles.curvature_function("perturbed-flat", (0.005, 1.0))(f.points[idx])).max() < 1e-8
    assert np.array_equal(f.radii, ball.radii)
