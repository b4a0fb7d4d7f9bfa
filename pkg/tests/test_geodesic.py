import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regulus.chart import builtin_surface
from regulus.errors import DomainExitError, PreconditionError
from regulus.geodesic import (
    Unbounded,
    conjugate_distance,
    exp_map,
    g_norm,
    geodesic_ball,
    geodesic_path,
    laplacian_of_distance,
    laplacian_on_rays,
    riemann_distance,
    riemann_distances,
)

import oracles

FLAT = builtin_surface("flat")
SPHERE = builtin_surface("sphere", (1.0,))
POINCARE = builtin_surface("hyperbolic", (1.0,))


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 2 * math.pi), st.floats(0.01, 5))
def test_flat_exp_is_translation(x, y, th, t):
    v = np.array([math.cos(th), math.sin(th)])
    assert np.allclose(exp_map(FLAT, (x, y), v, t), np.array([x, y]) + t * v, atol=1e-12)


def test_sphere_and_poincare_radial_geodesics():
    assert np.allclose(exp_map(SPHERE, (0, 0), (1, 0), math.pi / 2), (1.0, 0.0), atol=1e-8)
    for t in (0.3, 1.0, 2.0):
        assert abs(exp_map(SPHERE, (0, 0), (1, 0), t)[0] - math.tan(t / 2)) < 1e-8
    p = exp_map(POINCARE, (0, 0), (1, 0), 1.0)
    assert abs(p[0] - math.tanh(0.5)) < 1e-8 and abs(p[0] - 0.46212) < 1e-5 and abs(p[1]) < 1e-12


def test_exit_error_reports_parameter():
    with pytest.raises(DomainExitError) as e:
        exp_map(POINCARE, (0, 0), (1, 0), 20.0)
    assert 0 < e.value.exit_parameter < 20.0


@pytest.mark.parametrize("chart", [SPHERE, POINCARE, builtin_surface("perturbed-flat", (0.02, 1.0))],
                         ids=["sphere", "hyperbolic", "perturbed"])
def test_unit_speed_preserved(chart):
    path = geodesic_path(chart, (0.1, -0.05), (1.0, 0.7), 1.2, n=60)
    speed = g_norm(chart, path.points, path.velocities)
    assert np.abs(speed - 1.0).max() < 1e-7


def test_distance_closed_forms():
    r = np.linspace(0.05, 0.95, 20)
    Q = np.stack([r * math.cos(0.4), r * math.sin(0.4)], 1)
    P = np.zeros_like(Q)
    assert np.abs(riemann_distances(SPHERE, P, Q) - oracles.sphere_radial_distance(r)).max() < 1e-7
    assert np.abs(riemann_distances(POINCARE, P, Q) - oracles.poincare_radial_distance(r)).max() < 1e-7
    assert abs(riemann_distance(SPHERE, (0, 0), (1, 0)) - math.pi / 2) < 1e-7
    assert abs(riemann_distance(POINCARE, (0, 0), (0.5, 0)) - 1.098612) < 1e-6


def test_flat_distance_is_euclidean():
    assert riemann_distance(FLAT, (1, 2), (4, 6)) == pytest.approx(5.0, abs=1e-9)


def test_non_radial_sphere_distance_matches_great_circle():
    # chordal formula on the unit sphere via inverse stereographic projection
    def lift(x):
        s = x @ x
        return np.array([2 * x[0], 2 * x[1], s - 1]) / (1 + s)

    p, q = np.array([0.3, -0.2]), np.array([-0.4, 0.5])
    exact = math.acos(float(np.clip(lift(p) @ lift(q), -1, 1)))
    assert riemann_distance(SPHERE, p, q) == pytest.approx(exact, abs=1e-8)


@pytest.mark.parametrize("name,params", [("sphere", (1.0,)), ("hyperbolic", (1.0,)), ("perturbed-flat", (0.005, 1.0))])
def test_symmetry_and_triangle_inequality(name, params):
    chart = builtin_surface(name, params)
    rng = np.random.default_rng(11)
    P = rng.uniform(-0.4, 0.4, (50, 2))
    Q = rng.uniform(-0.4, 0.4, (50, 2))
    dpq = riemann_distances(chart, P, Q)
    assert np.abs(dpq - riemann_distances(chart, Q, P)).max() < 1e-8
    R = rng.uniform(-0.4, 0.4, (50, 2))
    assert np.all(dpq <= riemann_distances(chart, P, R) + riemann_distances(chart, R, Q) + 1e-7)


def test_geodesic_balls():
    ball = geodesic_ball(FLAT, (0, 0), 1.0, 8, 4)
    assert np.allclose(np.linalg.norm(ball.points, axis=1), ball.radii, atol=1e-12)
    ball = geodesic_ball(SPHERE, (0, 0), 0.5, 16, 4)
    assert np.abs(np.linalg.norm(ball.boundary_samples, axis=1) - math.tan(0.25)).max() < 1e-7
    assert np.all(ball.radii <= 0.5 + 1e-9)
    with pytest.raises(PreconditionError):
        geodesic_ball(SPHERE, (0, 0), 3.2, 8, 4)


def test_ball_pair_distances_and_lower_bounds():
    ball = geodesic_ball(SPHERE, (0.2, 0.1), 0.6, 12, 6)
    rng = np.random.default_rng(5)
    i, j = rng.integers(0, ball.n, 40), rng.integers(0, ball.n, 40)
    d = ball.pair_distances(i, j)
    ref = riemann_distances(SPHERE, ball.points[i], ball.points[j])
    assert np.abs(d - ref).max() < 1e-8
    assert np.all(ball.pair_lower_bounds(i, j) <= d + 1e-9)


def test_conjugate_distances():
    assert isinstance(conjugate_distance(FLAT, (0, 0), (1, 0)), Unbounded)
    # from the origin the antipode is at infinity in this chart; from (1, 0) it is (-1, 0)
    assert conjugate_distance(SPHERE, (1, 0), (0, 1)) == pytest.approx(math.pi, abs=1e-6)
    far = conjugate_distance(SPHERE, (0, 0), (1, 0))
    assert isinstance(far, Unbounded) and far.reason == "domain-exit"
    assert isinstance(conjugate_distance(POINCARE, (0, 0), (1, 0)), Unbounded)


def test_laplacian_of_distance_examples():
    assert laplacian_of_distance(FLAT, (0, 0), (2, 0)) == pytest.approx(0.5, abs=1e-9)
    q = exp_map(SPHERE, (0, 0), (1, 0), 0.5)
    assert laplacian_of_distance(SPHERE, (0, 0), q) == pytest.approx(1 / math.tan(0.5), abs=1e-6)
    q = exp_map(POINCARE, (0, 0), (0, 1), 0.5)
    assert laplacian_of_distance(POINCARE, (0, 0), q) == pytest.approx(1 / math.tanh(0.5), abs=1e-6)


@pytest.mark.parametrize("name,params,kappa", [("sphere", (1.0,), 1.0), ("hyperbolic", (1.0,), 1.0),
                                               ("flat", (), 0.0), ("perturbed-flat", (0.02, 1.0), None)])
def test_laplacian_within_comparison_envelope(name, params, kappa):
    chart = builtin_surface(name, params)
    radii = np.linspace(0.05, 1.0, 30)
    lap = laplacian_on_rays(chart, (0.0, 0.0), radii, 16)
    if kappa is None:
        from regulus.tensor import curvature_at
        kappa = float(np.abs(curvature_at(chart, geodesic_ball(chart, (0, 0), 1.0, 16, 30).points)).max())
    lo, hi = oracles.comparison_envelope(radii, kappa)
    tol = 1e-6 if kappa == 0 else 1e-5
    assert np.all(lap >= lo - tol) and np.all(lap <= hi + tol)
