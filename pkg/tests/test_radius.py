import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from regulus.chart import builtin_surface
from regulus.errors import DomainError, NonMonotonePredicateError, ParameterError
from regulus.radius import (
    ChartSamples,
    RegularityQuery,
    _monotone_prefix,
    certify_radius,
    certify_rho_ext,
    check_chart_certificate,
    global_regularity,
    isothermal_chart_samples,
    native_chart_samples,
    rho_int,
    sample_diameter,
)

SPHERE = builtin_surface("sphere", (1.0,))
FLAT = builtin_surface("flat")


def constant_samples(g0, n=9):
    s = np.linspace(-1, 1, n)
    X, Y = np.meshgrid(s, s, indexing="ij")
    P = np.stack([X, Y], -1).reshape(-1, 2)
    m = len(P)
    return ChartSamples(P, np.broadcast_to(g0, (m, 2, 2)).copy(), np.zeros((m, 2, 2, 2)), np.zeros((m, 2, 2, 2, 2)),
                        np.zeros(2), np.asarray(g0, dtype=float), True, 1.0)


def test_query_validation():
    for kw in ({"alpha": 0.0}, {"alpha": 1.2}, {"tol": 0.0}, {"tol": 0.5}, {"cap": 0.0}):
        with pytest.raises(ParameterError):
            RegularityQuery(SPHERE, (0, 0), **kw)
    with pytest.raises(DomainError):
        rho_int(RegularityQuery(builtin_surface("hyperbolic", (1.0,)), (2.0, 0.0)))


def test_rho_int_examples():
    flat = rho_int(RegularityQuery(FLAT, (0, 0), 0.5, 8, 4))
    assert flat.capped and flat.value == 50.0 and str(flat).startswith(">=")
    for R in (1.0, 2.0):
        est = rho_int(RegularityQuery(builtin_surface("sphere", (R,)), (0, 0), 0.5, 12, 8))
        assert not est.capped and est.value == pytest.approx(R, rel=2e-3)
        assert est.label == "bisection, predicate monotone-checked"


def test_monotone_prefix():
    assert _monotone_prefix([True, True, False, False]) == 2
    assert _monotone_prefix([False, False]) == 0
    with pytest.raises(NonMonotonePredicateError):
        _monotone_prefix([True, False, True])


def test_certificate_examples():
    flat = check_chart_certificate(constant_samples(np.eye(2)), 0.5, 0.01)
    assert flat.passes and flat.max_norm == 0.0
    off = check_chart_certificate(constant_samples(1.001 * np.eye(2)), 0.5, 1.0)
    assert not off.g_at_x0_identity and not off.passes
    with pytest.raises(ParameterError):
        check_chart_certificate(ChartSamples(np.empty((0, 2)), None, None, None, np.zeros(2), np.eye(2), True, 1.0),
                                0.5)


def _bump_norm(a, delta=0.5):
    chart = builtin_surface("perturbed-flat", (a, 1.0))
    return native_chart_samples(chart, (0, 0), delta, 16, 16)


def test_calibrated_bump_certificate():
    # the norm is linear in a to leading order; two secant steps land on 0.02
    a = 0.005
    for _ in range(3):
        m = check_chart_certificate(_bump_norm(a), 0.5, 1.0).max_norm
        a *= 0.02 / m
    samples = _bump_norm(a)
    cert = check_chart_certificate(samples, 0.5, 1.0)
    assert cert.max_norm == pytest.approx(0.02, rel=1e-3)
    assert cert.passes and not check_chart_certificate(samples, 0.5, 0.01).passes


@given(st.floats(0.0, 0.05), st.floats(0.05, 0.9))
def test_epsilon_certificate_implies_unit_certificate(a, delta):
    s = native_chart_samples(builtin_surface("perturbed-flat", (a, 1.0)), (0.1, 0.0), delta, 8, 4)
    if check_chart_certificate(s, 0.5, 0.01).passes:
        assert check_chart_certificate(s, 0.5, 1.0).passes


def test_native_samples_normalised():
    s = native_chart_samples(SPHERE, (0.3, 0.1), 0.4, 8, 4)
    assert np.allclose(s.g_x0, np.eye(2), atol=1e-12) and np.allclose(s.points[0], 0.0)
    iso = isothermal_chart_samples(SPHERE, (0.0, 0.0), 0.2, 8, 4)
    assert np.allclose(iso.g_x0, np.eye(2), atol=1e-12) and iso.construction == "isothermal"


def test_sample_diameter_matches_brute_force():
    P = np.random.default_rng(2).normal(size=(300, 2))
    brute = max(np.linalg.norm(P[i] - P, axis=1).max() for i in range(len(P)))
    assert sample_diameter(P) == pytest.approx(brute, rel=1e-14)
    assert sample_diameter(np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])) == 2.0


def test_rho_ext_flat_is_capped():
    res = certify_rho_ext(RegularityQuery(FLAT, (0, 0), 0.5, 8, 4))
    assert res.capped and res.value == 50.0


def test_certified_radius_scales_with_sphere_radius():
    a = certify_radius(RegularityQuery(builtin_surface("sphere", (1.0,)), (0, 0), 0.5, 16, 16))
    b = certify_radius(RegularityQuery(builtin_surface("sphere", (2.0,)), (0, 0), 0.5, 16, 16))
    assert a.value > 0.1 and b.value == pytest.approx(2 * a.value, rel=0.02)
    assert a.certificate.passes and a.candidate == "native"


def test_global_regularity():
    assert global_regularity(FLAT, 0.5, [(0, 0), (3, 1)], n_rays=8, n_radial=4).value == 0.0
    g = global_regularity(SPHERE, 0.5, [(0, 0), (0.4, 0.3)], n_rays=8, n_radial=6)
    assert g.value == pytest.approx(1.0, rel=5e-3)
    with pytest.raises(ParameterError):
        global_regularity(SPHERE, 0.5, [])
