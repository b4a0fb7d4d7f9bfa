"""Regularity radii.

``rho_int`` bisects the intrinsic predicate
``delta^2 ||K||_{0,alpha;B} <= 1 and inj >= 2 delta on B``.
``certify_rho_ext`` searches two chart constructions for the largest delta
whose metric coefficients pass ``g(x0) = I`` and
``||g_ij - delta_ij||_{2,alpha;U} <= 1``; the result is a certified lower
bound only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .chart import MetricChart
from .errors import (
    DomainError,
    DomainExitError,
    MetricDegeneracyError,
    NonConvergenceError,
    NonMonotonePredicateError,
    ParameterError,
    PreconditionError,
    RegulusError,
    UnsupportedConstructionError,
)
from .geodesic import domain_reach, geodesic_ball
from .holder import NormEstimate, SampledField, PairSet, curvature_norm, nondim_norm
from .isothermal import build_isothermal_chart
from .tensor import curvature_field

EPSILON = 0.01
GRID_POINTS = 16
IDENTITY_TOL = 1e-9
DOMAIN_MARGIN = 0.9
RECHECK_SLACK = 1e-6
COMPONENTS = ((0, 0), (0, 1), (1, 1))


@dataclass
class RegularityQuery:
    chart: MetricChart
    p0: tuple
    alpha: float = 0.5
    n_rays: int = 32
    n_radial: int = 16
    tol: float = 1e-3
    cap: float = 50.0

    def __post_init__(self):
        self.p0 = tuple(float(c) for c in self.p0)
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not (0.0 < self.tol < 0.1):
            raise ParameterError("tol must lie in (0, 0.1)")
        if not self.cap > 0:
            raise ParameterError("cap must be positive")

    def doubled(self) -> "RegularityQuery":
        return replace(self, n_rays=2 * self.n_rays, n_radial=2 * self.n_radial)


@dataclass
class RadiusEstimate:
    """A radius, with ``capped`` marking "at least ``value``" results.

    ``limit`` records what stopped the search: ``predicate``, ``cap``,
    ``injectivity`` or ``domain``.
    """

    value: float
    capped: bool
    label: str
    limit: str = "predicate"
    certificate: object = None
    candidate: Optional[str] = None
    grid: tuple = ()

    def __str__(self):
        return f">= {self.value:.6f}" if self.capped else f"{self.value:.6f}"


# --------------------------------------------------------------------------
# intrinsic radius


def _inj_ok(chart: MetricChart, points, delta: float) -> bool:
    inj = chart.inj(points)
    return bool(np.all(inj >= 2.0 * delta))


def intrinsic_measure(chart: MetricChart, p0, delta: float, alpha: float, n_rays: int = 32, n_radial: int = 16):
    """Return ``(delta^2 ||K||, ||K|| estimate, inj_ok, ball)``."""
    ball = geodesic_ball(chart, p0, delta, n_rays, n_radial)
    K = curvature_field(chart, ball)
    est = curvature_norm(ball, K, alpha, delta)
    return delta * delta * est.value, est, _inj_ok(chart, ball.points, delta), ball


def _search_upper(chart: MetricChart, p0, cap: float, inj_factor: float, reach_factor: float):
    """Largest admissible delta and the constraint that sets it."""
    inj = float(chart.inj(np.asarray(p0)))
    if math.isnan(inj):
        raise PreconditionError(f"injectivity radius of {chart.label} is unknown at {p0}")
    cands = [(cap, "cap")]
    if math.isfinite(inj):
        cands.append((inj / inj_factor * (1 - 1e-12), "injectivity"))
    reach = domain_reach(chart, p0, cap * reach_factor / DOMAIN_MARGIN * 1.01)
    cands.append((DOMAIN_MARGIN * reach / reach_factor, "domain"))
    return min(cands)


def _check_domain(chart, p0):
    if not chart.domain.contains(np.asarray(p0, dtype=float)):
        raise DomainError(f"point {p0} outside domain of {chart.label}")


def _monotone_prefix(flags: Sequence[bool]) -> int:
    """Number of leading passes; raises if a pass follows a failure."""
    k = 0
    while k < len(flags) and flags[k]:
        k += 1
    if any(flags[k:]):
        raise NonMonotonePredicateError(
            "predicate pattern on the probe grid is not pass...pass fail...fail: "
            + "".join("P" if f else "F" for f in flags)
        )
    return k


def _bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float) -> float:
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _descend(pred, hi, max_halvings=40):
    """Halve below ``hi`` until the predicate passes; returns (lo, hi) or None."""
    d = hi
    for _ in range(max_halvings):
        d *= 0.5
        if pred(d):
            return d, 2 * d
    return None


def rho_int(q: RegularityQuery) -> RadiusEstimate:
    _check_domain(q.chart, q.p0)
    upper, limit = _search_upper(q.chart, q.p0, q.cap, 2.0, 1.0)

    def pred(delta):
        value, _, inj_ok, _ = intrinsic_measure(q.chart, q.p0, delta, q.alpha, q.n_rays, q.n_radial)
        return inj_ok and value <= 1.0

    grid = upper * np.arange(1, GRID_POINTS + 1) / GRID_POINTS
    flags = [pred(d) for d in grid]
    k = _monotone_prefix(flags)
    if k == GRID_POINTS:
        capped = limit in ("cap", "domain")
        label = {"cap": "capped at search limit", "domain": "capped by chart domain",
                 "injectivity": "limited by injectivity radius"}[limit]
        return RadiusEstimate(float(upper), capped, label, limit, grid=tuple(flags))
    if k == 0:
        found = _descend(pred, grid[0])
        if found is None:
            return RadiusEstimate(0.0, False, "predicate fails at every probed radius", "predicate", grid=tuple(flags))
        lo, hi = found
    else:
        lo, hi = grid[k - 1], grid[k]
    value = _bisect(pred, lo, hi, q.tol)
    return RadiusEstimate(float(value), False, "bisection, predicate monotone-checked", "predicate", grid=tuple(flags))


# --------------------------------------------------------------------------
# chart certificates


@dataclass
class ChartSamples:
    """Metric coefficients of a chart sampled on U.

    ``g``, ``dg``, ``d2g`` follow the chart module layout:
    ``dg[n, l, i, j] = d_l g_ij`` and ``d2g[n, l, m, i, j]``.
    """

    points: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray
    x0: np.ndarray
    g_x0: np.ndarray
    inj_ok: bool
    delta: float
    construction: str = "native"
    diam: Optional[float] = None
    boundary: Optional[np.ndarray] = None   # mask of samples on the image of the boundary circle


@dataclass
class ChartCertificate:
    samples: ChartSamples
    alpha: float
    bound: float
    diam: float
    measured_norms: dict
    g_at_x0_identity: bool
    inj_ok: bool

    @property
    def max_norm(self) -> float:
        return max(e.value for e in self.measured_norms.values())

    @property
    def passes(self) -> bool:
        return self.g_at_x0_identity and self.inj_ok and self.max_norm <= self.bound


def sample_diameter(points) -> float:
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) >= 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            pass  # collinear samples: fall through to the direct search
    best = 0.0
    for s in range(0, len(pts), 1024):
        d = pts[s:s + 1024, None, :] - pts[None, :, :]
        best = max(best, float(np.sqrt((d**2).sum(-1)).max()))
    return best


def coefficient_field(samples: ChartSamples, i: int, j: int) -> SampledField:
    f = samples.g[:, i, j] - (1.0 if i == j else 0.0)
    d1 = samples.dg[:, :, i, j]
    d2 = np.stack([samples.d2g[:, 0, 0, i, j], samples.d2g[:, 0, 1, i, j], samples.d2g[:, 1, 1, i, j]], axis=1)
    return SampledField(samples.points, f, d1, d2)


def check_chart_certificate(samples: ChartSamples, alpha: float, bound: float = 1.0,
                            exhaustive: bool = False) -> ChartCertificate:
    """Nondimensional C^{2,alpha} norms of g_ij - delta_ij against ``bound``.

    With ``exhaustive`` every sample pair enters the Hoelder sup; otherwise
    large sample sets use the stratified pair set.
    """
    if samples.points is None or len(samples.points) == 0:
        raise ParameterError("empty sample set")
    diam = samples.diam if samples.diam is not None else sample_diameter(samples.points)
    if not diam > 0:
        raise ParameterError("chart samples have zero diameter")
    pairs = "all" if exhaustive else PairSet(samples.points)
    norms = {(i + 1, j + 1): nondim_norm(coefficient_field(samples, i, j), 2, alpha, diam, pairs) for i, j in COMPONENTS}
    ident = bool(np.all(np.abs(np.asarray(samples.g_x0) - np.eye(2)) <= IDENTITY_TOL))
    return ChartCertificate(samples, alpha, bound, diam, norms, ident, bool(samples.inj_ok))


def _sqrt_spd(m):
    w, v = np.linalg.eigh(m)
    return (v * np.sqrt(w)) @ v.T, (v / np.sqrt(w)) @ v.T


def native_chart_samples(chart: MetricChart, p0, delta: float, n_rays: int = 32, n_radial: int = 16) -> ChartSamples:
    """Chart coordinates translated and linearly normalised: y = g(x0)^(1/2) (x - x0)."""
    ball = geodesic_ball(chart, p0, delta, n_rays, n_radial)
    x0 = np.asarray(p0, dtype=float)
    g, dg, d2g = chart.jets(ball.points)
    gx0 = chart.metric(x0[None, :])[0]
    A, Ai = _sqrt_spd(gx0)
    y = (ball.points - x0) @ A
    gy = np.einsum("ia,nab,jb->nij", Ai, g, Ai)
    dgy = np.einsum("lp,ia,npab,jb->nlij", Ai, Ai, dg, Ai)
    d2gy = np.einsum("lp,mq,ia,npqab,jb->nlmij", Ai, Ai, Ai, d2g, Ai)
    gy0 = Ai @ gx0 @ Ai
    return ChartSamples(y, gy, dgy, d2gy, np.zeros(2), gy0, _inj_ok(chart, ball.points, delta), delta, "native",
                        boundary=ball.boundary_mask)


def isothermal_chart_samples(chart: MetricChart, p0, delta1: float, n_rays: int = 32, n_radial: int = 16) -> ChartSamples:
    """Isothermal chart built on B(p0, 3 delta1), restricted to B(p0, delta1), scaled by sqrt(phi0(0))."""
    iso = build_isothermal_chart(chart, p0, 3.0 * delta1)
    ball = geodesic_ball(chart, p0, delta1, n_rays, n_radial)
    z0 = iso.forward(ball.points)
    xi = math.sqrt(float(iso.phi(np.zeros(2))))
    phi, d1, d2 = iso.phi_jet(z0)
    phi1, d11, d21 = phi / xi**2, d1 / xi**3, d2 / xi**4
    n = len(z0)
    eye = np.eye(2)
    g = phi1[:, None, None] * eye
    dg = d11[:, :, None, None] * eye
    H = np.empty((n, 2, 2))
    H[:, 0, 0], H[:, 0, 1], H[:, 1, 0], H[:, 1, 1] = d21[:, 0], d21[:, 1], d21[:, 1], d21[:, 2]
    d2g = H[:, :, :, None, None] * eye
    g_x0 = float(iso.phi(np.zeros(2))) / xi**2 * eye
    return ChartSamples(xi * z0, g, dg, d2g, np.zeros(2), g_x0, _inj_ok(chart, ball.points, delta1), delta1,
                        "isothermal", boundary=ball.boundary_mask)


CANDIDATES = {
    "native": (native_chart_samples, 2.0, 1.0),
    "isothermal": (isothermal_chart_samples, 3.0, 3.0),
}
_SEARCH_ERRORS = (UnsupportedConstructionError, PreconditionError, DomainExitError, NonConvergenceError,
                  MetricDegeneracyError)


def certify_radius(q: RegularityQuery, candidate: str = "native", bound: float = 1.0) -> RadiusEstimate:
    """Largest delta for which ``candidate`` passes with ``bound``, confirmed at doubled sampling."""
    _check_domain(q.chart, q.p0)
    build, inj_factor, reach_factor = CANDIDATES[candidate]
    if candidate == "isothermal" and not q.alpha < 1.0:
        raise PreconditionError("the isothermal construction needs alpha < 1")
    upper, limit = _search_upper(q.chart, q.p0, q.cap, inj_factor, reach_factor)
    certs = {}

    def cert_at(delta, rays, radial, slack=0.0, exhaustive=False):
        try:
            s = build(q.chart, q.p0, delta, rays, radial)
        except _SEARCH_ERRORS:
            return None
        return check_chart_certificate(s, q.alpha, bound + slack, exhaustive)

    def pred(delta):
        c = cert_at(delta, q.n_rays, q.n_radial)
        ok = c is not None and c.passes
        if ok:
            certs[delta] = c
        return ok

    grid = upper * np.arange(1, GRID_POINTS + 1) / GRID_POINTS
    # largest first, so cached radial data covers every later call
    flags = [pred(d) for d in grid[::-1]][::-1]
    passing = [k for k, f in enumerate(flags) if f]
    if not passing:
        found = _descend(pred, grid[0])
        if found is None:
            return RadiusEstimate(0.0, False, "no certificate", "predicate", candidate=candidate, grid=tuple(flags))
        lo, hi = found
        top = False
    else:
        k = passing[-1]
        top = k == GRID_POINTS - 1
        lo = grid[k]
        hi = None if top else grid[k + 1]
    value = lo if top else _bisect(pred, lo, hi, q.tol)
    # confirmation at doubled sampling over every pair; shrink until it holds
    for _ in range(60):
        c2 = cert_at(value, 2 * q.n_rays, 2 * q.n_radial, RECHECK_SLACK, exhaustive=True)
        if c2 is not None and c2.passes and pred(value):
            break
        value *= 1.0 - q.tol
        top = False
    else:
        return RadiusEstimate(0.0, False, "no certificate", "predicate", candidate=candidate, grid=tuple(flags))
    capped = top and limit in ("cap", "domain")
    label = "certified lower bound" + (" (capped)" if capped else "")
    return RadiusEstimate(float(value), capped, label, limit if top else "predicate", certs[value], candidate,
                          tuple(flags))


@dataclass
class ExtrinsicResult:
    best: RadiusEstimate
    candidates: dict = field(default_factory=dict)

    @property
    def value(self):
        return self.best.value

    @property
    def capped(self):
        return self.best.capped

    @property
    def certificate(self):
        return self.best.certificate


def certify_rho_ext(q: RegularityQuery, candidates: Sequence[str] = ("native", "isothermal")) -> ExtrinsicResult:
    results = {}
    for name in candidates:
        if name == "isothermal" and not q.alpha < 1.0:
            continue
        results[name] = certify_radius(q, name, 1.0)
    if not results or all(r.value <= 0 for r in results.values()):
        return ExtrinsicResult(RadiusEstimate(0.0, False, "no certificate", "predicate"), results)
    best = max(results.values(), key=lambda r: (r.capped, r.value))
    return ExtrinsicResult(best, results)


# --------------------------------------------------------------------------
# global quantity


@dataclass
class GlobalRegularity:
    value: float
    rho: RadiusEstimate
    per_probe: list


def global_regularity(chart: MetricChart, alpha: float, probe_points, **sampling) -> GlobalRegularity:
    """||M||_alpha = rho^-2 with rho the smallest probed intrinsic radius (0 if every probe is capped)."""
    probes = [tuple(p) for p in probe_points]
    if not probes:
        raise ParameterError("need at least one probe point")
    ests = [rho_int(RegularityQuery(chart, p, alpha, **sampling)) for p in probes]
    finite = [e for e in ests if not e.capped]
    if not finite:
        rho = min(ests, key=lambda e: e.value)
        return GlobalRegularity(0.0, rho, ests)
    rho = min(finite, key=lambda e: e.value)
    return GlobalRegularity(rho.value ** -2 if rho.value > 0 else math.inf, rho, ests)
