"""Inequality checks over a corpus of surfaces, with JSON/CSV reports.

Each check measures one or more quantities at a ball ``B(p0, delta)`` and
compares them with closed-form bounds.  A check whose hypothesis fails at
the requested configuration is reported as ``skipped`` (with the reason),
never as a failure.  A failing check is repeated at doubled and quadrupled
sampling and only reported as failed if the failure persists.
"""
from __future__ import annotations

import contextvars
import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .chart import MetricChart, builtin_surface
from .errors import ParameterError, PreconditionError, RegulusError, UnsupportedConstructionError
from .geodesic import geodesic_ball, laplacian_on_rays
from .holder import PairSet, SampledField, curvature_norm, interior_weighted_norm, seeded
from .isothermal import build_isothermal_chart, distance_distortion, sup_log_phi
from .radius import (
    EPSILON,
    RadiusEstimate,
    RegularityQuery,
    certify_radius,
    certify_rho_ext,
    check_chart_certificate,
    native_chart_samples,
    rho_int,
    sample_diameter,
)
from .tensor import curvature_field

# Every check id and the inequality it tests, in report order.  Symbols:
# B = B(p0, delta), U = chart image of B, d = Euclidean diameter of U,
# c = max |g_ij - delta_ij| on U, kappa = sup_B |K|, eps = 0.01.
CHECKS = {
    "delta-diam": "delta <= sqrt(1 + 2c) * d",
    "eps14": "a unit-bound chart on B(p0, delta) restricted to B(p0, eps*delta/14) has all norms <= eps",
    "lemma-curv": "delta^2 * kappa < 0.1 for an eps-bound chart",
    "convexity": "U is Euclidean-convex for an eps-bound chart (midpoints of boundary pairs lie in U)",
    "prop24": "delta^2 * ||K||_{0,alpha;B} <= C for an eps-bound chart (C universal; value recorded)",
    "thm31": "sup_B |log phi| <= 8 delta^2 kappa and exp(-4 delta^2 kappa) <= d_g / |dz| <= exp(4 delta^2 kappa)",
    "prop36": "||phi - 1||*_{2,alpha} <= C0 * delta^2 ||K||_{0,alpha;B} when delta^2 ||K|| <= 0.01 (C0 recorded)",
    "thm-ratios": "rho_int >= C1 * rho_ext and rho_ext >= C2 * rho_int (C1, C2 recorded)",
    "comparison-laplacian": "sqrt(kappa) cot(r sqrt(kappa)) <= Laplacian(r) <= sqrt(kappa) coth(r sqrt(kappa))",
}
CHECK_IDS = tuple(CHECKS)

SCHEMA = "regulus-report/1"
MAX_REFINEMENT = 4          # failures are re-run at 2x and 4x sampling
CONVEXITY_BOUNDARY = 256    # boundary samples for the midpoint test
LAPLACIAN_RADII = 30
EPS14_NOTE = ("verifies the shrinking step on a concrete chart; "
              "the radius-level inequality is implied, not measured")


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SurfaceSpec:
    """A builtin surface by name and parameters (hashable, rebuildable)."""

    name: str
    params: tuple = ()

    def chart(self) -> MetricChart:
        return builtin_surface(self.name, self.params)

    @property
    def label(self) -> str:
        return self.chart().label


DEFAULT_CORPUS = (
    SurfaceSpec("flat"),
    SurfaceSpec("sphere", (0.5,)),
    SurfaceSpec("sphere", (1.0,)),
    SurfaceSpec("sphere", (2.0,)),
    SurfaceSpec("hyperbolic", (1.0,)),
    SurfaceSpec("perturbed-flat", (0.005, 1.0)),
)


@dataclass(frozen=True)
class Sampling:
    rays: int = 32
    radial: int = 32
    tol: float = 1e-3
    cap: float = 50.0
    grid_n: int = 200
    seed: int = 0x5EED
    distortion_pairs: int = 200

    def refined(self, factor: int) -> "Sampling":
        return replace(self, rays=self.rays * factor, radial=self.radial * factor)

    def query(self, chart: MetricChart, p0, alpha: float) -> RegularityQuery:
        return RegularityQuery(chart, tuple(p0), alpha, self.rays, self.radial, self.tol, self.cap)

    def as_dict(self) -> dict:
        return {"rays": self.rays, "radial": self.radial, "tol": self.tol, "cap": self.cap,
                "grid_n": self.grid_n, "seed": self.seed, "distortion_pairs": self.distortion_pairs}


def default_center(chart: MetricChart) -> tuple:
    if chart.symmetry_center is not None:
        return tuple(float(c) for c in chart.symmetry_center)
    dom = chart.domain
    if dom.kind == "rectangle":
        x0, x1, y0, y1 = dom.bounds
        return (0.5 * (x0 + x1), 0.5 * (y0 + y1))
    return (float(dom.bounds[0]), float(dom.bounds[1]))


# --------------------------------------------------------------------------
# cases


STATUSES = ("pass", "fail", "skipped", "incomplete")


@dataclass
class CheckCase:
    """One verdict.  ``sense[k]`` relates ``measured[k]`` to ``bound[k]``.

    Senses are ``"<="``, ``"<"``, ``">="`` (each with additive ``slack``) and
    ``"finite"`` (bound unused).  A ``None`` measurement is undefined and
    exempt.  ``status`` is ``pass``, ``fail``, ``skipped`` or ``incomplete``.
    """

    check_id: str
    surface: str
    params: tuple
    p0: tuple
    alpha: float
    delta: Optional[float]
    measured: list = field(default_factory=list)
    bound: list = field(default_factory=list)
    sense: list = field(default_factory=list)
    slack: float = 0.0
    status: str = "pass"
    note: str = ""
    resolution: int = 1

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "surface": self.surface,
            "params": list(self.params),
            "p0": list(self.p0),
            "alpha": self.alpha,
            "delta": self.delta,
            "measured": [_num(v) for v in self.measured],
            "bound": [_num(v) for v in self.bound],
            "sense": list(self.sense),
            "slack": self.slack,
            "status": self.status,
            "pass": None if self.status in ("skipped", "incomplete") else self.status == "pass",
            "resolution": self.resolution,
            "note": self.note,
        }


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _holds(m, b, sense, slack) -> bool:
    if m is None:
        return True
    if sense == "finite":
        return math.isfinite(m)
    if not math.isfinite(m):
        return False
    if sense == "<=":
        return m <= b + slack
    if sense == "<":
        return m < b + slack
    if sense == ">=":
        return m >= b - slack
    if sense == ">":
        return m > b - slack
    raise ParameterError(f"unknown comparison {sense!r}")


def judge(measured, bound, sense, slack) -> str:
    ok = all(_holds(m, b, s, slack) for m, b, s in zip(measured, bound, sense))
    return "pass" if ok else "fail"


class _Skip(Exception):
    """Hypothesis of the check is not met at this configuration."""


@dataclass
class _Ctx:
    chart: MetricChart
    p0: tuple
    alpha: float
    delta: float
    sampling: Sampling


def _ball(ctx: _Ctx, delta=None, rays=None, radial=None):
    try:
        return geodesic_ball(ctx.chart, ctx.p0, ctx.delta if delta is None else delta,
                             rays or ctx.sampling.rays, radial or ctx.sampling.radial)
    except (PreconditionError, RegulusError) as e:
        raise _Skip(f"ball unavailable: {e}") from e


def _inj_ok(ctx: _Ctx, ball) -> bool:
    return bool(np.all(ctx.chart.inj(ball.points) >= 2.0 * ball.radius))


def _certificate(ctx: _Ctx, delta: float, bound: float):
    try:
        s = native_chart_samples(ctx.chart, ctx.p0, delta, ctx.sampling.rays, ctx.sampling.radial)
    except RegulusError as e:
        raise _Skip(f"chart unavailable at delta={delta:g}: {e}") from e
    return check_chart_certificate(s, ctx.alpha, bound)


def _require_chart(ctx: _Ctx, bound: float):
    cert = _certificate(ctx, ctx.delta, bound)
    if not cert.passes:
        raise _Skip(f"no chart with norm bound {bound:g} at delta={ctx.delta:g} "
                    f"(max norm {cert.max_norm:.6g}, identity {cert.g_at_x0_identity}, inj {cert.inj_ok})")
    return cert


def _kappa(ball) -> float:
    return float(np.abs(ball.curvature()).max())


# --------------------------------------------------------------------------
# the checks; each returns (measured, bound, sense, slack, note)


def _check_delta_diam(ctx: _Ctx):
    try:
        s = native_chart_samples(ctx.chart, ctx.p0, ctx.delta, ctx.sampling.rays, ctx.sampling.radial)
    except RegulusError as e:
        raise _Skip(f"chart unavailable: {e}") from e
    c = float(np.abs(s.g - np.eye(2)).max())
    d = sample_diameter(s.points)
    return [ctx.delta / (math.sqrt(1 + 2 * c) * d)], [1.0], ["<="], 1e-9, f"c={c:.6g}, d={d:.6g}"


def _check_eps14(ctx: _Ctx):
    _require_chart(ctx, 1.0)
    small = EPSILON * ctx.delta / 14.0
    cert = _certificate(ctx, small, EPSILON)
    if not (cert.g_at_x0_identity and cert.inj_ok):
        return [math.inf], [EPSILON], ["<="], 0.0, EPS14_NOTE
    return [cert.max_norm], [EPSILON], ["<="], 0.0, EPS14_NOTE


def _check_lemma_curv(ctx: _Ctx):
    _require_chart(ctx, EPSILON)
    ball = _ball(ctx)
    return [ctx.delta**2 * _kappa(ball)], [0.1], ["<"], 0.0, ""


def midpoint_convexity(boundary) -> float:
    """Largest Euclidean distance from a midpoint of two boundary samples to the polygon they span.

    ``boundary`` must be ordered around the region.  Zero means every
    midpoint lies inside or on the polygon.
    """
    P = np.asarray(boundary, dtype=float)
    n = len(P)
    if n < 3:
        raise ParameterError("need at least three boundary samples")
    i, j = np.triu_indices(n, 1)
    M = 0.5 * (P[i] + P[j])
    A, B = P, np.roll(P, -1, axis=0)
    worst = 0.0
    for s in range(0, len(M), 4096):
        m = M[s:s + 4096, None, :]
        # even-odd rule
        ay, by = A[None, :, 1], B[None, :, 1]
        cross = (ay > m[..., 1]) != (by > m[..., 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = A[None, :, 0] + (m[..., 1] - ay) * (B[None, :, 0] - A[None, :, 0]) / (by - ay)
        inside = (np.sum(cross & (m[..., 0] < xint), axis=1) % 2) == 1
        AB = B - A
        t = np.clip(np.sum((m - A[None]) * AB[None], axis=2) / np.sum(AB * AB, axis=1)[None], 0.0, 1.0)
        near = A[None] + t[..., None] * AB[None]
        dist = np.sqrt(((m - near) ** 2).sum(axis=2)).min(axis=1)
        out = np.where(inside, 0.0, dist)
        worst = max(worst, float(out.max()))
    return worst


def _check_convexity(ctx: _Ctx):
    cert = _require_chart(ctx, EPSILON)
    ball = _ball(ctx, rays=CONVEXITY_BOUNDARY, radial=1)
    g0 = ctx.chart.metric(np.asarray(ctx.p0, dtype=float)[None, :])[0]
    w, v = np.linalg.eigh(g0)
    A = (v * np.sqrt(w)) @ v.T
    y = (ball.boundary_samples - np.asarray(ctx.p0)) @ A
    d = max(cert.diam, sample_diameter(y))
    return [midpoint_convexity(y) / d], [1e-9], ["<="], 0.0, f"{len(y)} boundary samples"


def _check_prop24(ctx: _Ctx):
    _require_chart(ctx, EPSILON)
    ball = _ball(ctx)
    est = curvature_norm(ball, curvature_field(ctx.chart, ball), ctx.alpha, ctx.delta)
    return [ctx.delta**2 * est.value], [None], ["finite"], 0.0, "value is an empirical sample of C"


def _iso(ctx: _Ctx):
    try:
        return build_isothermal_chart(ctx.chart, ctx.p0, ctx.delta)
    except (UnsupportedConstructionError, PreconditionError) as e:
        raise _Skip(f"no isothermal chart: {e}") from e


def _check_thm31(ctx: _Ctx):
    ball = _ball(ctx)
    if not _inj_ok(ctx, ball):
        raise _Skip("injectivity radius below 2 delta on the ball")
    kappa = _kappa(ball)
    t = ctx.delta**2 * kappa
    if not t < math.pi**2 / 8:
        raise _Skip(f"delta^2 kappa = {t:.6g} is not below pi^2/8")
    iso = _iso(ctx)
    lo, hi = distance_distortion(ball, iso, ctx.sampling.distortion_pairs, ctx.sampling.seed)
    return ([sup_log_phi(ball, iso), lo, hi], [8 * t, math.exp(-4 * t), math.exp(4 * t)],
            ["<=", ">=", "<="], 1e-6, f"kappa={kappa:.6g}")


def conformal_factor_field(iso, rays: int, radial: int) -> SampledField:
    """phi - 1 with its jets on a polar grid of the closed disc of radius ``iso.delta``."""
    r = iso.delta * np.arange(1, radial + 1) / radial
    th = 2 * np.pi * np.arange(rays) / rays
    z = np.concatenate([[[0.0, 0.0]], (r[None, :, None] * np.stack([np.cos(th), np.sin(th)], 1)[:, None, :]).reshape(-1, 2)])
    phi, d1, d2 = iso.phi_jet(z)
    return SampledField(z, phi - 1.0, d1, d2)


def _check_prop36(ctx: _Ctx):
    if not ctx.alpha < 1:
        raise _Skip("needs alpha < 1")
    ball = _ball(ctx)
    if not _inj_ok(ctx, ball):
        raise _Skip("injectivity radius below 2 delta on the ball")
    est = curvature_norm(ball, curvature_field(ctx.chart, ball), ctx.alpha, ctx.delta)
    t = ctx.delta**2 * est.value
    if t > 0.01:
        raise _Skip(f"delta^2 ||K|| = {t:.6g} exceeds 0.01")
    iso = _iso(ctx)
    f = conformal_factor_field(iso, ctx.sampling.rays, ctx.sampling.radial)
    dist = iso.delta - np.linalg.norm(f.points, axis=1)
    lhs = interior_weighted_norm(f, 2, ctx.alpha, 0.0, np.maximum(dist, 0.0)).value
    if t == 0.0:
        return [lhs], [0.0], ["<="], 1e-9, "curvature vanishes; phi must be 1"
    return [lhs / t], [None], ["finite"], 0.0, f"||phi-1||*={lhs:.6g}, delta^2||K||={t:.6g}; ratio is a C0 sample"


def _check_laplacian(ctx: _Ctx):
    ball = _ball(ctx, rays=ctx.sampling.rays, radial=LAPLACIAN_RADII)
    if not float(np.min(ctx.chart.inj(ball.points))) > ctx.delta:
        raise _Skip("radius not below the injectivity radius")
    kappa = _kappa(ball)
    s = math.sqrt(kappa)
    if not ctx.delta * s < math.pi:
        raise _Skip("radius beyond the first conjugate distance of the comparison sphere")
    r = ctx.delta * np.arange(1, LAPLACIAN_RADII + 1) / LAPLACIAN_RADII
    lap = laplacian_on_rays(ctx.chart, ctx.p0, r, ctx.sampling.rays)
    if s == 0.0:
        lo = hi = 1.0 / r
    else:
        lo = s / np.tan(r * s)
        hi = s / np.tanh(r * s)
    return ([float((lo[None] - lap).max()), float((lap - hi[None]).max())], [0.0, 0.0], ["<=", "<="], 1e-5,
            f"kappa={kappa:.6g}, {lap.size} samples")


# --------------------------------------------------------------------------
# intrinsic/extrinsic ratios


@dataclass
class SurfaceRatio:
    surface: str
    params: tuple
    rho_int: Optional[RadiusEstimate]
    rho_ext: Optional[RadiusEstimate]
    int_over_ext: object   # float, "unbounded" or None
    ext_over_int: object
    status: str = "complete"
    note: str = ""
    ext_candidates: dict = field(default_factory=dict, repr=False)

    def as_dict(self) -> dict:
        def rad(e):
            if e is None:
                return None
            return {"value": e.value, "capped": e.capped, "label": e.label, "candidate": e.candidate}

        return {"surface": self.surface, "params": list(self.params), "rho_int": rad(self.rho_int),
                "rho_ext_cert": rad(self.rho_ext),
                "int_over_ext": self.int_over_ext if isinstance(self.int_over_ext, str) else _num(self.int_over_ext),
                "ext_over_int": self.ext_over_int if isinstance(self.ext_over_int, str) else _num(self.ext_over_int),
                "status": self.status, "note": self.note}


def radius_ratio(num: RadiusEstimate, den: RadiusEstimate):
    """``num / den`` with the capped conventions: capped/capped = 1, capped/finite = "unbounded"."""
    if num.capped and den.capped:
        return 1.0
    if num.capped:
        return "unbounded"
    if den.capped:
        return 0.0 if num.value == 0 else num.value / den.value
    if den.value <= 0:
        return None
    return num.value / den.value


def surface_ratio(spec: SurfaceSpec, alpha: float, sampling: Sampling = Sampling(), p0=None) -> SurfaceRatio:
    chart = spec.chart()
    p0 = default_center(chart) if p0 is None else tuple(p0)
    q = sampling.query(chart, p0, alpha)
    try:
        ri = rho_int(q)
    except RegulusError as e:
        return SurfaceRatio(chart.label, spec.params, None, None, None, None, "incomplete", f"rho_int: {e}")
    try:
        ext = certify_rho_ext(q)
    except RegulusError as e:
        return SurfaceRatio(chart.label, spec.params, ri, None, None, None, "incomplete", f"rho_ext: {e}")
    re = ext.best
    if re.value <= 0:
        return SurfaceRatio(chart.label, spec.params, ri, re, None, None, "incomplete", "no chart certificate",
                            ext.candidates)
    return SurfaceRatio(chart.label, spec.params, ri, re, radius_ratio(ri, re), radius_ratio(re, ri),
                        ext_candidates=ext.candidates)


def _ratio_case(sr: SurfaceRatio, p0, alpha) -> CheckCase:
    vals = [v if isinstance(v, float) else None for v in (sr.int_over_ext, sr.ext_over_int)]
    case = CheckCase("thm-ratios", sr.surface, sr.params, p0, alpha, None, vals, [0.0, 0.0], [">", ">"], 0.0,
                     note=sr.note)
    if sr.status != "complete":
        case.status = "incomplete"
        return case
    case.status = "pass" if all(v is None or (math.isfinite(v) and v > 0) for v in vals) else "fail"
    marks = [n for n, v in zip(("int/ext", "ext/int"), (sr.int_over_ext, sr.ext_over_int)) if v == "unbounded"]
    if marks:
        case.note = "unbounded: " + ", ".join(marks)
    return case


# --------------------------------------------------------------------------
# driver


_CHECK_FUNCS: dict = {
    "delta-diam": _check_delta_diam,
    "eps14": _check_eps14,
    "lemma-curv": _check_lemma_curv,
    "convexity": _check_convexity,
    "prop24": _check_prop24,
    "thm31": _check_thm31,
    "prop36": _check_prop36,
    "comparison-laplacian": _check_laplacian,
}


def verify_case(check_id: str, surface, alpha: float, delta: Optional[float] = None, p0=None,
                sampling: Sampling = Sampling()) -> CheckCase:
    """Run one check; failures are repeated at 2x and 4x sampling before being reported."""
    if check_id not in CHECKS:
        raise ParameterError(f"unknown check id {check_id!r}; expected one of {', '.join(CHECK_IDS)}")
    spec = surface if isinstance(surface, SurfaceSpec) else None
    chart = spec.chart() if spec is not None else surface
    params = tuple(chart.params) if getattr(chart, "params", None) is not None else ()
    p0 = default_center(chart) if p0 is None else tuple(float(c) for c in p0)
    if check_id == "thm-ratios":
        if spec is None:
            spec = SurfaceSpec(chart.family, params)
        with seeded(sampling.seed):
            return _ratio_case(surface_ratio(spec, alpha, sampling, p0), p0, alpha)
    if delta is None or not delta > 0:
        raise ParameterError(f"check {check_id} needs a positive delta")
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    base = CheckCase(check_id, chart.label, params, p0, float(alpha), float(delta))
    factor = 1
    while True:
        ctx = _Ctx(chart, p0, alpha, float(delta), sampling.refined(factor))
        try:
            with seeded(sampling.seed):
                measured, bound, sense, slack, note = _CHECK_FUNCS[check_id](ctx)
        except _Skip as e:
            return replace(base, status="skipped", note=str(e), resolution=factor)
        case = replace(base, measured=[float(m) for m in measured], bound=bound, sense=sense, slack=slack,
                       note=note, resolution=factor)
        case.status = judge(case.measured, bound, sense, slack)
        if case.passed or factor >= MAX_REFINEMENT:
            return case
        factor *= 2


@dataclass
class RegularityReport:
    cases: list
    ratios: list
    min_ratio: Optional[float]
    min_ratio_ext_over_int: Optional[float]
    environment: dict

    @property
    def counts(self) -> dict:
        out = {s: 0 for s in STATUSES}
        for c in self.cases:
            out[c.status] += 1
        return out

    @property
    def failed(self) -> list:
        return [c for c in self.cases if c.status == "fail"]

    def as_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "environment": self.environment,
            "summary": self.counts,
            "min_ratio": _num(self.min_ratio),
            "min_ratio_ext_over_int": _num(self.min_ratio_ext_over_int),
            "ratios": [r.as_dict() for r in self.ratios],
            "cases": [c.as_dict() for c in self.cases],
            "checks": dict(CHECKS),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        width = max([len(c.measured) for c in self.cases] + [1])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["check_id", "surface", "alpha", "delta"]
                   + [f"measured_{k + 1}" for k in range(width)]
                   + [f"bound_{k + 1}" for k in range(width)] + ["pass"])
        for c in self.cases:
            def cells(xs):
                xs = [_cell(x) for x in xs]
                return xs + [""] * (width - len(xs))

            verdict = {"pass": "true", "fail": "false"}.get(c.status, c.status)
            w.writerow([c.check_id, c.surface, repr(float(c.alpha)), "" if c.delta is None else repr(c.delta)]
                       + cells(c.measured) + cells(c.bound) + [verdict])
        return buf.getvalue()


def _cell(x) -> str:
    v = _num(x)
    return "" if v is None else (v if isinstance(v, str) else repr(v))


def _min_defined(values):
    vals = [v for v in values if isinstance(v, float) and math.isfinite(v)]
    return min(vals) if vals else None


def verify_theorem_ratios(corpus: Sequence, alpha: float, sampling: Sampling = Sampling(),
                          threads: Optional[int] = None) -> RegularityReport:
    """rho_int and certified rho_ext per surface, ratios both ways and their minima."""
    if not 0 < alpha < 1:
        raise ParameterError("ratio report needs 0 < alpha < 1")
    specs = [_spec(s) for s in corpus]

    def job(spec):
        with seeded(sampling.seed):
            return surface_ratio(spec, alpha, sampling)

    ratios = _run_ordered(job, specs, threads)
    cases = [_ratio_case(r, default_center(s.chart()), alpha) for s, r in zip(specs, ratios)]
    return RegularityReport(cases, ratios, _min_defined(r.int_over_ext for r in ratios),
                            _min_defined(r.ext_over_int for r in ratios), _environment(alpha, sampling, "thm-ratios"))


def _spec(s) -> SurfaceSpec:
    if isinstance(s, SurfaceSpec):
        return s
    if isinstance(s, MetricChart):
        return SurfaceSpec(s.family, tuple(s.params or ()))
    name, *params = s
    return SurfaceSpec(name, tuple(params[0]) if params and isinstance(params[0], (tuple, list)) else tuple(params))


def worker_count(threads: Optional[int] = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("REGULUS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ParameterError(f"REGULUS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _run_ordered(fn: Callable, items: Sequence, threads: Optional[int]):
    n = min(worker_count(threads), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        futures = [pool.submit(contextvars.copy_context().run, fn, x) for x in items]
        return [f.result() for f in futures]


def _environment(alpha, sampling: Sampling, suite: str) -> dict:
    return {"version": __version__, "suite": suite, "alpha": alpha, "sampling": sampling.as_dict(),
            "max_refinement": MAX_REFINEMENT, "epsilon": EPSILON}


# per-surface suite -----------------------------------------------------------


def _suite_delta(cid: str, radii: "_Radii") -> float:
    """Ball radius at which check ``cid`` runs, derived from the surface's radii."""
    if cid in ("delta-diam", "eps14"):
        return radii.native.value
    if cid in ("lemma-curv", "convexity", "prop24"):
        return radii.eps_chart.value
    if cid == "thm31":
        return 0.3
    ri = radii.rho_int
    scale = 1.0 if ri.capped or not ri.value > 0 else ri.value
    return {"prop36": 0.1 * scale, "comparison-laplacian": 0.5 * scale}[cid]


class _Radii:
    """Per-surface radii, computed on first use."""

    def __init__(self, spec: SurfaceSpec, alpha: float, sampling: Sampling):
        self.spec, self.alpha, self.sampling = spec, alpha, sampling
        self.chart = spec.chart()
        self.p0 = default_center(self.chart)
        self.q = sampling.query(self.chart, self.p0, alpha)
        self._cache = {}

    def _get(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    @property
    def ratio(self) -> SurfaceRatio:
        return self._get("ratio", lambda: surface_ratio(self.spec, self.alpha, self.sampling, self.p0))

    @property
    def rho_int(self) -> RadiusEstimate:
        if "ratio" in self._cache and self.ratio.rho_int is not None:
            return self.ratio.rho_int
        return self._get("rho_int", lambda: rho_int(self.q))

    @property
    def native(self) -> RadiusEstimate:
        if "ratio" in self._cache and "native" in self.ratio.ext_candidates:
            return self.ratio.ext_candidates["native"]
        return self._get("native", lambda: certify_radius(self.q, "native", 1.0))

    @property
    def eps_chart(self) -> RadiusEstimate:
        return self._get("eps", lambda: certify_radius(self.q, "native", EPSILON))


def _surface_suite(spec: SurfaceSpec, alpha: float, checks: Sequence[str], sampling: Sampling):
    radii = _Radii(spec, alpha, sampling)
    label, p0 = radii.chart.label, radii.p0
    cases, sr = [], None
    with seeded(sampling.seed):
        for cid in checks:
            if cid == "thm-ratios":
                if not alpha < 1:
                    cases.append(CheckCase(cid, label, spec.params, p0, alpha, None, status="skipped",
                                           note="needs alpha < 1"))
                    continue
                sr = radii.ratio
                cases.append(_ratio_case(sr, p0, alpha))
                continue
            try:
                d = _suite_delta(cid, radii)
            except RegulusError as e:
                cases.append(CheckCase(cid, label, spec.params, p0, alpha, None, status="skipped",
                                       note=f"radius search failed: {e}"))
                continue
            if not d > 0:
                cases.append(CheckCase(cid, label, spec.params, p0, alpha, None, status="skipped",
                                       note="no certified radius to test at"))
                continue
            cases.append(verify_case(cid, spec, alpha, d, p0, sampling))
    return cases, sr


def run_suite(suite: str = "all", corpus: Sequence = DEFAULT_CORPUS, alpha: float = 0.5,
              sampling: Sampling = Sampling(), threads: Optional[int] = None) -> RegularityReport:
    """Run ``suite`` (``"all"`` or one check id) over ``corpus``; cases ordered by check, then surface."""
    if suite == "all":
        checks = CHECK_IDS
    elif suite in CHECKS:
        checks = (suite,)
    else:
        raise ParameterError(f"unknown suite {suite!r}; expected 'all' or one of {', '.join(CHECK_IDS)}")
    if not 0 < alpha <= 1:
        raise ParameterError("alpha must lie in (0, 1]")
    specs = [_spec(s) for s in corpus]
    # thm-ratios first so the other checks reuse its rho_int
    run_order = tuple(sorted(checks, key=lambda c: c != "thm-ratios"))
    results = _run_ordered(lambda s: _surface_suite(s, alpha, run_order, sampling), specs, threads)
    order = {c: k for k, c in enumerate(CHECK_IDS)}
    cases = [c for cs, _ in results for c in cs]
    idx = {id(c): n for n, c in enumerate(cases)}
    cases.sort(key=lambda c: (order[c.check_id], idx[id(c)]))
    ratios = [sr for _, sr in results if sr is not None]
    return RegularityReport(cases, ratios, _min_defined(r.int_over_ext for r in ratios),
                            _min_defined(r.ext_over_int for r in ratios), _environment(alpha, sampling, suite))
