"""Command-line front end.

    regulus surfaces
    regulus curvature --surface hyperbolic --k 1 --at 0.5,0
    regulus rho-int --surface sphere --R 1 --alpha 0.5
    regulus verify --suite all --alpha 0.5 --out report.json

Exit status: 0 success, 1 failed check or computation, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .chart import MetricChart, builtin_surface, load_grid_metric
from .errors import DomainError, GridFormatError, ParameterError, RegulusError
from .geodesic import geodesic_ball, riemann_distance
from .harness import (
    CHECK_IDS,
    DEFAULT_CORPUS,
    Sampling,
    SurfaceSpec,
    conformal_factor_field,
    default_center,
    run_suite,
    verify_theorem_ratios,
)
from .holder import curvature_norm, interior_weighted_norm, seeded
from .isothermal import build_isothermal_chart
from .radius import (
    RegularityQuery,
    certify_rho_ext,
    check_chart_certificate,
    native_chart_samples,
    rho_int,
)
from .tensor import curvature_at, curvature_field

SURFACES = {
    "flat": ("", "Euclidean plane"),
    "sphere": ("--R", "round sphere of radius R, stereographic chart"),
    "hyperbolic": ("--k", "curvature -k, Poincare disc chart"),
    "polar-flat": ("", "Euclidean plane in polar coordinates"),
    "perturbed-flat": ("--a --w", "flat metric times (1 + a * bump(|x|^2 / w^2))"),
}
SINGLE_SAMPLING = (64, 64)   # rays, radial for single computations


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _point(text: str) -> np.ndarray:
    try:
        parts = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"expected x,y but got {text!r}") from None
    if len(parts) != 2 or not all(np.isfinite(parts)):
        raise UsageError(f"expected two finite coordinates x,y but got {text!r}")
    return np.array(parts)


def _surface_params(args) -> tuple:
    name = args.surface
    if name == "sphere":
        return (args.R,)
    if name == "hyperbolic":
        return (args.k,)
    if name == "perturbed-flat":
        return (args.a, args.w)
    return ()


def _chart(args) -> MetricChart:
    if args.grid is not None:
        return load_grid_metric(args.grid)
    if args.surface is None:
        raise UsageError("--surface (or --grid) is required")
    return builtin_surface(args.surface, _surface_params(args))


def _sampling(args, default) -> tuple:
    rays = default[0] if args.rays is None else args.rays
    radial = default[1] if args.radial is None else args.radial
    return rays, radial


def _validate(args):
    if args.alpha is not None and not 0 < args.alpha <= 1:
        raise UsageError("--alpha must lie in (0, 1]")
    for flag in ("rays", "radial"):
        v = getattr(args, flag, None)
        if v is not None and v < 8:
            raise UsageError(f"--{flag} must be at least 8")
    if getattr(args, "grid_n", None) is not None and args.grid_n < 8:
        raise UsageError("--grid-n must be at least 8")
    if not 0 < args.tol < 0.1:
        raise UsageError("--tol must lie in (0, 0.1)")


def _emit(args, text: str, payload: dict):
    """Write ``payload`` (json) or ``text`` to --out or stdout."""
    out = json.dumps(payload, indent=2, allow_nan=False) + "\n" if args.format == "json" else text + "\n"
    if args.out:
        Path(args.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)


# --------------------------------------------------------------------------
# commands


def cmd_surfaces(args) -> int:
    lines = [f"{name:<15} {flags:<8} {desc}" for name, (flags, desc) in SURFACES.items()]
    _emit(args, "\n".join(lines), {"surfaces": [{"name": n, "params": f.split(), "description": d}
                                                for n, (f, d) in SURFACES.items()]})
    return 0


def cmd_curvature(args) -> int:
    chart = _chart(args)
    p = _point(args.at) if args.at else np.array(default_center(chart))
    K = float(curvature_at(chart, p[None, :])[0])
    _emit(args, _fmt(K), {"surface": chart.label, "at": p.tolist(), "K": K})
    return 0


def cmd_distance(args) -> int:
    chart = _chart(args)
    if not args.at:
        raise UsageError("distance needs --at x,y (and optionally --p0)")
    p = _point(args.p0) if args.p0 else np.array(default_center(chart))
    q = _point(args.at)
    d = riemann_distance(chart, p, q)
    _emit(args, _fmt(d), {"surface": chart.label, "p0": p.tolist(), "at": q.tolist(), "distance": d})
    return 0


def cmd_norm(args) -> int:
    chart = _chart(args)
    if args.delta is None:
        raise UsageError("norm needs --delta")
    p0 = _point(args.p0) if args.p0 else np.array(default_center(chart))
    rays, radial = _sampling(args, SINGLE_SAMPLING)
    alpha = args.alpha
    if args.kind == "curvature":
        ball = geodesic_ball(chart, p0, args.delta, rays, radial)
        est = curvature_norm(ball, curvature_field(chart, ball), alpha, args.delta)
        value, comps = est.value, est.components
    elif args.kind == "metric":
        cert = check_chart_certificate(native_chart_samples(chart, p0, args.delta, rays, radial), alpha, 1.0)
        comps = {f"g{i}{j}": e.value for (i, j), e in cert.measured_norms.items()}
        value = cert.max_norm
    else:
        iso = build_isothermal_chart(chart, p0, args.delta)
        f = conformal_factor_field(iso, rays, radial)
        dist = np.maximum(args.delta - np.linalg.norm(f.points, axis=1), 0.0)
        est = interior_weighted_norm(f, 2, alpha, 0.0, dist)
        value, comps = est.value, est.components
    _emit(args, _fmt(value), {"surface": chart.label, "kind": args.kind, "p0": p0.tolist(), "delta": args.delta,
                              "alpha": alpha, "value": value, "components": comps})
    return 0


def _query(args, chart) -> RegularityQuery:
    p0 = tuple(_point(args.p0)) if args.p0 else default_center(chart)
    rays, radial = _sampling(args, SINGLE_SAMPLING)
    return RegularityQuery(chart, p0, args.alpha, rays, radial, args.tol)


def _radius_text(name: str, est, extra: str = "") -> str:
    rel = ">=" if est.capped else "="
    return f"{name} {rel} {_fmt(est.value)}  ({est.label}{extra})"


def cmd_rho_int(args) -> int:
    chart = _chart(args)
    est = rho_int(_query(args, chart))
    _emit(args, _radius_text("rho_int", est), {"surface": chart.label, "rho_int": est.value,
                                               "capped": est.capped, "label": est.label, "limit": est.limit})
    return 0


def cmd_rho_ext(args) -> int:
    chart = _chart(args)
    res = certify_rho_ext(_query(args, chart))
    best = res.best
    extra = f"; {best.candidate} chart" if best.candidate else ""
    _emit(args, _radius_text("rho_ext", best, extra),
          {"surface": chart.label, "rho_ext_cert": best.value, "capped": best.capped, "label": best.label,
           "candidate": best.candidate,
           "candidates": {k: {"value": v.value, "capped": v.capped, "label": v.label}
                          for k, v in res.candidates.items()}})
    return 0


def _harness_sampling(args) -> Sampling:
    base = Sampling()
    rays, radial = _sampling(args, (base.rays, base.radial))
    grid_n = base.grid_n if args.grid_n is None else args.grid_n
    return Sampling(rays=rays, radial=radial, tol=args.tol, grid_n=grid_n, seed=args.seed)


def _corpus(args):
    if args.surface is None:
        return DEFAULT_CORPUS
    return (SurfaceSpec(args.surface, _surface_params(args)),)


def _write_report(args, report) -> None:
    fmt = args.format
    if fmt == "text" and args.out:
        fmt = "csv" if args.out.endswith(".csv") else "json"
    body = report.to_csv() if fmt == "csv" else report.to_json() if fmt == "json" else None
    if args.out:
        Path(args.out).write_text(body, encoding="utf-8")
    elif body is not None:
        sys.stdout.write(body)


def _summary_lines(report) -> list:
    lines = []
    for c in report.cases:
        vals = ", ".join("undefined" if m is None else f"{m:.6g}" for m in c.measured)
        lines.append(f"{c.status.upper():<10} {c.check_id:<21} {c.surface:<26} [{vals}]"
                     + (f"  {c.note}" if c.status in ("skipped", "incomplete") else ""))
    counts = report.counts
    lines.append(" ".join(f"{k}={v}" for k, v in counts.items()))
    return lines


def cmd_verify(args) -> int:
    if args.grid is not None:
        raise UsageError("verify runs on builtin surfaces only")
    report = run_suite(args.suite, _corpus(args), args.alpha, _harness_sampling(args))
    _write_report(args, report)
    if args.out or args.format == "text":
        sys.stdout.write("\n".join(_summary_lines(report)) + "\n")
    return 1 if report.failed else 0


def cmd_report(args) -> int:
    if args.grid is not None:
        raise UsageError("report runs on builtin surfaces only")
    if not args.alpha < 1:
        raise UsageError("the ratio report needs --alpha < 1")
    sampling = _harness_sampling(args)
    report = verify_theorem_ratios(_corpus(args), args.alpha, sampling)
    _write_report(args, report)
    if args.out or args.format == "text":
        for r in report.ratios:
            ri = "n/a" if r.rho_int is None else ("capped" if r.rho_int.capped else _fmt(r.rho_int.value))
            re = "n/a" if r.rho_ext is None else ("capped" if r.rho_ext.capped else _fmt(r.rho_ext.value))
            a = r.int_over_ext if isinstance(r.int_over_ext, str) or r.int_over_ext is None else _fmt(r.int_over_ext)
            b = r.ext_over_int if isinstance(r.ext_over_int, str) or r.ext_over_int is None else _fmt(r.ext_over_int)
            sys.stdout.write(f"{r.surface:<26} rho_int={ri:<10} rho_ext={re:<10} int/ext={a} ext/int={b} {r.status}\n")
        m = report.min_ratio
        sys.stdout.write(f"min int/ext = {'n/a' if m is None else _fmt(m)}\n")
    return 1 if report.failed else 0


COMMANDS = {
    "surfaces": cmd_surfaces,
    "curvature": cmd_curvature,
    "norm": cmd_norm,
    "distance": cmd_distance,
    "rho-int": cmd_rho_int,
    "rho-ext": cmd_rho_ext,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("surface")
    g.add_argument("--surface", choices=sorted(SURFACES))
    g.add_argument("--grid", metavar="PATH", help="gridmetric file instead of a builtin surface")
    g.add_argument("--R", type=float, default=1.0, help="sphere radius")
    g.add_argument("--k", type=float, default=1.0, help="hyperbolic curvature magnitude")
    g.add_argument("--a", type=float, default=0.005, help="bump amplitude")
    g.add_argument("--w", type=float, default=1.0, help="bump width")
    c = common.add_argument_group("computation")
    c.add_argument("--at", help="evaluation point x,y")
    c.add_argument("--p0", help="ball centre x,y (default: the surface's centre)")
    c.add_argument("--alpha", type=float, default=0.5)
    c.add_argument("--delta", type=float)
    c.add_argument("--rays", type=int, help="geodesic rays per ball (default 64; 32 for verify/report)")
    c.add_argument("--radial", type=int, help="radial samples per ray (default 64; 32 for verify/report)")
    c.add_argument("--grid-n", type=int, dest="grid_n")
    c.add_argument("--tol", type=float, default=1e-3, help="relative bisection tolerance")
    c.add_argument("--seed", type=lambda s: int(s, 0), default=0x5EED, help="seed for pair subsampling")
    o = common.add_argument_group("output")
    o.add_argument("--out", help="output file (overwritten)")
    o.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = argparse.ArgumentParser(prog="regulus", description="Regularity radii of surface metrics.")
    p.add_argument("--version", action="version", version=f"regulus {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    sub.required = True
    helps = {
        "surfaces": "list builtin surfaces",
        "curvature": "Gauss curvature at a point",
        "norm": "a Hoelder-type norm on a geodesic ball",
        "distance": "Riemannian distance between two points",
        "rho-int": "intrinsic regularity radius",
        "rho-ext": "certified lower bound on the extrinsic radius",
        "verify": "run inequality checks and write a report",
        "report": "intrinsic/extrinsic ratio report",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "norm":
            sp.add_argument("--kind", choices=("curvature", "metric", "conformal"), default="curvature")
        if name == "verify":
            sp.add_argument("--suite", choices=("all",) + CHECK_IDS, default="all")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        if args.format == "csv" and args.command not in ("verify", "report"):
            raise UsageError("csv output is available for verify and report")
        with seeded(args.seed):
            return COMMANDS[args.command](args)
    except (UsageError, ParameterError, DomainError, GridFormatError) as e:
        parser.print_usage(sys.stderr)
        print(f"regulus: error: {e}", file=sys.stderr)
        return 2
    except RegulusError as e:
        print(f"regulus: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
