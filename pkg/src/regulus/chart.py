"""Two-dimensional Riemannian metrics on planar chart domains.

A :class:`MetricChart` bundles a batched jet evaluator ``x -> (g, dg, d2g)``
with its domain and injectivity-radius metadata.  Array conventions used
throughout the package::

    g[..., i, j]          g_ij
    dg[..., l, i, j]      d_l g_ij
    d2g[..., l, m, i, j]  d_l d_m g_ij

Builtin surfaces (:func:`builtin_surface`) carry closed-form jets; charts
read from gridmetric files (:func:`load_grid_metric`) use bicubic
interpolation and central differences.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import (
    DomainError,
    GridFormatError,
    MetricDegeneracyError,
    ParameterError,
)

BOUNDARY_TOL = 1e-12

# perturbed-flat amplitudes up to this value are documented to have no
# conjugate points within the default 50-unit search cap (checked by the
# Jacobi cross-check in the test-suite); beyond it the injectivity radius
# is reported as unknown (nan).
PERTURBED_FLAT_AMPLITUDE_CAP = 0.05

SURFACE_NAMES = ("flat", "sphere", "hyperbolic", "polar-flat", "perturbed-flat")


class SymMatrix2(NamedTuple):
    a11: float
    a12: float
    a22: float

    def matrix(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]], dtype=float)

    @classmethod
    def from_matrix(cls, m) -> "SymMatrix2":
        m = np.asarray(m, dtype=float)
        return cls(float(m[0, 0]), float(0.5 * (m[0, 1] + m[1, 0])), float(m[1, 1]))


_PACK = ((0, 0), (0, 1), (1, 1))


@dataclass(frozen=True)
class MetricJet:
    """Value, first and second partial derivatives of g at one point."""

    g: np.ndarray
    dg: np.ndarray
    d2g: np.ndarray

    @property
    def metric(self) -> SymMatrix2:
        return SymMatrix2.from_matrix(self.g)

    @property
    def dg_packed(self) -> np.ndarray:
        """2x3 array: row l holds d_l (g11, g12, g22)."""
        return np.array([[self.dg[l, i, j] for i, j in _PACK] for l in range(2)])

    @property
    def d2g_packed(self) -> np.ndarray:
        """3x3 array: row (lm) in (11, 12, 22) order, column (ij) likewise."""
        return np.array(
            [[self.d2g[l, m, i, j] for i, j in _PACK] for l, m in _PACK]
        )


@dataclass(frozen=True)
class DomainRegion:
    """Rectangle ``(xmin, xmax, ymin, ymax)`` or disc ``(cx, cy, radius)``."""

    kind: str
    bounds: tuple

    def __post_init__(self):
        if self.kind == "rectangle":
            xmin, xmax, ymin, ymax = self.bounds
            if not (xmin < xmax and ymin < ymax):
                raise ParameterError(f"empty rectangle {self.bounds}")
        elif self.kind == "disc":
            if not self.bounds[2] > 0:
                raise ParameterError(f"empty disc {self.bounds}")
        else:
            raise ParameterError(f"unknown domain kind {self.kind!r}")

    def contains(self, pts, tol: float = BOUNDARY_TOL) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        if self.kind == "rectangle":
            xmin, xmax, ymin, ymax = self.bounds
            return (
                (x >= xmin - tol) & (x <= xmax + tol) & (y >= ymin - tol) & (y <= ymax + tol)
            )
        cx, cy, r = self.bounds
        return np.hypot(x - cx, y - cy) <= r + tol

    @property
    def diameter(self) -> float:
        if self.kind == "rectangle":
            xmin, xmax, ymin, ymax = self.bounds
            return math.hypot(xmax - xmin, ymax - ymin)
        return 2.0 * self.bounds[2]

    @property
    def extent(self) -> float:
        """Largest side length (rectangle) or diameter (disc)."""
        if self.kind == "rectangle":
            xmin, xmax, ymin, ymax = self.bounds
            return max(xmax - xmin, ymax - ymin)
        return 2.0 * self.bounds[2]

    def scaled(self, lam: float) -> "DomainRegion":
        return DomainRegion(self.kind, tuple(lam * b for b in self.bounds))


JetFn = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class MetricChart:
    """An immutable 2-D metric chart.

    ``jet_fn`` maps an ``(N, 2)`` array of chart points to the triple
    ``(g, dg, d2g)``; ``injectivity_radius`` maps points to lengths
    (``inf`` for unbounded, ``nan`` for unknown).
    """

    label: str
    domain: DomainRegion
    jet_fn: JetFn = field(repr=False)
    injectivity_radius: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    deriv_mode: str = "analytic"
    fd_step: Optional[float] = None
    family: str = "custom"
    params: tuple = ()
    coord_scale: float = 1.0
    # centre of rotational symmetry when g is conformal and radial about it
    symmetry_center: Optional[tuple] = None

    def __post_init__(self):
        if self.deriv_mode not in ("analytic", "finite-difference"):
            raise ParameterError(f"unknown deriv_mode {self.deriv_mode!r}")
        if self.deriv_mode == "finite-difference" and not self.fd_step:
            raise ParameterError("finite-difference charts must record their step")

    def jets(self, pts, check_domain: bool = False):
        """Batched jets at ``pts`` (shape ``(..., 2)``)."""
        pts = np.asarray(pts, dtype=float)
        shape = pts.shape[:-1]
        flat = pts.reshape(-1, 2)
        if check_domain:
            inside = self.domain.contains(flat)
            if not np.all(inside):
                bad = flat[~inside][0]
                raise DomainError(f"point {tuple(bad)} outside domain of {self.label}")
        g, dg, d2g = self.jet_fn(flat)
        _check_positive_definite(g, self.label)
        return (
            g.reshape(shape + (2, 2)),
            dg.reshape(shape + (2, 2, 2)),
            d2g.reshape(shape + (2, 2, 2, 2)),
        )

    def metric(self, pts) -> np.ndarray:
        return self.jets(pts)[0]

    def inj(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return np.asarray(self.injectivity_radius(pts.reshape(-1, 2))).reshape(pts.shape[:-1])


def _check_positive_definite(g, label):
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    ok = (g[..., 0, 0] > 0) & (det > 0) & np.isfinite(det)
    if not np.all(ok):
        raise MetricDegeneracyError(f"metric of {label} is not positive definite at some point")


def inverse_metric(g):
    """Closed-form inverse of a symmetric 2x2 matrix (or a stack of them).

    Accepts a :class:`SymMatrix2` (returns one) or an array ``(..., 2, 2)``.
    """
    as_sym = isinstance(g, SymMatrix2)
    m = g.matrix() if as_sym else np.asarray(g, dtype=float)
    a11, a12, a22 = m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]
    det = a11 * a22 - a12 * a12
    scale = np.maximum(np.abs(a11), np.abs(a22)) ** 2
    if np.any(~(det > 1e-14 * scale)):
        raise MetricDegeneracyError("matrix is singular or not positive definite")
    out = np.empty_like(m)
    out[..., 0, 0] = a22 / det
    out[..., 1, 1] = a11 / det
    out[..., 0, 1] = -a12 / det
    out[..., 1, 0] = -a12 / det
    return SymMatrix2.from_matrix(out) if as_sym else out


def eval_metric_jet(chart: MetricChart, p) -> MetricJet:
    p = np.asarray(p, dtype=float).reshape(1, 2)
    g, dg, d2g = chart.jets(p, check_domain=True)
    return MetricJet(g[0], dg[0], d2g[0])


# --------------------------------------------------------------------------
# jets of conformal metrics F(|x|^2) * delta_ij


def _conformal_radial_jets(x, F, Ft, Ftt):
    """Jets of g = F(t) I with t = |x|^2, given F, dF/dt, d2F/dt2 at t."""
    n = x.shape[0]
    eye = np.eye(2)
    dF = 2.0 * Ft[:, None] * x
    d2F = 4.0 * Ftt[:, None, None] * x[:, :, None] * x[:, None, :] + 2.0 * Ft[:, None, None] * eye
    g = F[:, None, None] * eye
    dg = dF[:, :, None, None] * eye
    d2g = d2F[:, :, :, None, None] * eye
    assert g.shape == (n, 2, 2)
    return g, dg, d2g


def _flat_jets(x):
    n = x.shape[0]
    g = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    return g, np.zeros((n, 2, 2, 2)), np.zeros((n, 2, 2, 2, 2))


def _sphere_jets(R):
    c = 4.0 * R * R

    def jets(x):
        t = np.einsum("ni,ni->n", x, x)
        u = 1.0 + t
        return _conformal_radial_jets(x, c / u**2, -2.0 * c / u**3, 6.0 * c / u**4)

    return jets


def _hyperbolic_jets(k):
    c = 4.0 / k

    def jets(x):
        t = np.einsum("ni,ni->n", x, x)
        u = 1.0 - t
        return _conformal_radial_jets(x, c / u**2, 2.0 * c / u**3, 6.0 * c / u**4)

    return jets


def bump_profile(u):
    """Smooth compactly supported bump ``B(u) = exp(1 - 1/(1-u))`` for u < 1.

    Returns ``(B, B', B'')`` as functions of ``u = |s|^2``; all vanish for
    ``u >= 1`` and ``B(0) = 1``.
    """
    u = np.asarray(u, dtype=float)
    inside = u < 1.0
    v = np.where(inside, 1.0 - u, 1.0)
    B = np.where(inside, np.exp(1.0 - 1.0 / v), 0.0)
    B1 = -B / v**2
    B2 = B * (1.0 / v**4 - 2.0 / v**3)
    return B, np.where(inside, B1, 0.0), np.where(inside, B2, 0.0)


def _perturbed_flat_jets(a, w):
    w2 = w * w

    def jets(x):
        t = np.einsum("ni,ni->n", x, x)
        B, B1, B2 = bump_profile(t / w2)
        return _conformal_radial_jets(x, 1.0 + a * B, a * B1 / w2, a * B2 / (w2 * w2))

    return jets


def _polar_flat_jets(x):
    n = x.shape[0]
    g = np.zeros((n, 2, 2))
    g[:, 0, 0] = 1.0
    g[:, 1, 1] = x[:, 0] ** 2
    dg = np.zeros((n, 2, 2, 2))
    dg[:, 0, 1, 1] = 2.0 * x[:, 0]
    d2g = np.zeros((n, 2, 2, 2, 2))
    d2g[:, 0, 0, 1, 1] = 2.0
    return g, dg, d2g


def _constant(value):
    def inj(x):
        return np.full(np.asarray(x).shape[:-1], value, dtype=float)

    return inj


def default_fd_step(domain: DomainRegion) -> float:
    return max(1e-5, 1e-4 * domain.extent)


def finite_difference_jets(value_fn, h: float) -> JetFn:
    """Central-difference jets from a batched metric-value function.

    Second derivatives are nested central differences (stencil spacing 2h).
    """

    def jets(x):
        n = x.shape[0]
        e = np.eye(2) * h
        g = value_fn(x)
        plus = [value_fn(x + e[l]) for l in range(2)]
        minus = [value_fn(x - e[l]) for l in range(2)]
        dg = np.empty((n, 2, 2, 2))
        for l in range(2):
            dg[:, l] = (plus[l] - minus[l]) / (2.0 * h)
        d2g = np.empty((n, 2, 2, 2, 2))
        for l in range(2):
            d2g[:, l, l] = (value_fn(x + 2 * e[l]) - 2.0 * g + value_fn(x - 2 * e[l])) / (4.0 * h * h)
        mixed = (
            value_fn(x + e[0] + e[1])
            - value_fn(x + e[0] - e[1])
            - value_fn(x - e[0] + e[1])
            + value_fn(x - e[0] - e[1])
        ) / (4.0 * h * h)
        d2g[:, 0, 1] = mixed
        d2g[:, 1, 0] = mixed
        return g, dg, d2g

    return jets


def builtin_surface(
    name: str,
    params=(),
    deriv_mode: str = "analytic",
    fd_step: Optional[float] = None,
) -> MetricChart:
    """Construct one of the analytic corpus surfaces.

    ============== ============ ==================================================
    name           params       metric
    ============== ============ ==================================================
    flat           ()           identity on [-100, 100]^2
    sphere         (R,)         4 R^2 / (1 + |x|^2)^2 * I, stereographic, |x| < 100
    hyperbolic     (k,)         4 / (k (1 - |x|^2)^2) * I, Poincare disc |x| < 0.999
    polar-flat     ()           diag(1, x1^2) on [0.05, 20] x [-pi, pi]
    perturbed-flat (a, w)       (1 + a B(|x|^2 / w^2)) * I on [-100, 100]^2
    ============== ============ ==================================================

    ``B`` is :func:`bump_profile`.  Gauss curvature is ``1/R^2`` on the
    sphere and ``-k`` on the hyperbolic chart.
    """
    params = tuple(float(p) for p in params)
    inj_inf = _constant(math.inf)
    sym = None
    if name == "flat":
        _expect(name, params, 0)
        jets, dom, inj = _flat_jets, DomainRegion("rectangle", (-100.0, 100.0, -100.0, 100.0)), inj_inf
        sym = (0.0, 0.0)
    elif name == "sphere":
        (R,) = _expect(name, params, 1, default=(1.0,))
        if not R > 0:
            raise ParameterError(f"sphere radius must be positive, got {R}")
        params = (R,)
        jets, dom, inj = _sphere_jets(R), DomainRegion("disc", (0.0, 0.0, 100.0)), _constant(math.pi * R)
        sym = (0.0, 0.0)
    elif name == "hyperbolic":
        (k,) = _expect(name, params, 1, default=(1.0,))
        if not k > 0:
            raise ParameterError(f"hyperbolic curvature magnitude must be positive, got {k}")
        params = (k,)
        jets, dom, inj = _hyperbolic_jets(k), DomainRegion("disc", (0.0, 0.0, 0.999)), inj_inf
        sym = (0.0, 0.0)
    elif name == "polar-flat":
        _expect(name, params, 0)
        jets, dom, inj = _polar_flat_jets, DomainRegion("rectangle", (0.05, 20.0, -math.pi, math.pi)), inj_inf
    elif name == "perturbed-flat":
        a, w = _expect(name, params, 2, default=(0.005, 1.0))
        if not (a >= 0 and w > 0):
            raise ParameterError(f"perturbed-flat needs a >= 0 and w > 0, got a={a}, w={w}")
        params = (a, w)
        jets = _perturbed_flat_jets(a, w)
        dom = DomainRegion("rectangle", (-100.0, 100.0, -100.0, 100.0))
        inj = inj_inf if a <= PERTURBED_FLAT_AMPLITUDE_CAP else _constant(math.nan)
        sym = (0.0, 0.0)
    else:
        raise ParameterError(f"unknown surface {name!r}; choose from {', '.join(SURFACE_NAMES)}")

    label = name if not params else f"{name}(" + ", ".join(f"{p:g}" for p in params) + ")"
    chart = MetricChart(
        label=label,
        domain=dom,
        jet_fn=jets,
        injectivity_radius=inj,
        family=name,
        params=params,
        symmetry_center=sym,
    )
    if deriv_mode == "finite-difference":
        chart = with_finite_differences(chart, fd_step)
    elif deriv_mode != "analytic":
        raise ParameterError(f"unknown deriv_mode {deriv_mode!r}")
    return chart


def _expect(name, params, n, default=None):
    if len(params) == 0 and default is not None:
        return default
    if len(params) != n:
        raise ParameterError(f"surface {name!r} takes {n} parameter(s), got {len(params)}")
    return params


def with_finite_differences(chart: MetricChart, h: Optional[float] = None) -> MetricChart:
    """Same metric, derivatives replaced by central differences of g."""
    h = default_fd_step(chart.domain) if h is None else float(h)
    analytic = chart.jet_fn

    def value_fn(x):
        return analytic(x)[0]

    return replace(chart, jet_fn=finite_difference_jets(value_fn, h), deriv_mode="finite-difference", fd_step=h)


def rescale_chart(chart: MetricChart, lam: float) -> MetricChart:
    """Reparametrise by ``y = lam * x``; the metric (and K) is unchanged."""
    if not lam > 0:
        raise ParameterError("scale factor must be positive")
    base = chart.jet_fn

    def jets(y):
        g, dg, d2g = base(y / lam)
        return g / lam**2, dg / lam**3, d2g / lam**4

    base_inj = chart.injectivity_radius
    sym = None if chart.symmetry_center is None else tuple(lam * c for c in chart.symmetry_center)
    return replace(
        chart,
        label=f"{chart.label}*{lam:g}",
        domain=chart.domain.scaled(lam),
        jet_fn=jets,
        injectivity_radius=lambda y: base_inj(y / lam),
        coord_scale=chart.coord_scale * lam,
        fd_step=None if chart.fd_step is None else chart.fd_step * lam,
        symmetry_center=sym,
    )


# --------------------------------------------------------------------------
# gridmetric v1

_HEADER = re.compile(r"^#\s*gridmetric\s+v1\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s+(\S+)\s*$")


def write_grid_metric(path, chart: MetricChart, nx: int, ny: int, x0: float, y0: float, dx: float, dy: float):
    """Sample ``chart`` on a regular grid and write a gridmetric v1 file.

    Rows are written with y outer and x inner (``line = j * nx + i``).
    """
    xs = x0 + dx * np.arange(nx)
    ys = y0 + dy * np.arange(ny)
    X, Y = np.meshgrid(xs, ys)  # shape (ny, nx): row-major, x fastest
    g = chart.metric(np.stack([X, Y], axis=-1).reshape(-1, 2))
    lines = [f"# gridmetric v1 {nx} {ny} {float(x0)!r} {float(y0)!r} {float(dx)!r} {float(dy)!r}"]
    for m in g:
        lines.append(f"{float(m[0, 0])!r} {float(m[0, 1])!r} {float(m[1, 1])!r}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid_samples(path):
    """Parse a gridmetric file into ``(xs, ys, G)`` with ``G`` of shape (nx, ny, 3)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise GridFormatError("empty gridmetric file")
    m = _HEADER.match(lines[0])
    if m is None:
        raise GridFormatError(f"malformed gridmetric header: {lines[0]!r}")
    try:
        nx, ny = int(m.group(1)), int(m.group(2))
        x0, y0, dx, dy = (float(m.group(i)) for i in range(3, 7))
    except ValueError as exc:
        raise GridFormatError(f"malformed gridmetric header: {lines[0]!r}") from exc
    if nx < 4 or ny < 4 or not (dx > 0 and dy > 0):
        raise GridFormatError("gridmetric needs nx, ny >= 4 and positive spacings")
    body = lines[1:]
    if len(body) != nx * ny:
        raise GridFormatError(f"expected {nx * ny} data lines, found {len(body)}")
    vals = np.empty((nx * ny, 3))
    for n, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise GridFormatError(f"data line {n + 2}: expected 3 values, got {len(parts)}")
        try:
            vals[n] = [float(p) for p in parts]
        except ValueError as exc:
            raise GridFormatError(f"data line {n + 2}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise GridFormatError("gridmetric contains NaN or infinite entries")
    det = vals[:, 0] * vals[:, 2] - vals[:, 1] ** 2
    if np.any(~((vals[:, 0] > 0) & (det > 0))):
        bad = int(np.flatnonzero(~((vals[:, 0] > 0) & (det > 0)))[0])
        raise MetricDegeneracyError(f"gridmetric sample on data line {bad + 2} is not positive definite")
    G = vals.reshape(ny, nx, 3).transpose(1, 0, 2)
    xs = x0 + dx * np.arange(nx)
    ys = y0 + dy * np.arange(ny)
    return xs, ys, G


def load_grid_metric(path, injectivity_radius: float = math.nan) -> MetricChart:
    """Chart backed by bicubic interpolation of gridmetric samples.

    Derivatives come from central differences of the interpolant at step
    ``max(1e-5, 1e-4 * extent)``.  Evaluations that land exactly on a grid
    node return the stored sample unchanged.
    """
    xs, ys, G = read_grid_samples(path)
    splines = [RectBivariateSpline(xs, ys, G[:, :, c], kx=3, ky=3, s=0) for c in range(3)]
    x0, dx, y0, dy = xs[0], xs[1] - xs[0], ys[0], ys[1] - ys[0]
    nx, ny = len(xs), len(ys)

    def value_fn(x):
        comps = np.stack([s.ev(x[:, 0], x[:, 1]) for s in splines], axis=-1)
        fi = (x[:, 0] - x0) / dx
        fj = (x[:, 1] - y0) / dy
        ii, jj = np.rint(fi).astype(int), np.rint(fj).astype(int)
        node = (
            (np.abs(fi - ii) < 1e-12) & (np.abs(fj - jj) < 1e-12)
            & (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < ny)
        )
        if np.any(node):
            comps[node] = G[ii[node], jj[node]]
        g = np.empty((x.shape[0], 2, 2))
        g[:, 0, 0] = comps[:, 0]
        g[:, 0, 1] = g[:, 1, 0] = comps[:, 1]
        g[:, 1, 1] = comps[:, 2]
        return g

    dom = DomainRegion("rectangle", (xs[0], xs[-1], ys[0], ys[-1]))
    h = default_fd_step(dom)
    return MetricChart(
        label=f"grid:{path}",
        domain=dom,
        jet_fn=finite_difference_jets(value_fn, h),
        injectivity_radius=_constant(injectivity_radius),
        deriv_mode="finite-difference",
        fd_step=h,
        family="grid",
    )
