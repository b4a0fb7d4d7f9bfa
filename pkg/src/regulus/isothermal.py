"""Isothermal charts z: B(p0, delta) -> delta * closed unit disc.

Two constructions:

* ``analytic`` for the flat, sphere and hyperbolic builtins: a disc/sphere
  automorphism moves p0 to the origin, then a dilation sends the image of
  the geodesic ball onto the disc of radius delta.
* ``radial-ode`` for metrics conformal and radial about their symmetry
  centre, written dr^2 + psi(r)^2 dtheta^2 in geodesic polar coordinates.
  psi solves the Jacobi equation along a ray and the conformal radius is
  rho(r) = delta * exp(int_delta^r dt / psi(t)).

Both normalise rotation so that the +x1 ray from p0 lands on the positive
real axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .chart import MetricChart, _conformal_radial_jets
from .errors import MetricDegeneracyError, ParameterError, PreconditionError, UnsupportedConstructionError
from .geodesic import _quad
from .integrate import integrate
from .tensor import christoffel_arrays, curvature_at, gauss_curvature_arrays

DISTORTION_SEED = 0x5EED
ANALYTIC_FAMILIES = ("flat", "sphere", "hyperbolic")


@dataclass(frozen=True)
class IsothermalChart:
    """Conformal chart with ``g = phi(z) |dz|^2``.

    ``phi_jet(z)`` returns ``(phi, dphi (N, 2), d2phi (N, 3))`` with the
    second derivatives packed as (11, 12, 22).
    """

    forward: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], np.ndarray]
    phi_jet: Callable[[np.ndarray], tuple]
    delta: float
    construction: str
    center: tuple = (0.0, 0.0)
    chart: Optional[MetricChart] = None

    def phi(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return self.phi_jet(z.reshape(-1, 2))[0].reshape(z.shape[:-1])

    @classmethod
    def from_conformal_factor(cls, phi: Callable, delta: float, phi_jet: Optional[Callable] = None):
        """Wrap a known conformal factor on delta * D (the chart is z itself)."""

        def ident(z):
            return np.asarray(z, dtype=float)

        if phi_jet is None:
            def phi_jet(z):
                return _fd_phi_jet(phi, z, 1e-4 * delta)

        return cls(ident, ident, phi_jet, float(delta), "given")


def _fd_phi_jet(phi, z, h):
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    e = np.eye(2) * h
    f0 = phi(z)
    d1 = np.stack([(phi(z + e[l]) - phi(z - e[l])) / (2 * h) for l in range(2)], axis=1)
    d11 = (phi(z + e[0]) - 2 * f0 + phi(z - e[0])) / h**2
    d22 = (phi(z + e[1]) - 2 * f0 + phi(z - e[1])) / h**2
    d12 = (phi(z + e[0] + e[1]) - phi(z + e[0] - e[1]) - phi(z - e[0] + e[1]) + phi(z - e[0] - e[1])) / (4 * h * h)
    return f0, d1, np.stack([d11, d12, d22], axis=1)


def _pack_hessian(d2):
    return np.stack([d2[:, 0, 0], d2[:, 0, 1], d2[:, 1, 1]], axis=1)


def _as_complex(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0] + 1j * x[..., 1]


def _as_real(w):
    return np.stack([w.real, w.imag], axis=-1)


# --------------------------------------------------------------------------
# analytic construction


def _analytic(chart: MetricChart, p0, delta: float) -> IsothermalChart:
    fam = chart.family
    c = chart.coord_scale
    a = complex(p0[0], p0[1]) / c
    if fam == "flat":
        lam = 1.0

        def F(t):
            return np.ones_like(t), np.zeros_like(t), np.zeros_like(t)

        def mob(u):
            return u - a

        def mob_inv(w):
            return w + a

    elif fam == "sphere":
        (R,) = chart.params
        if delta >= math.pi * R:
            raise PreconditionError("ball radius must stay below pi R")
        lam = math.tan(delta / (2 * R)) / delta

        def F(t):
            u = 1.0 + t
            k = 4.0 * R * R
            return k / u**2, -2.0 * k / u**3, 6.0 * k / u**4

        def mob(u):
            return (u - a) / (1 + np.conj(a) * u)

        def mob_inv(w):
            return (w + a) / (1 - np.conj(a) * w)

    elif fam == "hyperbolic":
        (k,) = chart.params
        lam = math.tanh(delta * math.sqrt(k) / 2) / delta

        def F(t):
            u = 1.0 - t
            q = 4.0 / k
            return q / u**2, 2.0 * q / u**3, 6.0 * q / u**4

        def mob(u):
            return (u - a) / (1 - np.conj(a) * u)

        def mob_inv(w):
            return (w + a) / (1 + np.conj(a) * w)

    else:
        raise UnsupportedConstructionError(f"no analytic isothermal chart for {chart.label}")

    def forward(x):
        return _as_real(mob(_as_complex(x) / c) / lam)

    def inverse(z):
        return _as_real(mob_inv(lam * _as_complex(z)) * c)

    def phi_jet(z):
        z = np.asarray(z, dtype=float).reshape(-1, 2)
        t = lam * lam * np.einsum("ni,ni->n", z, z)
        f, f1, f2 = F(t)
        l2 = lam * lam
        g, dg, d2g = _conformal_radial_jets(z, l2 * f, l2 * l2 * f1, l2**3 * f2)
        return g[:, 0, 0], dg[:, :, 0, 0], _pack_hessian(d2g[:, :, :, 0, 0])

    return IsothermalChart(forward, inverse, phi_jet, float(delta), "analytic", tuple(map(float, p0)), chart)


# --------------------------------------------------------------------------
# radial ODE construction


_PROFILE_CACHE: dict = {}
PROFILE_POINTS = 2000


def _radial_profile(chart: MetricChart, p0: np.ndarray, r_max: float) -> dict:
    """Geodesic-polar data along the +x1 ray from ``p0`` on a log-spaced radius grid.

    Columns: r, J (= psi), m = J' - 1, L = int_0^r (1/J - 1/t) dt, chart radius
    xi and K, with the centre prepended.
    """
    key = (id(chart), float(p0[0]), float(p0[1]))
    hit = _PROFILE_CACHE.get(key)
    if hit is not None and hit[0] is chart and hit[1]["r"][-1] >= r_max:
        return hit[1]
    g0 = chart.metric(p0[None, :])[0]
    if abs(g0[0, 1]) > 1e-12 * g0[0, 0] or abs(g0[0, 0] - g0[1, 1]) > 1e-12 * g0[0, 0]:
        raise UnsupportedConstructionError("metric is not conformal at the symmetry centre")
    K0 = float(curvature_at(chart, p0[None, :])[0])
    jet_fn = chart.jet_fn
    dom = chart.domain

    # state: x1, x2, v1, v2, t, n = J - t, m = J' - 1, L
    def rhs(y):
        g, dg, d2g = jet_fn(y[:, :2])
        G = christoffel_arrays(g, dg)
        K = gauss_curvature_arrays(g, dg, d2g)
        v = y[:, 2:4]
        t, n, m = y[:, 4], y[:, 5], y[:, 6]
        J = t + n
        out = np.empty_like(y)
        out[:, :2] = v
        out[:, 2:4] = -_quad(G, v, v)
        out[:, 4] = 1.0
        out[:, 5] = m
        out[:, 6] = -K * J
        out[:, 7] = -n / (J * t)
        return out

    # series start; the relative truncation error is O(t0^2)
    t0 = 1e-7 * r_max
    u = np.array([1.0, 0.0]) / math.sqrt(g0[0, 0])
    y0 = np.zeros((1, 8))
    y0[0, :2] = p0 + t0 * u
    y0[0, 2:4] = u
    y0[0, 4] = t0
    y0[0, 5] = -K0 * t0**3 / 6
    y0[0, 6] = -K0 * t0**2 / 2
    y0[0, 7] = K0 * t0**2 / 12
    r_grid = np.geomspace(t0, r_max, PROFILE_POINTS)
    sol = integrate(rhs, y0, r_max - t0, t_out=r_grid - t0, rtol=1e-12, atol=1e-16,
                    max_step=(r_max - t0) / 64, inside=lambda y: dom.contains(y[:, :2]))
    if sol.exited[0]:
        raise PreconditionError(f"radial construction leaves the domain of {chart.label}")
    Y = sol.y_out[:, 0, :]
    prof = {
        "r": np.r_[0.0, Y[:, 4]],
        "J": np.r_[0.0, Y[:, 4] + Y[:, 5]],
        "m": np.r_[0.0, Y[:, 6]],
        "L": np.r_[0.0, Y[:, 7]],
        "xi": np.r_[0.0, np.linalg.norm(Y[:, :2] - p0, axis=1)],
        "K": np.r_[K0, curvature_at(chart, Y[:, :2])],
    }
    if len(_PROFILE_CACHE) > 64:
        _PROFILE_CACHE.clear()
    _PROFILE_CACHE[key] = (chart, prof)
    return prof


def _radial_ode(chart: MetricChart, p0, delta: float) -> IsothermalChart:
    p0 = np.asarray(p0, dtype=float)
    prof = _radial_profile(chart, p0, delta)
    r_all = prof["r"]
    keep = r_all < delta * (1 - 1e-12)
    at_delta = {k: float(CubicSpline(r_all, v)(delta)) for k, v in prof.items() if k != "r"}
    r = np.r_[r_all[keep], delta]
    J, m, L, xi, Kr = (np.r_[prof[k][keep], at_delta[k]] for k in ("J", "m", "L", "xi", "K"))
    K0 = Kr[0]
    Ld = L[-1]
    expo = np.exp(L - Ld)
    rho = r * expo
    Phi0 = math.exp(2 * Ld)
    with np.errstate(divide="ignore", invalid="ignore"):
        Phi = np.where(r > 0, (J / np.where(r > 0, r, 1.0)) ** 2 / expo**2, Phi0)
        # Phi_rho / rho
        q = np.where(r > 0, 2.0 * Phi * (m / np.where(r > 0, r, 1.0) ** 2) / expo**2, -K0 * Phi0**2)

    s_rho_Phi = CubicSpline(rho, Phi)
    s_rho_q = CubicSpline(rho, q)
    s_rho_m = CubicSpline(rho, m)
    s_rho_K = CubicSpline(rho, Kr)
    s_xi_rho = CubicSpline(xi, rho)
    s_rho_xi = CubicSpline(rho, xi)

    def forward(x):
        x = np.asarray(x, dtype=float)
        d = x - p0
        s = np.linalg.norm(d, axis=-1)
        scale = np.where(s > 0, s_xi_rho(s) / np.where(s > 0, s, 1.0), 0.0)
        return d * scale[..., None]

    def inverse(z):
        z = np.asarray(z, dtype=float)
        s = np.linalg.norm(z, axis=-1)
        scale = np.where(s > 0, s_rho_xi(s) / np.where(s > 0, s, 1.0), 0.0)
        return p0 + z * scale[..., None]

    def phi_jet(z):
        z = np.asarray(z, dtype=float).reshape(-1, 2)
        s = np.linalg.norm(z, axis=1)
        Phi_ = s_rho_Phi(s)
        q_ = s_rho_q(s)
        Prr = 2.0 * q_ * s_rho_m(s) - 2.0 * s_rho_K(s) * Phi_**2 - q_
        d1 = q_[:, None] * z
        zh = np.where(s[:, None] > 0, z / np.where(s > 0, s, 1.0)[:, None], np.array([1.0, 0.0]))
        h11 = Prr * zh[:, 0] ** 2 + q_ * (1 - zh[:, 0] ** 2)
        h22 = Prr * zh[:, 1] ** 2 + q_ * (1 - zh[:, 1] ** 2)
        h12 = (Prr - q_) * zh[:, 0] * zh[:, 1]
        return Phi_, d1, np.stack([h11, h12, h22], axis=1)

    return IsothermalChart(forward, inverse, phi_jet, float(delta), "radial-ode", tuple(map(float, p0)), chart)


def _is_symmetry_center(chart: MetricChart, p0) -> bool:
    c = chart.symmetry_center
    if c is None:
        return False
    return float(np.hypot(p0[0] - c[0], p0[1] - c[1])) <= 1e-12 * max(1.0, chart.domain.extent)


def build_isothermal_chart(chart: MetricChart, p0, delta: float, construction: str = "auto") -> IsothermalChart:
    """Isothermal chart for B(p0, delta) on ``chart``."""
    p0 = np.asarray(p0, dtype=float)
    if not delta > 0:
        raise ParameterError("delta must be positive")
    inj = float(chart.inj(p0))
    if not delta < inj:
        raise PreconditionError(f"radius {delta} is not below the injectivity radius at {tuple(p0)}")
    if construction == "auto":
        construction = "analytic" if chart.family in ANALYTIC_FAMILIES else "radial-ode"
    if construction == "analytic":
        return _analytic(chart, p0, delta)
    if construction == "radial-ode":
        if not _is_symmetry_center(chart, p0):
            raise UnsupportedConstructionError(
                f"{chart.label} is not rotationally symmetric about {tuple(p0)}"
            )
        return _radial_ode(chart, p0, delta)
    raise ParameterError(f"unknown construction {construction!r}")


def isothermal_chart(ball, construction: str = "auto") -> IsothermalChart:
    return build_isothermal_chart(ball.chart, ball.center, ball.radius, construction)


# --------------------------------------------------------------------------
# checks


def liouville_residual(iso: IsothermalChart, K_eval: Callable, grid_n: int = 200) -> float:
    """max |K + Lap(log phi) / (2 phi)| on grid points with |z| <= 0.9 delta (5-point stencil)."""
    if grid_n < 2:
        raise ParameterError("grid_n must be at least 2")
    h = iso.delta / grid_n
    k = np.arange(-grid_n, grid_n + 1)
    Z = np.stack(np.meshgrid(k * h, k * h, indexing="ij"), axis=-1).reshape(-1, 2)
    Z = Z[np.linalg.norm(Z, axis=1) <= 0.9 * iso.delta + 1e-12 * iso.delta]
    offs = [np.zeros(2), np.array([h, 0.0]), np.array([-h, 0.0]), np.array([0.0, h]), np.array([0.0, -h])]
    vals = [iso.phi(Z + o) for o in offs]
    if any(np.any(v <= 0) for v in vals):
        raise MetricDegeneracyError("conformal factor is not positive on the residual grid")
    logs = [np.log(v) for v in vals]
    lap = (logs[1] + logs[2] + logs[3] + logs[4] - 4 * logs[0]) / h**2
    K = np.asarray(K_eval(iso.inverse(Z)), dtype=float)
    return float(np.abs(K + lap / (2 * vals[0])).max())


def distortion_pairs(n_samples: int, n_pairs: int, seed: int = DISTORTION_SEED):
    rng = np.random.default_rng(seed)
    i = rng.integers(0, n_samples, size=n_pairs)
    j = (i + rng.integers(1, n_samples, size=n_pairs)) % n_samples
    return i, j


def distance_distortion(ball, iso: IsothermalChart, n_pairs: int = 200, seed: int = DISTORTION_SEED):
    """Extreme ratios d_g(p, q) / |z(p) - z(q)| over deterministic sample pairs."""
    if n_pairs < 1:
        raise ParameterError("n_pairs must be positive")
    i, j = distortion_pairs(ball.n, n_pairs, seed)
    dg = ball.pair_distances(i, j)
    Z = iso.forward(ball.points)
    de = np.linalg.norm(Z[i] - Z[j], axis=1)
    ok = de > 0
    ratio = dg[ok] / de[ok]
    return float(ratio.min()), float(ratio.max())


def sup_log_phi(ball, iso: IsothermalChart) -> float:
    return float(np.abs(np.log(iso.phi(iso.forward(ball.points)))).max())
