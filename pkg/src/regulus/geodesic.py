"""Geodesics, Riemannian distance, geodesic balls and Jacobi fields.

All integrations use the batched Dormand-Prince 4(5) scheme of
:mod:`regulus.integrate` at ``rtol = atol = 1e-10``.  Distances come from
shooting: Newton iteration on the initial velocity with the Jacobian taken
from the variational equations, started from the straight chart segment,
with a 16-angle multistart as fallback.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .chart import MetricChart
from .errors import DomainExitError, NonConvergenceError, ParameterError, PreconditionError
from .integrate import integrate
from .tensor import christoffel_arrays, christoffel_derivative_arrays, gauss_curvature_arrays

RTOL = 1e-10
ATOL = 1e-10
ENDPOINT_TOL = 1e-8
# keep iterating while Newton still improves, down to this level
ENDPOINT_GOAL = 1e-11
CONJUGATE_SEARCH_CAP = 50.0
N_MULTISTART = 16


@dataclass(frozen=True)
class Unbounded:
    """Explicit marker for a quantity that did not terminate before ``cap``."""

    cap: float
    reason: str = "search-cap"

    def __str__(self):
        return f">= {self.cap:g} ({self.reason})"


STEPS_PER_SPAN = 32


def _integrate(rhs, y0, t_end, **kw):
    """Integrator call with the module tolerances and a step cap of t_end / 32."""
    cap = np.maximum(np.asarray(t_end, dtype=float), 1e-300) / STEPS_PER_SPAN
    return integrate(rhs, y0, t_end, rtol=RTOL, atol=ATOL, max_step=cap, **kw)


# --------------------------------------------------------------------------
# right-hand sides


def _quad(G, a, b):
    # sum_ij G[n, k, i, j] a_i b_j
    Gb = np.matmul(G, b[:, None, :, None])[..., 0]
    return np.matmul(Gb, a[:, :, None])[..., 0]


def _geodesic_rhs(chart: MetricChart):
    jet_fn = chart.jet_fn

    def rhs(y):
        g, dg, _ = jet_fn(y[:, :2])
        G = christoffel_arrays(g, dg)
        v = y[:, 2:4]
        return np.concatenate([v, -_quad(G, v, v)], axis=1)

    return rhs


def _variational_rhs(chart: MetricChart):
    jet_fn = chart.jet_fn

    def rhs(y):
        g, dg, d2g = jet_fn(y[:, :2])
        G, dG = christoffel_derivative_arrays(g, dg, d2g)
        v = y[:, 2:4]
        out = np.empty_like(y)
        out[:, :2] = v
        out[:, 2:4] = -_quad(G, v, v)
        # dG contracted with v twice: W[n, m, k]
        W = np.matmul(np.matmul(dG, v[:, None, None, :, None])[..., 0], v[:, None, :, None])[..., 0]
        for c in (4, 8):
            X, V = y[:, c:c + 2], y[:, c + 2:c + 4]
            out[:, c:c + 2] = V
            out[:, c + 2:c + 4] = -np.matmul(X[:, None, :], W)[:, 0] - 2.0 * _quad(G, v, V)
        return out

    return rhs


def _jacobi_rhs(chart: MetricChart):
    jet_fn = chart.jet_fn

    def rhs(y):
        g, dg, d2g = jet_fn(y[:, :2])
        G = christoffel_arrays(g, dg)
        K = gauss_curvature_arrays(g, dg, d2g)
        v = y[:, 2:4]
        out = np.empty_like(y)
        out[:, :2] = v
        out[:, 2:4] = -_quad(G, v, v)
        out[:, 4] = y[:, 5]
        out[:, 5] = -K * y[:, 4]
        return out

    return rhs


def _inside(chart: MetricChart):
    dom = chart.domain

    def inside(y):
        return dom.contains(y[:, :2])

    return inside


# --------------------------------------------------------------------------
# basic geometry


def g_norm(chart: MetricChart, p, v) -> np.ndarray:
    """Riemannian length of tangent vectors ``v`` at points ``p`` (batched)."""
    p = np.atleast_2d(np.asarray(p, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    g = chart.metric(p)
    return np.sqrt(np.einsum("ni,nij,nj->n", v, g, v))


def orthonormal_frame(chart: MetricChart, p) -> np.ndarray:
    """Columns e1, e2 of a g-orthonormal frame at ``p`` (e1 along +x1)."""
    g = chart.metric(np.asarray(p, dtype=float).reshape(1, 2))[0]
    e1 = np.array([1.0, 0.0]) / math.sqrt(g[0, 0])
    # Gram-Schmidt on (0, 1)
    w = np.array([0.0, 1.0])
    w = w - (e1 @ g @ w) * e1
    e2 = w / math.sqrt(w @ g @ w)
    return np.stack([e1, e2], axis=1)


@dataclass(frozen=True)
class GeodesicPath:
    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    riemannian_length: float


def geodesic_path(chart: MetricChart, p, v, t: float, n: int = 100) -> GeodesicPath:
    """Unit-speed geodesic from ``p`` in direction ``v`` sampled at ``n + 1`` parameters."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    v = v / g_norm(chart, p, v)[0]
    params = np.linspace(0.0, t, n + 1)
    sol = _integrate(
        _geodesic_rhs(chart),
        np.concatenate([p, v])[None, :],
        t,
        t_out=params,
        inside=_inside(chart),
    )
    if sol.exited[0]:
        raise DomainExitError(f"geodesic left the domain of {chart.label} at t={sol.t[0]:.6g}", sol.t[0])
    states = sol.y_out[:, 0, :]
    return GeodesicPath(params, states[:, :2], states[:, 2:4], float(t))


def exp_map(chart: MetricChart, p, v, t: float) -> np.ndarray:
    """Point reached after length ``t`` along the geodesic from ``p`` with direction ``v``."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    nv = g_norm(chart, p, v)[0]
    if not nv > 0:
        raise ParameterError("direction must be nonzero")
    if t == 0:
        return p.copy()
    sol = _integrate(
        _geodesic_rhs(chart),
        np.concatenate([p, v / nv])[None, :],
        float(t),
        inside=_inside(chart),
    )
    if sol.exited[0]:
        raise DomainExitError(f"geodesic left the domain of {chart.label} at t={sol.t[0]:.6g}", sol.t[0])
    return sol.y[0, :2]


def exp_many(chart: MetricChart, P, V, t_end=1.0):
    """Batched exponential map (no normalisation): states after parameter ``t_end``.

    Returns ``(points, velocities, exited)``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    sol = _integrate(_geodesic_rhs(chart), np.concatenate([P, V], axis=1), t_end, inside=_inside(chart))
    return sol.y[:, :2], sol.y[:, 2:4], sol.exited


# --------------------------------------------------------------------------
# shooting


def _newton_shoot(chart, P, Q, V0, max_iter=12, max_halvings=30):
    """Newton on exp_P(V) = Q.  Returns (V, converged mask).

    Iterates whose geodesic leaves the domain are pulled back: the Newton
    step is halved from the last iterate that stayed inside (or the initial
    guess itself is halved).
    """
    rhs = _variational_rhs(chart)
    inside = _inside(chart)
    V = V0.copy()
    n = len(P)
    good = np.zeros(n, dtype=bool)         # V_good holds an in-domain iterate
    V_good = V0.copy()
    active = np.ones(n, dtype=bool)
    conv = np.zeros(n, dtype=bool)
    scale = np.maximum(1.0, np.abs(Q).max(axis=1))
    prev = np.full(n, np.inf)
    newton_steps = np.zeros(n, dtype=int)
    halvings = np.zeros(n, dtype=int)
    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        y0 = np.zeros((idx.size, 12))
        y0[:, :2] = P[idx]
        y0[:, 2:4] = V[idx]
        y0[:, 6] = 1.0   # dV/dv1
        y0[:, 11] = 1.0  # dV/dv2
        sol = _integrate(rhs, y0, 1.0, inside=inside)
        out = sol.exited
        if np.any(out):
            e = idx[out]
            halvings[e] += 1
            V[e] = np.where(good[e, None], 0.5 * (V[e] + V_good[e]), 0.5 * V[e])
            active[e[halvings[e] > max_halvings]] = False
        keep = ~out
        idx = idx[keep]
        if idx.size == 0:
            continue
        F = sol.y[keep, :2] - Q[idx]
        err = np.abs(F).max(axis=1)
        s_i = scale[idx]
        ok = (err < ENDPOINT_GOAL * s_i) | ((err < ENDPOINT_TOL * s_i) & (err > 0.5 * prev[idx]))
        prev[idx] = err
        conv[idx[ok]] = True
        active[idx[ok]] = False
        newton_steps[idx] += 1
        active[idx[newton_steps[idx] >= max_iter]] = False
        step = ~ok & active[idx]
        if not np.any(step):
            continue
        st = idx[step]
        good[st] = True
        V_good[st] = V[st]
        M = np.stack([sol.y[keep, 4:6], sol.y[keep, 8:10]], axis=2)[step]  # columns: dX/dv_a
        Fi = F[step]
        det = M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
        singular = np.abs(det) < 1e-14
        det = np.where(singular, 1.0, det)
        dv = -np.stack(
            [(M[:, 1, 1] * Fi[:, 0] - M[:, 0, 1] * Fi[:, 1]) / det,
             (-M[:, 1, 0] * Fi[:, 0] + M[:, 0, 0] * Fi[:, 1]) / det],
            axis=1,
        )
        # damp long Newton steps
        vn = np.linalg.norm(V[st], axis=1)
        dn = np.linalg.norm(dv, axis=1)
        damp = np.minimum(1.0, 0.5 * np.maximum(vn, 1e-12) / np.maximum(dn, 1e-300))
        V[st] = V[st] + damp[:, None] * dv
        active[st[singular]] = False
    return V, conv


def shoot(chart: MetricChart, P, Q):
    """Initial velocities ``V`` with ``exp_P(V) = Q`` (geodesic parameter in [0, 1]).

    Returns ``(V, lengths, converged)``.  Unconverged pairs are retried from
    16 equispaced launch angles; the shortest converged geodesic wins.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    V, conv = _newton_shoot(chart, P, Q, Q - P)
    lengths = np.where(conv, g_norm(chart, P, V), np.nan)
    for i in np.flatnonzero(~conv):
        V_i, L_i = _multistart(chart, P[i], Q[i])
        if V_i is not None:
            V[i], lengths[i], conv[i] = V_i, L_i, True
    same = np.all(np.abs(P - Q) == 0.0, axis=1)
    lengths[same] = 0.0
    V[same] = 0.0
    conv[same] = True
    return V, lengths, conv


def _multistart(chart, p, q):
    frame = orthonormal_frame(chart, p)
    guess = float(g_norm(chart, p, q - p)[0])
    th = 2 * np.pi * np.arange(N_MULTISTART) / N_MULTISTART
    dirs = (frame @ np.stack([np.cos(th), np.sin(th)])).T * guess
    P = np.repeat(p[None, :], N_MULTISTART, axis=0)
    Q = np.repeat(q[None, :], N_MULTISTART, axis=0)
    V, conv = _newton_shoot(chart, P, Q, dirs, max_iter=20)
    if not np.any(conv):
        return None, None
    L = g_norm(chart, P[conv], V[conv])
    k = int(np.argmin(L))
    return V[conv][k], float(L[k])


def riemann_distances(chart: MetricChart, P, Q) -> np.ndarray:
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    _, L, conv = shoot(chart, P, Q)
    if not np.all(conv):
        bad = int(np.flatnonzero(~conv)[0])
        raise NonConvergenceError(
            f"shooting failed between {tuple(P[bad])} and {tuple(Q[bad])} on {chart.label}"
        )
    return L


def riemann_distance(chart: MetricChart, p, q) -> float:
    for x in (p, q):
        if not chart.domain.contains(np.asarray(x, dtype=float)):
            from .errors import DomainError

            raise DomainError(f"point {tuple(x)} outside domain of {chart.label}")
    return float(riemann_distances(chart, p, q)[0])


# --------------------------------------------------------------------------
# geodesic balls


def comparison_distance(a, b, theta, kappa: float) -> np.ndarray:
    """Third side of a hinge (sides a, b, angle theta) in the model plane of curvature kappa."""
    a, b, theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (a, b, theta)))
    s2 = np.sin(0.5 * theta) ** 2
    scale = np.maximum(a, b)
    if abs(kappa) * float(np.max(scale, initial=0.0)) ** 2 < 1e-14:
        return 2.0 * np.sqrt((0.5 * (a - b)) ** 2 + a * b * s2)
    s = math.sqrt(abs(kappa))
    if kappa > 0:
        hav = np.sin(0.5 * s * (a - b)) ** 2 + np.sin(s * a) * np.sin(s * b) * s2
        return 2.0 / s * np.arcsin(np.sqrt(np.clip(hav, 0.0, 1.0)))
    hav = np.sinh(0.5 * s * (a - b)) ** 2 + np.sinh(s * a) * np.sinh(s * b) * s2
    return 2.0 / s * np.arcsinh(np.sqrt(hav))


@dataclass
class GeodesicBall:
    """Geodesic polar sampling of B(center, radius).

    ``points[0]`` is the centre; sample ``1 + k * n_radial + j`` lies on ray
    ``k`` at distance ``radius * (j + 1) / n_radial``.  ``angles`` are ray
    angles in a g-orthonormal frame at the centre.
    """

    chart: MetricChart
    center: np.ndarray
    radius: float
    n_rays: int
    n_radial: int
    points: np.ndarray
    radii: np.ndarray
    angles: np.ndarray
    rays: np.ndarray
    _dist_cache: dict = field(default_factory=dict, repr=False)
    _kappa_bound: Optional[float] = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def boundary_mask(self) -> np.ndarray:
        return np.abs(self.radii - self.radius) <= 1e-12 * self.radius

    @property
    def interior_samples(self) -> np.ndarray:
        return self.points[~self.boundary_mask]

    @property
    def boundary_samples(self) -> np.ndarray:
        return self.points[self.boundary_mask]

    def curvature(self) -> np.ndarray:
        from .tensor import curvature_at

        if not hasattr(self, "_K"):
            self._K = curvature_at(self.chart, self.points)
        return self._K

    def kappa_upper(self) -> float:
        """Upper curvature bound used for comparison lower bounds on distances."""
        if self._kappa_bound is None:
            K = self.curvature()
            spread = float(K.max() - K.min())
            self._kappa_bound = float(K.max()) + 0.05 * spread + 1e-9 * float(np.abs(K).max())
        return self._kappa_bound

    def pair_lower_bounds(self, i, j) -> np.ndarray:
        """Lower bounds on d_g between samples: hinge comparison with K <= kappa_upper."""
        i, j = np.asarray(i), np.asarray(j)
        theta = np.abs(self.angles[i] - self.angles[j])
        theta = np.minimum(theta, 2 * np.pi - theta)
        theta = np.where((self.rays[i] < 0) | (self.rays[j] < 0), 0.0, theta)
        lb = comparison_distance(self.radii[i], self.radii[j], theta, self.kappa_upper())
        return np.maximum(lb, np.abs(self.radii[i] - self.radii[j]))

    def pair_distances(self, i, j) -> np.ndarray:
        """Riemannian distances between samples ``i[k]`` and ``j[k]`` (cached)."""
        i, j = np.asarray(i, dtype=int), np.asarray(j, dtype=int)
        out = np.empty(i.shape)
        radial = (self.rays[i] == self.rays[j]) | (self.rays[i] < 0) | (self.rays[j] < 0)
        out[radial] = np.abs(self.radii[i[radial]] - self.radii[j[radial]])
        lo, hi = np.minimum(i, j), np.maximum(i, j)
        keys = lo * self.n + hi
        todo = np.flatnonzero(~radial)
        missing = [k for k in todo if int(keys[k]) not in self._dist_cache]
        if missing:
            missing = np.array(missing)
            uk, first = np.unique(keys[missing], return_index=True)
            src = missing[first]
            d = riemann_distances(self.chart, self.points[lo[src]], self.points[hi[src]])
            for key, val in zip(uk.tolist(), d.tolist()):
                self._dist_cache[key] = val
        for k in todo:
            out[k] = self._dist_cache[int(keys[k])]
        return out


def geodesic_ball(chart: MetricChart, p0, delta: float, n_rays: int = 32, n_radial: int = 16) -> GeodesicBall:
    p0 = np.asarray(p0, dtype=float)
    if not delta > 0:
        raise PreconditionError("ball radius must be positive")
    if n_rays < 3 or n_radial < 1:
        raise ParameterError("need at least 3 rays and 1 radial sample")
    if not chart.domain.contains(p0):
        from .errors import DomainError

        raise DomainError(f"centre {tuple(p0)} outside domain of {chart.label}")
    inj = float(chart.inj(p0))
    if math.isnan(inj):
        raise PreconditionError(f"injectivity radius of {chart.label} is unknown")
    if delta >= inj:
        raise PreconditionError(f"radius {delta} is not below the injectivity radius {inj} at {tuple(p0)}")
    frame = orthonormal_frame(chart, p0)
    th = 2 * np.pi * np.arange(n_rays) / n_rays
    dirs = (frame @ np.stack([np.cos(th), np.sin(th)])).T
    radii = delta * np.arange(1, n_radial + 1) / n_radial
    y0 = np.concatenate([np.repeat(p0[None, :], n_rays, axis=0), dirs], axis=1)
    sol = _integrate(_geodesic_rhs(chart), y0, delta, t_out=radii, inside=_inside(chart))
    if np.any(sol.exited):
        t_exit = float(sol.t[sol.exited].min())
        raise DomainExitError(f"geodesic ball of radius {delta} leaves the domain of {chart.label}", t_exit)
    pts = sol.y_out[:, :, :2].transpose(1, 0, 2).reshape(-1, 2)
    points = np.concatenate([p0[None, :], pts])
    r = np.concatenate([[0.0], np.tile(radii, n_rays)])
    ang = np.concatenate([[0.0], np.repeat(th, n_radial)])
    rays = np.concatenate([[-1], np.repeat(np.arange(n_rays), n_radial)])
    return GeodesicBall(chart, p0, float(delta), n_rays, n_radial, points, r, ang, rays)


def domain_reach(chart: MetricChart, p0, length: float, n_rays: int = 32) -> float:
    """Shortest distance along ``n_rays`` geodesics from ``p0`` before leaving the domain (capped at ``length``)."""
    p0 = np.asarray(p0, dtype=float)
    frame = orthonormal_frame(chart, p0)
    th = 2 * np.pi * np.arange(n_rays) / n_rays
    dirs = (frame @ np.stack([np.cos(th), np.sin(th)])).T
    y0 = np.concatenate([np.repeat(p0[None, :], n_rays, axis=0), dirs], axis=1)
    sol = _integrate(_geodesic_rhs(chart), y0, length, inside=_inside(chart))
    return float(sol.t.min())


# --------------------------------------------------------------------------
# Jacobi fields


def _jacobi_state(chart, p, u):
    p = np.atleast_2d(np.asarray(p, dtype=float))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    n = max(len(p), len(u))
    y0 = np.zeros((n, 6))
    y0[:, :2] = p
    y0[:, 2:4] = u
    y0[:, 5] = 1.0
    return y0


def conjugate_distance(chart: MetricChart, p, v, cap: float = CONJUGATE_SEARCH_CAP, spacing: float = 0.05):
    """First zero of the normal Jacobi field J'' + K J = 0, J(0) = 0, J'(0) = 1.

    Returns a float, or :class:`Unbounded` when no zero occurs before ``cap``
    (reason ``"search-cap"``) or before the geodesic leaves the domain
    (reason ``"domain-exit"``, cap = exit parameter).
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    u = v / g_norm(chart, p, v)[0]
    rhs = _jacobi_rhs(chart)
    grid = np.arange(1, int(math.ceil(cap / spacing)) + 1) * spacing
    grid[-1] = cap
    sol = _integrate(rhs, _jacobi_state(chart, p, u), cap, t_out=grid, inside=_inside(chart))
    J = sol.y_out[:, 0, 4]
    valid = np.isfinite(J)
    sign_change = np.flatnonzero(valid[1:] & valid[:-1] & (np.sign(J[1:]) != np.sign(J[:-1])))
    if np.isfinite(J[0]) and J[0] <= 0:
        k0 = -1
    elif sign_change.size:
        k0 = int(sign_change[0])
    else:
        if sol.exited[0]:
            return Unbounded(float(sol.t[0]), "domain-exit")
        return Unbounded(float(cap), "search-cap")
    t0 = 0.0 if k0 < 0 else grid[k0]
    y_left = _jacobi_state(chart, p, u)[0] if k0 < 0 else sol.y_out[k0, 0]
    if k0 < 0:
        # zero inside the first spacing: start from a small offset
        t0 = 0.5 * spacing * 1e-3
        y_left = _integrate(rhs, y_left[None, :], t0).y[0]
    # Newton on the end parameter from the left bracket state
    tau = 0.0
    y = y_left
    for _ in range(50):
        J, dJ = y[4], y[5]
        step = -J / dJ
        tau_new = tau + step
        if tau_new <= 0:
            tau_new = 0.5 * tau + 0.5 * spacing
        tau = tau_new
        y = _integrate(rhs, y_left[None, :], tau).y[0]
        if abs(step) < 1e-12:
            break
    return float(t0 + tau)


def laplacian_of_distance_many(chart: MetricChart, p0, Q) -> tuple:
    """Delta_M r at points ``Q`` for r = d(p0, .), via J'(r)/J(r) along minimizing geodesics.

    Returns ``(r, laplacian)``.
    """
    p0 = np.asarray(p0, dtype=float)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    P = np.repeat(p0[None, :], len(Q), axis=0)
    V, L, conv = shoot(chart, P, Q)
    if not np.all(conv):
        raise NonConvergenceError(f"shooting from {tuple(p0)} failed on {chart.label}")
    if np.any(L <= 0):
        raise PreconditionError("laplacian of distance is undefined at the centre")
    U = V / L[:, None]
    sol = _integrate(_jacobi_rhs(chart), _jacobi_state(chart, P, U), L, inside=_inside(chart))
    return L, sol.y[:, 5] / sol.y[:, 4]


def laplacian_of_distance(chart: MetricChart, p0, q) -> float:
    return float(laplacian_of_distance_many(chart, p0, np.asarray(q, dtype=float)[None, :])[1][0])


def laplacian_on_rays(chart: MetricChart, p0, radii, n_rays: int = 32):
    """Delta_M r at ``radii`` along ``n_rays`` geodesic rays from ``p0``.

    Rays are unit-speed geodesics in the directions of a g-orthonormal frame,
    so no shooting is needed.  Valid while the rays stay minimizing (radii
    below the injectivity radius).  Returns an ``(n_rays, len(radii))`` array.
    """
    p0 = np.asarray(p0, dtype=float)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
        raise ParameterError("radii must be positive and increasing")
    frame = orthonormal_frame(chart, p0)
    th = 2 * np.pi * np.arange(n_rays) / n_rays
    dirs = (frame @ np.stack([np.cos(th), np.sin(th)])).T
    y0 = _jacobi_state(chart, np.repeat(p0[None, :], n_rays, axis=0), dirs)
    sol = _integrate(_jacobi_rhs(chart), y0, float(radii[-1]), t_out=radii, inside=_inside(chart))
    if np.any(sol.exited):
        raise DomainExitError(f"rays of length {radii[-1]} leave the domain of {chart.label}",
                              float(sol.t[sol.exited].min()))
    Y = sol.y_out  # (len(radii), n_rays, 6)
    return (Y[:, :, 5] / Y[:, :, 4]).T
