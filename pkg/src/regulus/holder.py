"""Sampled estimates of Hölder seminorms and the derived norm families.

Every estimate is a sup over finitely many samples or pairs, hence a lower
bound for the continuum quantity.  Pair sets are deterministic: all pairs up
to ``FULL_PAIR_LIMIT`` samples, otherwise every pair inside a 32 x 32 bucket
grid plus a fixed-seed draw of cross-bucket pairs.
"""
from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import InconsistentFieldError, MissingDataError, ParameterError

FULL_PAIR_LIMIT = 2000
N_BUCKETS = 32
N_RANDOM_PAIRS = 1_000_000
PAIR_SEED = 0x5EED
DUPLICATE_TOL = 1e-12
ROUNDOFF = 64 * np.finfo(float).eps   # relative size of differences treated as rounding noise
CHUNK = 1 << 20

_seed = contextvars.ContextVar("regulus_pair_seed", default=PAIR_SEED)


def pair_seed() -> int:
    """Seed for random cross-bucket pairs in the current context."""
    return _seed.get()


@contextlib.contextmanager
def seeded(seed: int):
    """Use ``seed`` for pair subsampling inside the block."""
    token = _seed.set(int(seed))
    try:
        yield
    finally:
        _seed.reset(token)


@dataclass
class SampledField:
    """Samples of a scalar function on the plane or on a surface.

    ``derivs1`` holds (d1 f, d2 f) and ``derivs2`` holds (d11 f, d12 f, d22 f)
    per sample.  In ``"riemannian"`` mode ``distances`` must provide
    ``pair_distances(i, j)`` and may provide ``pair_lower_bounds(i, j)``.
    """

    points: np.ndarray
    values: np.ndarray
    derivs1: Optional[np.ndarray] = None
    derivs2: Optional[np.ndarray] = None
    pair_distance_mode: str = "euclidean"
    distances: object = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        n = len(self.points)
        if len(self.values) != n:
            raise ParameterError("values and points differ in length")
        for name, width in (("derivs1", 2), ("derivs2", 3)):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=float).reshape(n, width)
                setattr(self, name, arr)
        if self.pair_distance_mode not in ("euclidean", "riemannian"):
            raise ParameterError(f"unknown distance mode {self.pair_distance_mode!r}")
        if self.pair_distance_mode == "riemannian" and self.distances is None:
            raise MissingDataError("riemannian mode needs a pair-distance accessor")

    def __len__(self):
        return len(self.points)

    def derivative_block(self, k: int) -> np.ndarray:
        """All order-``k`` partials as an ``(N, m)`` array."""
        if k == 0:
            return self.values[:, None]
        arr = self.derivs1 if k == 1 else self.derivs2 if k == 2 else None
        if k not in (1, 2):
            raise ParameterError("derivative order must be 0, 1 or 2")
        if arr is None:
            raise MissingDataError(f"order-{k} derivative samples are missing")
        return arr

    def scaled(self, lam: float) -> "SampledField":
        """Same samples with every value and derivative multiplied by ``lam``."""
        s = lambda a: None if a is None else lam * a
        return SampledField(self.points, lam * self.values, s(self.derivs1), s(self.derivs2),
                            self.pair_distance_mode, self.distances)


@dataclass
class NormEstimate:
    value: float
    kind: str
    resolution: int
    refinement_history: list = field(default_factory=list)
    components: dict = field(default_factory=dict)
    lower_bound_flag: bool = True

    def __post_init__(self):
        if not self.refinement_history:
            self.refinement_history = [self.value]

    def __float__(self):
        return float(self.value)


def with_refinement(estimates: Sequence[NormEstimate]) -> NormEstimate:
    """Fold estimates at increasing resolution into one carrying their history."""
    last = estimates[-1]
    return NormEstimate(last.value, last.kind, last.resolution,
                        [e.value for e in estimates], dict(last.components))


def refinement_stable(history, rel: float = 0.01) -> bool:
    """Two successive doublings change the value by less than ``rel``."""
    if len(history) < 3:
        return False
    a, b, c = history[-3:]
    scale = max(abs(c), 1e-300)
    return abs(b - a) < rel * scale and abs(c - b) < rel * scale


def _check_alpha(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")


# --------------------------------------------------------------------------
# pair sets


def all_pairs(n: int):
    return np.triu_indices(n, 1)


def stratified_pairs(points, n_buckets: int = N_BUCKETS, n_random: int = N_RANDOM_PAIRS, seed: Optional[int] = None):
    """Within-bucket pairs on an ``n_buckets^2`` grid plus random cross-bucket pairs."""
    seed = pair_seed() if seed is None else seed
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    cell = np.minimum(((pts - lo) / span * n_buckets).astype(np.int64), n_buckets - 1)
    bucket = cell[:, 0] * n_buckets + cell[:, 1]
    order = np.argsort(bucket, kind="stable")
    sb = bucket[order]
    starts = np.flatnonzero(np.r_[True, sb[1:] != sb[:-1]])
    ends = np.r_[starts[1:], n]
    I, J = [], []
    for s, e in zip(starts, ends):
        m = e - s
        if m > 1:
            a, b = np.triu_indices(m, 1)
            I.append(order[s + a])
            J.append(order[s + b])
    rng = np.random.default_rng(seed)
    got = 0
    while got < n_random:
        need = n_random - got
        i = rng.integers(0, n, size=need + need // 4 + 16)
        j = rng.integers(0, n, size=i.size)
        keep = bucket[i] != bucket[j]
        i, j = i[keep][:need], j[keep][:need]
        if i.size == 0 and len(np.unique(bucket)) < 2:
            break
        I.append(i)
        J.append(j)
        got += i.size
    if not I:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(I), np.concatenate(J)


def sample_pairs(points):
    n = len(points)
    if n <= FULL_PAIR_LIMIT:
        return all_pairs(n)
    return stratified_pairs(points)


class PairSet:
    """A pair set with its Euclidean distances cached, for reuse across fields on one sample set."""

    def __init__(self, points, pairs=None):
        self.points = np.asarray(points, dtype=float)
        self.i, self.j = sample_pairs(self.points) if pairs is None else pairs
        self.dist = _euclid(self.points, self.i, self.j)
        self.has_duplicates = bool(np.any(self.dist < DUPLICATE_TOL))
        self._powers = {}

    def __len__(self):
        return len(self.i)

    def __iter__(self):
        return iter((self.i, self.j))

    def dist_pow(self, alpha: float) -> np.ndarray:
        if alpha not in self._powers:
            self._powers[alpha] = self.dist**alpha
        return self._powers[alpha]


# --------------------------------------------------------------------------
# pair reductions


def _numerators(V, i, j):
    """max_c |V[i, c] - V[j, c]| per pair, one column at a time."""
    cols = np.ascontiguousarray(V.T)
    out = np.abs(cols[0][i] - cols[0][j])
    for col in cols[1:]:
        d = col[i]
        d -= col[j]
        np.abs(d, out=d)
        np.maximum(out, d, out=out)
    return out


def _euclid(points, i, j):
    x, y = np.ascontiguousarray(points[:, 0]), np.ascontiguousarray(points[:, 1])
    dx = x[i]
    dx -= x[j]
    dy = y[i]
    dy -= y[j]
    dx *= dx
    dy *= dy
    dx += dy
    return np.sqrt(dx, out=dx)


def _check_duplicates(V, dist, num, scale):
    dup = dist < DUPLICATE_TOL
    if np.any(dup & (num > DUPLICATE_TOL * scale)):
        raise InconsistentFieldError("coincident samples carry different values")
    return ~dup


def euclidean_holder_sup(points, V, alpha, pairs=None, weights=None):
    """max over pairs of w_ij |V_i - V_j|_inf / |x_i - x_j|^alpha (Euclidean)."""
    points = np.asarray(points, dtype=float)
    V = np.asarray(V, dtype=float).reshape(len(points), -1)
    scale = max(1.0, float(np.abs(V).max(initial=0.0)))
    if isinstance(pairs, PairSet):
        i, j = pairs.i, pairs.j
        num = _numerators(V, i, j)
        if pairs.has_duplicates:
            ok = _check_duplicates(V, pairs.dist, num, scale)
            i, j, num, dpow = i[ok], j[ok], num[ok], pairs.dist_pow(alpha)[ok]
        else:
            dpow = pairs.dist_pow(alpha)
        r = num / dpow
        if weights is not None:
            r *= weights(i, j)
        return float(r.max(initial=0.0))
    i_all, j_all = sample_pairs(points) if pairs is None else pairs
    best = 0.0
    for s in range(0, len(i_all), CHUNK):
        i, j = i_all[s:s + CHUNK], j_all[s:s + CHUNK]
        dist = _euclid(points, i, j)
        num = _numerators(V, i, j)
        ok = _check_duplicates(V, dist, num, scale)
        if not np.any(ok):
            continue
        r = num[ok] / dist[ok] ** alpha
        if weights is not None:
            r = r * weights(i[ok], j[ok])
        best = max(best, float(r.max()))
    return best


def _tile_ratio(Pa, Va, Pb, Vb, alpha, upper_only):
    d2 = (Pa[:, None, 0] - Pb[None, :, 0]) ** 2
    d2 += (Pa[:, None, 1] - Pb[None, :, 1]) ** 2
    num = np.abs(Va[:, None, 0] - Vb[None, :, 0])
    for c in range(1, Va.shape[1]):
        np.maximum(num, np.abs(Va[:, None, c] - Vb[None, :, c]), out=num)
    if upper_only:
        tri = np.tril_indices(len(Pa))
        d2[tri] = np.inf
        num[tri] = 0.0
    return d2, num


def exhaustive_holder_sup(points, V, alpha, tile: int = 256):
    """Euclidean sup over every pair.

    Points are sorted into spatial tiles; a tile pair is skipped when its
    value range over the squared-off box gap cannot beat the running best.
    """
    points = np.asarray(points, dtype=float)
    V = np.asarray(V, dtype=float).reshape(len(points), -1)
    n = len(points)
    if n < 2:
        return 0.0
    scale = max(1.0, float(np.abs(V).max(initial=0.0)))
    side = max(1, int(math.ceil(math.sqrt(n / tile))))
    lo, hi = points.min(axis=0), points.max(axis=0)
    cell = np.minimum(((points - lo) / np.where(hi > lo, hi - lo, 1.0) * side).astype(np.int64), side - 1)
    # serpentine order keeps consecutive chunks spatially compact
    row = np.where(cell[:, 0] % 2 == 0, cell[:, 1], side - 1 - cell[:, 1])
    order = np.lexsort((points[:, 1], row, cell[:, 0]))
    P, W = points[order], V[order]
    tiles = [slice(s, min(s + tile, n)) for s in range(0, n, tile)]
    boxes = [(P[t].min(0), P[t].max(0), W[t].min(0), W[t].max(0)) for t in tiles]

    def bound(a, b):
        pa_lo, pa_hi, va_lo, va_hi = boxes[a]
        pb_lo, pb_hi, vb_lo, vb_hi = boxes[b]
        gap = np.maximum(0.0, np.maximum(pa_lo - pb_hi, pb_lo - pa_hi))
        dmin = float(np.hypot(*gap))
        spread = float(np.maximum(va_hi - vb_lo, vb_hi - va_lo).max())
        return (math.inf if dmin == 0.0 else spread / dmin**alpha), dmin

    work = sorted(((bound(a, b)[1], a, b) for a in range(len(tiles)) for b in range(a, len(tiles))))
    best = 0.0
    for _, a, b in work:
        if a != b and bound(a, b)[0] <= best:
            continue
        d2, num = _tile_ratio(P[tiles[a]], W[tiles[a]], P[tiles[b]], W[tiles[b]], alpha, a == b)
        dup = d2 < DUPLICATE_TOL**2
        if np.any(dup):
            if np.any(num[dup] > DUPLICATE_TOL * scale):
                raise InconsistentFieldError("coincident samples carry different values")
            d2[dup] = np.inf
        np.power(d2, 0.5 * alpha, out=d2)
        num /= d2
        best = max(best, float(num.max()))
    return best


def riemannian_holder_sup(points, V, alpha, accessor, pairs=None):
    """Exact sampled sup of |V_i - V_j| / d_g^alpha with distances from ``accessor``.

    When the accessor offers lower bounds on distances, pairs are visited in
    batches of largest resulting upper bound and the search stops once no
    unvisited pair can beat the running maximum; the result equals the
    all-pairs maximum.  Differences below ``ROUNDOFF * max|V|`` count as zero.
    """
    points = np.asarray(points, dtype=float)
    V = np.asarray(V, dtype=float).reshape(len(points), -1)
    i, j = sample_pairs(points) if pairs is None else pairs
    num = _numerators(V, i, j)
    scale = max(1.0, float(np.abs(V).max(initial=0.0)))
    # differences at rounding level would each cost a geodesic solve for a meaningless ratio
    live = num > ROUNDOFF * float(np.abs(V).max(initial=0.0))
    i, j, num = i[live], j[live], num[live]
    if i.size == 0:
        return 0.0
    lower = getattr(accessor, "pair_lower_bounds", None)
    if lower is None:
        d = accessor.pair_distances(i, j)
        ok = _check_duplicates(V, d, num, scale)
        return float((num[ok] / d[ok] ** alpha).max(initial=0.0))
    lb = np.asarray(lower(i, j)) * (1.0 - 1e-8)
    with np.errstate(divide="ignore"):
        ub = np.where(lb > 0, num / np.maximum(lb, 1e-300) ** alpha, np.inf)
    best = 0.0
    live = np.arange(ub.size)
    batch = 256
    while live.size:
        live = live[ub[live] > best]
        if live.size == 0:
            break
        if live.size > batch:
            top = np.argpartition(-ub[live], batch - 1)[:batch]
            sel, rest = live[top], np.delete(live, top)
        else:
            sel, rest = live, live[:0]
        d = accessor.pair_distances(i[sel], j[sel])
        ok = _check_duplicates(V, d, num[sel], scale)
        if np.any(ok):
            best = max(best, float((num[sel][ok] / d[ok] ** alpha).max()))
        live = rest
        batch = min(2 * batch, 1 << 14)
    return best


def _field_sup(field: SampledField, V, alpha, pairs=None):
    if isinstance(pairs, str):
        if pairs != "all" or field.pair_distance_mode == "riemannian":
            raise ParameterError(f"unsupported pair selection {pairs!r}")
        return exhaustive_holder_sup(field.points, V, alpha)
    if field.pair_distance_mode == "riemannian":
        return riemannian_holder_sup(field.points, V, alpha, field.distances, pairs)
    return euclidean_holder_sup(field.points, V, alpha, pairs)


# --------------------------------------------------------------------------
# public estimators


def holder_seminorm(field: SampledField, alpha: float, k: int = 0) -> NormEstimate:
    """[D^k f]_alpha over the sampled pairs, in the field's distance mode."""
    _check_alpha(alpha)
    if len(field) < 2:
        raise ParameterError("need at least two samples")
    val = _field_sup(field, field.derivative_block(k), alpha)
    return NormEstimate(val, "seminorm", len(field))


def nondim_norm(field: SampledField, k: int, alpha: float, diam: float, pairs=None) -> NormEstimate:
    """sum_j d^j sup|D^j f| + d^(k+alpha) [D^k f]_alpha.

    ``pairs`` (an index pair ``(i, j)``, a ``PairSet`` or ``"all"`` for an
    exhaustive Euclidean sweep) overrides the default pair set.
    """
    _check_alpha(alpha)
    if k not in (0, 1, 2):
        raise ParameterError("k must be 0, 1 or 2")
    if not diam > 0:
        raise ParameterError("diameter must be positive")
    comps = {}
    for j in range(k + 1):
        comps[f"sup{j}"] = diam**j * float(np.abs(field.derivative_block(j)).max())
    sem = _field_sup(field, field.derivative_block(k), alpha, pairs) if len(field) > 1 else 0.0
    comps["seminorm"] = diam ** (k + alpha) * sem
    return NormEstimate(sum(comps.values()), "composite", len(field), components=comps)


def curvature_norm(ball, K_field, alpha: float, delta: float) -> NormEstimate:
    """sup|K| + (2 delta)^alpha [K]_alpha with Riemannian pair distances from ``ball``."""
    _check_alpha(alpha)
    if not delta > 0:
        raise ParameterError("delta must be positive")
    if ball is None or not hasattr(ball, "pair_distances"):
        raise MissingDataError("curvature norm needs Riemannian pair distances")
    vals = np.asarray(K_field.values, dtype=float)
    sup = float(np.abs(vals).max())
    sem = riemannian_holder_sup(K_field.points, vals, alpha, ball) if len(vals) > 1 else 0.0
    comps = {"sup": sup, "seminorm": (2.0 * delta) ** alpha * sem, "raw_seminorm": sem}
    return NormEstimate(sup + comps["seminorm"], "composite", len(vals), components=comps)


def interior_weighted_norm(
    field: SampledField,
    k: int,
    alpha: float,
    sigma: float,
    boundary_dist: Union[Callable, np.ndarray],
) -> NormEstimate:
    """sum_j sup d_x^(j+sigma) |D^j f| + sup d_xy^(k+alpha+sigma) |D^k f(x) - D^k f(y)| / |x-y|^alpha.

    ``d_xy = min(d_x, d_y)``; distances between samples are Euclidean.
    """
    _check_alpha(alpha)
    if sigma < 0:
        raise ParameterError("sigma must be non-negative")
    if k not in (0, 1, 2):
        raise ParameterError("k must be 0, 1 or 2")
    dx = boundary_dist(field.points) if callable(boundary_dist) else boundary_dist
    dx = np.asarray(dx, dtype=float).reshape(-1)
    if dx.shape[0] != len(field):
        raise MissingDataError("boundary distances missing for some samples")
    comps = {}
    for j in range(k + 1):
        D = np.abs(field.derivative_block(j)).max(axis=1)
        comps[f"sup{j}"] = float((dx ** (j + sigma) * D).max())
    p = k + alpha + sigma

    def w(i, j):
        return np.minimum(dx[i], dx[j]) ** p

    comps["seminorm"] = euclidean_holder_sup(field.points, field.derivative_block(k), alpha, weights=w) if len(field) > 1 else 0.0
    return NormEstimate(sum(comps.values()), "composite", len(field), components=comps)
