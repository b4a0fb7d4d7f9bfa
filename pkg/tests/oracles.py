"""Independent reference implementations used by the tests.

Symbolic geometry (sympy), closed-form distances and brute-force Hoelder
suprema.  Nothing here imports the package's numerical internals.
"""
from functools import lru_cache

import numpy as np
import sympy as sp

x1, x2 = sp.symbols("x1 x2", real=True)
X = (x1, x2)


def _bump(u):
    return sp.Piecewise((sp.exp(1 - 1 / (1 - u)), u < 1), (0, True))


def symbolic_metric(name: str, params=()):
    """2x2 sympy Matrix for a builtin surface."""
    r2 = x1**2 + x2**2
    if name == "flat":
        return sp.eye(2)
    if name == "sphere":
        (R,) = params
        return 4 * sp.nsimplify(R) ** 2 / (1 + r2) ** 2 * sp.eye(2)
    if name == "hyperbolic":
        (k,) = params
        return 4 / (sp.nsimplify(k) * (1 - r2) ** 2) * sp.eye(2)
    if name == "polar-flat":
        return sp.diag(1, x1**2)
    if name == "perturbed-flat":
        a, w = (sp.nsimplify(p) for p in params)
        return (1 + a * _bump(r2 / w**2)) * sp.eye(2)
    raise ValueError(name)


def symbolic_christoffel(g):
    """gamma[k][i][j] = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)."""
    gi = g.inv()
    return [[[sp.simplify(sum(gi[k, l] * (sp.diff(g[j, l], X[i]) + sp.diff(g[i, l], X[j]) - sp.diff(g[i, j], X[l]))
                              for l in range(2)) / 2)
              for j in range(2)] for i in range(2)] for k in range(2)]


def brioschi_curvature(g):
    """Gauss curvature from E, F, G via the Brioschi determinant formula."""
    E, F, G = g[0, 0], g[0, 1], g[1, 1]
    u, v = X
    Eu, Ev, Fu, Fv, Gu, Gv = (sp.diff(E, u), sp.diff(E, v), sp.diff(F, u), sp.diff(F, v), sp.diff(G, u), sp.diff(G, v))
    m1 = sp.Matrix([
        [-sp.diff(E, v, 2) / 2 + sp.diff(F, u, v) - sp.diff(G, u, 2) / 2, Eu / 2, Fu - Ev / 2],
        [Fv - Gu / 2, E, F],
        [Gv / 2, F, G],
    ])
    m2 = sp.Matrix([[0, Ev / 2, Gu / 2], [Ev / 2, E, F], [Gu / 2, F, G]])
    return (m1.det() - m2.det()) / (E * G - F**2) ** 2


@lru_cache(maxsize=None)
def curvature_function(name: str, params=()):
    """Vectorised K(points) from the symbolic metric."""
    K = brioschi_curvature(symbolic_metric(name, params))
    f = sp.lambdify(X, K, "numpy")

    def evaluate(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.broadcast_to(np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), (len(pts),)).copy()

    return evaluate


@lru_cache(maxsize=None)
def christoffel_function(name: str, params=()):
    gam = symbolic_christoffel(symbolic_metric(name, params))
    f = sp.lambdify(X, gam, "numpy")
    return lambda p: np.array(f(float(p[0]), float(p[1])), dtype=float)


@lru_cache(maxsize=None)
def metric_jet_function(name: str, params=()):
    """(g, dg, d2g) at one point with dg[l, i, j] = d_l g_ij, d2g[l, m, i, j]."""
    g = symbolic_metric(name, params)
    dg = [[[sp.diff(g[i, j], X[l]) for j in range(2)] for i in range(2)] for l in range(2)]
    d2g = [[[[sp.diff(g[i, j], X[l], X[m]) for j in range(2)] for i in range(2)] for m in range(2)] for l in range(2)]
    f = sp.lambdify(X, [g.tolist(), dg, d2g], "numpy")

    def evaluate(p):
        a, b, c = f(float(p[0]), float(p[1]))
        return np.array(a, dtype=float), np.array(b, dtype=float), np.array(c, dtype=float)

    return evaluate


# --------------------------------------------------------------------------
# closed forms


def sphere_radial_distance(r, R=1.0):
    return 2.0 * R * np.arctan(r)


def poincare_radial_distance(r, k=1.0):
    return 2.0 * np.arctanh(r) / np.sqrt(k)


def comparison_envelope(r, kappa):
    """(lower, upper) model Laplacians of the distance for |K| <= kappa."""
    r = np.asarray(r, dtype=float)
    if kappa == 0:
        return 1.0 / r, 1.0 / r
    s = np.sqrt(kappa)
    return s / np.tan(r * s), s / np.tanh(r * s)


# --------------------------------------------------------------------------
# brute-force Hoelder quantities


def brute_holder(points, values, alpha, dist=None):
    """max over all i < j of |v_i - v_j| / d_ij^alpha (values may be vector rows)."""
    points = np.asarray(points, dtype=float)
    V = np.asarray(values, dtype=float).reshape(len(points), -1)
    best = 0.0
    for i in range(len(points) - 1):
        d = np.linalg.norm(points[i + 1:] - points[i], axis=1) if dist is None else dist(i, np.arange(i + 1, len(points)))
        num = np.abs(V[i + 1:] - V[i]).max(axis=1)
        ok = d > 0
        if ok.any():
            best = max(best, float((num[ok] / d[ok] ** alpha).max()))
    return best


def bump_family_norm_terms(a: float, w: float, alpha: float, n: int = 20001):
    """Sup terms of the C^{2,alpha} norm of f = a B(|x|^2/w^2) on its support disc.

    Computed from dense 1-D radial/angular maximisation.  Returns
    ``(sup f, sup |Df|, sup |D^2 f|, [D^2 f]_alpha along the x1 axis)``.
    """
    r = np.linspace(0.0, w, n)[:-1]
    u = (r / w) ** 2
    v = 1.0 - u
    B = np.exp(1.0 - 1.0 / v)
    B1 = -B / v**2
    B2 = B * (1.0 / v**4 - 2.0 / v**3)
    fr = a * B1 * 2 * r / w**2                       # f'(r)
    frr = a * (B2 * 4 * r**2 / w**4 + B1 * 2 / w**2)  # f''(r)
    th = np.linspace(0.0, np.pi / 2, 721)
    c, s = np.cos(th)[:, None], np.sin(th)[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(r > 0, fr / np.where(r > 0, r, 1.0), a * B1[0] * 2 / w**2)
    d11 = frr * c**2 + q * s**2
    d12 = (frr - q) * c * s
    d1 = np.abs(fr).max()
    d2 = max(np.abs(d11).max(), np.abs(d12).max())
    # seminorm of d11 along the full x1 axis: f_11(x1, 0) = f''(|x1|)
    line = np.concatenate([-r[::-1], r[1:]])
    vals = np.concatenate([frr[::-1], frr[1:]])
    step = max(1, len(line) // 4000)
    sem = brute_holder(np.stack([line[::step], np.zeros_like(line[::step])], 1), vals[::step], alpha)
    return a, d1, d2, sem


def brute_diameter(points):
    P = np.asarray(points, dtype=float)
    return max(float(np.linalg.norm(P[i + 1:] - P[i], axis=1).max()) for i in range(len(P) - 1))


def brute_chart_norms(points, g, dg, d2g, alpha):
    """max over (i, j) of the C^{2,alpha} non-dimensional norm of g_ij - delta_ij, all pairs."""
    d = brute_diameter(points)
    worst = 0.0
    for a, b in ((0, 0), (0, 1), (1, 1)):
        f = g[:, a, b] - (1.0 if a == b else 0.0)
        D1 = dg[:, :, a, b]
        D2 = np.stack([d2g[:, 0, 0, a, b], d2g[:, 0, 1, a, b], d2g[:, 1, 1, a, b]], 1)
        total = np.abs(f).max() + d * np.abs(D1).max() + d**2 * np.abs(D2).max() \
            + d ** (2 + alpha) * brute_holder(points, D2, alpha)
        worst = max(worst, float(total))
    return worst
