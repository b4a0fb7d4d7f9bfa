"""Christoffel symbols and Gauss curvature from metric jets.

Derivatives of the Christoffel symbols are assembled from the second jet of
g through ``d_l g^{ij} = -g^{ia} g^{jb} d_l g_ab``, so nothing derived is
ever differenced again.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import MetricChart, MetricJet, inverse_metric
from .errors import MetricDegeneracyError

G11_FLOOR = 1e-10


def christoffel_arrays(g, dg):
    """Gamma[..., k, i, j] = 1/2 g^{kl} (d_j g_il + d_i g_jl - d_l g_ij)."""
    ginv = inverse_metric(g)
    return _raise(ginv, _lowered(dg))


def _lowered(dg):
    # lower[..., l, i, j] = 1/2 (d_j g_il + d_i g_jl - d_l g_ij)
    return 0.5 * (
        np.einsum("...jil->...lij", dg) + np.einsum("...ijl->...lij", dg) - dg
    )


def _raise(ginv, lower):
    # contract g^{kl} with the l axis of lower[..., l, i, j]
    flat = lower.reshape(lower.shape[:-3] + (2, 4))
    out = np.matmul(ginv, flat)
    return out.reshape(out.shape[:-2] + (2, 2, 2))


def christoffel_derivative_arrays(g, dg, d2g):
    """Return ``(Gamma, dGamma)`` with dGamma[..., m, k, i, j] = d_m Gamma^k_ij."""
    ginv = inverse_metric(g)
    lower = _lowered(dg)
    gamma = _raise(ginv, lower)
    gi = ginv[..., None, :, :]
    dginv = -np.matmul(np.matmul(gi, dg), gi)   # [..., m, k, l]
    dlower = 0.5 * (
        np.einsum("...mjil->...mlij", d2g)
        + np.einsum("...mijl->...mlij", d2g)
        - d2g
    )
    dgamma = _raise(dginv, lower[..., None, :, :, :]) + _raise(gi, dlower)
    return gamma, dgamma


def gauss_curvature_arrays(g, dg, d2g):
    """K = -(1/g11)(d1 G2_12 - d2 G2_11 + G1_12 G2_11 - G1_11 G2_12 + G2_12^2 - G2_11 G2_22).

    Indices in the comment are 1-based; arrays are 0-based.
    """
    if np.any(g[..., 0, 0] < G11_FLOOR):
        raise MetricDegeneracyError("g11 below floor in curvature evaluation")
    G, dG = christoffel_derivative_arrays(g, dg, d2g)
    bracket = (
        dG[..., 0, 1, 0, 1]
        - dG[..., 1, 1, 0, 0]
        + G[..., 0, 0, 1] * G[..., 1, 0, 0]
        - G[..., 0, 0, 0] * G[..., 1, 0, 1]
        + G[..., 1, 0, 1] * G[..., 1, 0, 1]
        - G[..., 1, 0, 0] * G[..., 1, 1, 1]
    )
    return -bracket / g[..., 0, 0]


@dataclass(frozen=True)
class Christoffel:
    """Gamma^k_ij stored as ``gamma[k, i, j]`` (0-based)."""

    gamma: np.ndarray

    def __call__(self, k: int, i: int, j: int) -> float:
        """1-based component access, ``Gamma^k_ij``."""
        return float(self.gamma[k - 1, i - 1, j - 1])


def christoffel(jet: MetricJet) -> Christoffel:
    return Christoffel(christoffel_arrays(jet.g, jet.dg))


def gauss_curvature(chart: MetricChart, p) -> float:
    p = np.asarray(p, dtype=float).reshape(1, 2)
    g, dg, d2g = chart.jets(p, check_domain=True)
    return float(gauss_curvature_arrays(g, dg, d2g)[0])


def curvature_at(chart: MetricChart, pts) -> np.ndarray:
    """Batched K at ``pts`` (shape ``(..., 2)``)."""
    g, dg, d2g = chart.jets(pts)
    return gauss_curvature_arrays(g, dg, d2g)


@dataclass(frozen=True)
class CurvatureField:
    """K sampled on a geodesic ball: chart points, values, distance tags."""

    points: np.ndarray
    values: np.ndarray
    radii: np.ndarray


def curvature_field(chart: MetricChart, ball) -> CurvatureField:
    pts = ball.points
    return CurvatureField(pts, curvature_at(chart, pts), ball.radii)
