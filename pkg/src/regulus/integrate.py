"""Batched embedded Runge-Kutta 4(5) (Dormand-Prince) integration.

Every trajectory in a batch carries its own time, step size and error
control, so a trajectory's result does not depend on which other
trajectories it was batched with.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import StepSizeUnderflowError

# Dormand & Prince (1980) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between 5th and embedded 4th order weights (7 stages, FSAL)
_E = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass
class BatchSolution:
    t: np.ndarray          # (B,) final parameter reached
    y: np.ndarray          # (B, n) state at t
    exited: np.ndarray     # (B,) left the admissible region
    y_out: Optional[np.ndarray] = None   # (len(t_out), B, n)
    n_steps: int = 0


def integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0,
    t_end,
    *,
    t_out=None,
    rtol: float = 1e-10,
    atol: float = 1e-10,
    inside: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_steps: int = 1_000_000,
    on_accept: Optional[Callable[[np.ndarray, np.ndarray], None]] = None,
    max_step=None,
) -> BatchSolution:
    """Integrate the autonomous system ``y' = rhs(y)`` for a batch of states.

    ``y0`` has shape ``(B, n)``; ``t_end`` is a scalar or ``(B,)``.  When
    ``t_out`` (sorted, shared by the batch) is given the states at those
    parameters are returned in ``y_out``; outputs past an exit are nan.
    ``inside(y) -> bool mask`` freezes trajectories that leave the region at
    their last accepted state.  ``on_accept(idx, y)`` sees every accepted
    step.  ``max_step`` (scalar or ``(B,)``) bounds every step, so features
    of compact support cannot be stepped over where the error estimate
    vanishes.
    """
    y = np.array(y0, dtype=float, copy=True)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (B, n)")
    B, n = y.shape
    t_end = np.broadcast_to(np.asarray(t_end, dtype=float), (B,)).copy()
    t = np.zeros(B)
    exited = np.zeros(B, dtype=bool)

    outs = None if t_out is None else np.asarray(t_out, dtype=float)
    y_out = None
    next_out = np.zeros(B, dtype=int)
    if outs is not None:
        y_out = np.full((len(outs), B, n), np.nan)
        at_zero = outs <= 0.0
        for k in np.flatnonzero(at_zero):
            y_out[k] = y
        next_out[:] = int(at_zero.sum())

    hmax = np.full(B, np.inf) if max_step is None else np.broadcast_to(np.asarray(max_step, dtype=float), (B,)).copy()
    f = rhs(y)
    h = np.minimum(_initial_step(y, f, t_end, rtol, atol), hmax)
    done = t_end <= 0.0
    steps = 0
    while not np.all(done):
        steps += 1
        if steps > max_steps:
            raise StepSizeUnderflowError("maximum number of integration steps exceeded")
        idx = np.flatnonzero(~done)
        yi, fi, ti = y[idx], f[idx], t[idx]
        hi = np.minimum(h[idx], t_end[idx] - ti)
        if outs is not None:
            no = next_out[idx]
            has_out = no < len(outs)
            target = np.where(has_out, outs[np.minimum(no, len(outs) - 1)], np.inf)
            hi = np.minimum(hi, target - ti)
        hcol = hi[:, None]
        K = [fi]
        for s in range(1, 6):
            ys = yi + hcol * sum(a * K[j] for j, a in enumerate(_A[s]) if a != 0.0)
            K.append(rhs(ys))
        y_new = yi + hcol * sum(b * K[j] for j, b in enumerate(_B) if b != 0.0)
        f_new = rhs(y_new)
        K.append(f_new)
        err = hcol * sum(e * K[j] for j, e in enumerate(_E) if e != 0.0)
        scale = atol + rtol * np.maximum(np.abs(yi), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        bad = ~np.isfinite(err_norm)
        err_norm[bad] = np.inf
        accept = err_norm <= 1.0

        with np.errstate(divide="ignore"):
            factor = np.where(
                err_norm == 0.0,
                MAX_FACTOR,
                np.clip(SAFETY * err_norm ** (-0.2), MIN_FACTOR, MAX_FACTOR),
            )
        factor = np.where(accept, factor, np.minimum(factor, 1.0))
        factor[bad] = MIN_FACTOR
        h_next = hi * factor
        if np.any(~accept & (hi < 1e-14 * np.maximum(1.0, np.abs(ti)))):
            raise StepSizeUnderflowError("step size underflow in geodesic integration")
        # a step clipped to hit an output or the endpoint keeps its nominal size
        h_nom = h[idx]
        h[idx] = np.minimum(np.where(accept & (hi < h_nom), np.maximum(h_next, h_nom), h_next), hmax[idx])

        acc = idx[accept]
        if acc.size:
            y_acc = y_new[accept]
            t_acc = ti[accept] + hi[accept]
            if inside is not None:
                ok = inside(y_acc)
                out_now = acc[~ok]
                exited[out_now] = True
                done[out_now] = True
                acc, y_acc, t_acc = acc[ok], y_acc[ok], t_acc[ok]
                f_acc = f_new[accept][ok]
            else:
                f_acc = f_new[accept]
            y[acc] = y_acc
            t[acc] = t_acc
            f[acc] = f_acc
            if on_accept is not None and acc.size:
                on_accept(acc, y_acc)
            if outs is not None and acc.size:
                no = next_out[acc]
                hit = (no < len(outs)) & (
                    np.abs(t_acc - outs[np.minimum(no, len(outs) - 1)]) <= 1e-13 * np.maximum(1.0, np.abs(t_acc))
                )
                for k_rel in np.flatnonzero(hit):
                    e = acc[k_rel]
                    y_out[next_out[e], e] = y[e]
                    t[e] = outs[next_out[e]]
                    next_out[e] += 1
            fin = t[acc] >= t_end[acc] * (1 - 1e-15)
            done[acc[fin]] = True
            t[acc[fin]] = t_end[acc[fin]]
    return BatchSolution(t=t, y=y, exited=exited, y_out=y_out, n_steps=steps)


def _initial_step(y, f, t_end, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2, axis=1))
    d1 = np.sqrt(np.mean((f / scale) ** 2, axis=1))
    h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
    h0 = np.minimum(h0, 1e-2 * np.maximum(t_end, 1e-12))
    return np.maximum(h0, 1e-12)
