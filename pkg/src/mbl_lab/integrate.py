"""Adaptive Dormand-Prince 5(4) integration on a product of simplices."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

# Dormand-Prince tableau (FSAL)
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

RENORM_TOL = 1e-12


@dataclass
class OdeTrajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), dim) concatenated profiles
    terminal_field_norm: float
    renormalizations: int = 0

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class StepSizeUnderflow(RuntimeError):
    message: str
    trajectory: OdeTrajectory = field(repr=False)

    def __str__(self) -> str:
        return self.message


def _project(y: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, bool]:
    touched = False
    for a, b in zip(offsets[:-1], offsets[1:]):
        s = y[a:b].sum()
        if abs(s - 1.0) > RENORM_TOL:
            y[a:b] /= s
            touched = True
    return y, touched


def dopri54(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    horizon: float,
    offsets: Sequence[int],
    tol: float = 1e-10,
    max_step: float = 1.0,
    t_eval: Sequence[float] | None = None,
    min_step: float = 1e-14,
) -> OdeTrajectory:
    """Integrate an autonomous ODE whose state is a concatenation of simplex vectors.

    The local error estimate (max-norm) is kept below ``tol`` on every
    accepted step. If ``t_eval`` is given, steps are clipped so the solution
    is sampled exactly at those times; otherwise every accepted step is kept.
    Per-block sums drifting from 1 by more than 1e-12 are renormalized.
    """
    offsets = np.asarray(offsets, dtype=int)
    y = np.array(y0, dtype=float)
    if horizon < 0 or tol <= 0:
        raise ValueError("horizon must be >= 0 and tol > 0")
    if t_eval is not None:
        targets = np.asarray(sorted(t_eval), dtype=float)
        if targets.size and (targets[0] < 0 or targets[-1] > horizon + 1e-12):
            raise ValueError("t_eval must lie in [0, horizon]")
    else:
        targets = None

    times = [0.0]
    states = [y.copy()]
    next_target = 0
    if targets is not None:
        times, states = [], []
        while next_target < targets.size and targets[next_target] <= 0.0:
            times.append(0.0)
            states.append(y.copy())
            next_target += 1

    k1 = rhs(y)
    if horizon == 0:
        return OdeTrajectory(np.array(times), np.array(states), float(np.linalg.norm(k1)))

    t = 0.0
    h = min(max_step, 0.01)
    renorms = 0
    while t < horizon:
        stop = horizon
        if targets is not None and next_target < targets.size:
            stop = min(stop, targets[next_target])
        h = min(h, max_step, stop - t)
        if h < min_step:
            if stop - t < min_step:
                h = stop - t
            else:
                traj = OdeTrajectory(np.array(times), np.array(states), float(np.linalg.norm(k1)), renorms)
                raise StepSizeUnderflow(f"step size underflow at t={t:.6g}", traj)

        ks = [k1]
        for s in range(1, 7):
            ys = y + h * sum(a * k for a, k in zip(_A[s], ks))
            ks.append(rhs(ys))
        y_new = ys  # row 6 of the tableau equals the 5th-order weights
        err = float(np.max(np.abs(h * sum(e * k for e, k in zip(_E, ks)))))

        if err <= tol:
            t = stop if stop - (t + h) < 1e-13 * max(1.0, horizon) else t + h
            y, touched = _project(y_new, offsets)
            if touched:
                renorms += 1
                log.debug("renormalized state onto the simplex at t=%g", t)
                k1 = rhs(y)
            else:
                k1 = ks[6]
            if targets is None:
                times.append(t)
                states.append(y.copy())
            else:
                while next_target < targets.size and targets[next_target] <= t + 1e-13:
                    times.append(float(targets[next_target]))
                    states.append(y.copy())
                    next_target += 1
        factor = 0.9 * (tol / err) ** 0.2 if err > 0 else 5.0
        h = h * min(5.0, max(0.2, factor))

    if renorms:
        log.info("%d simplex renormalizations during integration", renorms)
    return OdeTrajectory(np.array(times), np.array(states), float(np.linalg.norm(k1)), renorms)
