"""Uncoupled learning rules for repeated normal-form games.

Each rule sees only its own state, its own action and its own (pre-shifted,
non-negative) reward. The update arithmetic lives in small ``@njit`` cores
that are shared by the per-step Python API below and by the compiled
self-play loop in :mod:`mbl_lab.simulation`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field, model_validator

Algorithm = Literal["MBL-DPU", "MBL-LC", "Cross", "FAQ", "WoLF-PHC"]
ALGORITHMS: tuple[str, ...] = ("MBL-DPU", "MBL-LC", "Cross", "FAQ", "WoLF-PHC")
ALGO_CODE = {name: k for k, name in enumerate(ALGORITHMS)}


class LearnerConfig(BaseModel):
    """Hyper-parameters of one player's learning rule.

    ``theta`` is the learning rate of MBL-DPU, MBL-LC and Cross and the
    (constant) Q step size of FAQ. WoLF-PHC uses ``alpha0``/``kappa`` for
    its Q schedule and ``delta_w``/``delta_ratio`` for the policy step.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    algorithm: Algorithm = "MBL-DPU"
    theta: float = Field(1e-4, gt=0)
    M: float = Field(0.05, ge=0)
    c: tuple[float, ...] | None = None
    tau: float = Field(20.0, gt=0)
    beta: float = Field(0.01, gt=0)
    alpha0: float = Field(0.1, gt=0)
    kappa: float = Field(1e-4, ge=0)
    delta_w: float = Field(0.5e-4, gt=0)
    delta_ratio: float = Field(2.0, gt=1)
    adaptive_factor: float | None = Field(None, gt=0, lt=1)
    M_floor: float = Field(1e-4, gt=0)

    @model_validator(mode="after")
    def _check(self):
        if self.c is not None:
            c = np.asarray(self.c)
            if np.any(c <= 0) or abs(c.sum() - 1) > 1e-9:
                raise ValueError(f"bias point c={self.c} must be strictly interior")
        if self.algorithm in ("MBL-DPU", "MBL-LC") and self.M == 0:
            raise ValueError(f"{self.algorithm} needs M > 0 (use Cross for M = 0)")
        return self

    @property
    def delta_l(self) -> float:
        return self.delta_w * self.delta_ratio

    @property
    def mutation(self) -> float:
        return 0.0 if self.algorithm == "Cross" else self.M

    def bias(self, n: int) -> np.ndarray:
        if self.c is None:
            return np.full(n, 1.0 / n)
        if len(self.c) != n:
            raise ValueError(f"bias point has {len(self.c)} entries, player has {n} actions")
        return np.asarray(self.c, dtype=float)

    def check_step_size(self, max_reward: float) -> None:
        """Reject learning rates outside ``0 < theta < 1/(C + M)`` for direct updates."""
        if self.algorithm in ("MBL-DPU", "Cross"):
            bound = 1.0 / (max_reward + self.mutation)
            if not self.theta < bound:
                raise ValueError(
                    f"theta={self.theta:g} violates theta < 1/(C+M) = {bound:g} for {self.algorithm}"
                )


@dataclass
class LearnerState:
    """Mutable per-player state; copies are made by the step functions."""

    policy: np.ndarray
    Q: np.ndarray
    avg_policy: np.ndarray
    t: int = 0
    avg_count: int = 0

    def copy(self) -> "LearnerState":
        return replace(self, policy=self.policy.copy(), Q=self.Q.copy(), avg_policy=self.avg_policy.copy())


def init_state(config: LearnerConfig, x0: np.ndarray) -> LearnerState:
    """State whose policy equals ``x0``; logistic learners get ``Q = log(x0) / tau``."""
    x0 = np.asarray(x0, dtype=float)
    if config.algorithm in ("MBL-LC", "FAQ"):
        if np.any(x0 <= 0):
            raise ValueError("logistic learners need a strictly interior initial policy")
        Q = np.log(x0) / config.tau
        x = logistic_policy(Q, config.tau)
    else:
        Q = np.zeros_like(x0)
        x = x0.copy()
    return LearnerState(x, Q, x.copy())


# --- compiled cores (operate in place on 1-D arrays) -----------------------


@njit(cache=True)
def _softmax_into(Q, tau, out):
    m = Q[0]
    for k in range(1, Q.size):
        if Q[k] > m:
            m = Q[k]
    s = 0.0
    for k in range(Q.size):
        out[k] = np.exp(tau * (Q[k] - m))
        s += out[k]
    for k in range(Q.size):
        out[k] /= s


@njit(cache=True)
def _dpu_increment(x, c, M, h, r, out):
    # (x_new - x) / theta of the direct policy update
    for k in range(x.size):
        out[k] = -x[k] * r + M * (c[k] - x[k])
    out[h] += r


@njit(cache=True)
def _dpu_core(x, c, theta, M, h, r):
    for k in range(x.size):
        x[k] += theta * (-x[k] * r + M * (c[k] - x[k]))
    x[h] += theta * r


@njit(cache=True)
def _lc_core(x, Q, c, theta, M, tau, beta, h, r):
    cap = min(beta / x[h], 1.0)
    Q[h] += cap * theta * (r + M * c[h] / x[h])
    _softmax_into(Q, tau, x)


@njit(cache=True)
def _faq_core(x, Q, alpha, tau, beta, h, r):
    cap = min(beta / x[h], 1.0)
    Q[h] += cap * alpha * (r - Q[h])
    _softmax_into(Q, tau, x)


@njit(cache=True)
def _wolf_core(x, Q, xbar, t, count, alpha0, kappa, delta_w, delta_l, h, r):
    n = x.size
    alpha = alpha0 / (1.0 + kappa * t)
    Q[h] += alpha * (r - Q[h])
    count += 1
    for k in range(n):
        xbar[k] += (x[k] - xbar[k]) / count
    v_cur = 0.0
    v_avg = 0.0
    for k in range(n):
        v_cur += x[k] * Q[k]
        v_avg += xbar[k] * Q[k]
    delta = delta_w if v_cur > v_avg else delta_l
    best = 0
    for k in range(1, n):
        if Q[k] > Q[best]:
            best = k
    share = delta / (n - 1)
    s = 0.0
    for k in range(n):
        if k == best:
            x[k] += delta
        else:
            x[k] -= share
        if x[k] < 0.0:
            x[k] = 0.0
        s += x[k]
    for k in range(n):
        x[k] /= s
    return count


# --- per-step API -----------------------------------------------------------


def _check_reward(r: float) -> None:
    if r < 0:
        raise ValueError(f"negative reward {r!r}: payoffs must be shifted to be non-negative")


def mbl_dpu_step(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    """Direct policy update with a linear pull toward the bias point."""
    _check_reward(reward)
    new = state.copy()
    _dpu_core(new.policy, config.bias(new.policy.size), config.theta, config.mutation, action, reward)
    new.t += 1
    return new


def cross_step(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    """Cross learning: the direct policy update without mutation."""
    return mbl_dpu_step(state, config.model_copy(update={"algorithm": "Cross", "M": 0.0}), action, reward)


def logistic_policy(Q, tau: float) -> np.ndarray:
    """Boltzmann distribution ``exp(tau Q) / sum exp(tau Q)``, overflow-safe."""
    Q = np.asarray(Q, dtype=float)
    out = np.empty_like(Q)
    _softmax_into(Q, float(tau), out)
    return out


def mbl_lc_step(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    _check_reward(reward)
    new = state.copy()
    n = new.Q.size
    _lc_core(new.policy, new.Q, config.bias(n), config.theta, config.M, config.tau, config.beta, action, reward)
    new.t += 1
    return new


def faq_step(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    """Frequency-adjusted Q-learning with zero discount."""
    new = state.copy()
    _faq_core(new.policy, new.Q, config.theta, config.tau, config.beta, action, reward)
    new.t += 1
    return new


def wolf_phc_step(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    """Win-or-learn-fast policy hill climbing.

    Ties in ``argmax Q`` go to the lowest index; equal current and average
    values count as losing.
    """
    new = state.copy()
    new.avg_count = int(
        _wolf_core(
            new.policy, new.Q, new.avg_policy, float(new.t), new.avg_count,
            config.alpha0, config.kappa, config.delta_w, config.delta_l, action, reward,
        )
    )
    new.t += 1
    return new


STEP_FUNCTIONS = {
    "MBL-DPU": mbl_dpu_step,
    "Cross": cross_step,
    "MBL-LC": mbl_lc_step,
    "FAQ": faq_step,
    "WoLF-PHC": wolf_phc_step,
}


def update(state: LearnerState, config: LearnerConfig, action: int, reward: float) -> LearnerState:
    return STEP_FUNCTIONS[config.algorithm](state, config, action, reward)


def act(state: LearnerState, rng: np.random.Generator, config: LearnerConfig | None = None) -> int:
    """Sample an action from the current policy.

    With a logistic ``config`` the policy is recomputed from ``Q`` first.
    """
    x = state.policy
    if config is not None and config.algorithm in ("MBL-LC", "FAQ"):
        x = logistic_policy(state.Q, config.tau)
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(x), u, side="right"), x.size - 1))


def logistic_as_direct_payoff(x_chosen: float, tau: float, dQ: float) -> float:
    """Payoff that makes a direct policy update reproduce a softmax step.

    After ``Q[a] += dQ`` the new Boltzmann policy equals the Cross-style
    update (``theta = 1``) with this payoff.
    """
    g = x_chosen * np.expm1(tau * dQ)
    return float(g / (g + 1.0))


def direct_update(x: np.ndarray, action: int, payoff: float) -> np.ndarray:
    out = x - x * payoff
    out[action] += payoff
    return out


def adaptive_mutation(violation_estimate: float, factor: float, floor: float = 1e-4) -> float:
    """Set the mutation strength just below the current Nash-condition violation."""
    if violation_estimate < 0:
        raise ValueError("violation estimate must be non-negative")
    if not 0 < factor < 1:
        raise ValueError("factor must lie in (0, 1)")
    return max(floor, factor * violation_estimate)
