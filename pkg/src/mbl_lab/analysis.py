"""Links between the stochastic learners and the replicator-mutator ODE."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .dynamics import MutationParams, integrate_rmd
from .games import Game, MixedProfile, make_profile, shift_nonnegative
from .learners import LearnerConfig, _dpu_increment
from .simulation import player_stream, self_play


@dataclass
class DriftEstimate:
    point: MixedProfile
    drift: np.ndarray  # concatenated, same layout as point.flat
    stderr: np.ndarray
    samples: int

    def zscores(self, reference: np.ndarray) -> np.ndarray:
        diff = self.drift - np.asarray(reference)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.abs(diff) / self.stderr
        return np.where(self.stderr > 0, z, np.where(np.abs(diff) <= 1e-12, 0.0, np.inf))


@njit(cache=True)
def _drift_sums(pay, strides, counts, offsets, c, M, x, u, s1, s2):
    P = counts.size
    acts = np.empty(P, np.int64)
    buf = np.empty(x.shape[1])
    for s in range(u.shape[0]):
        idx = 0
        for p in range(P):
            n = counts[p]
            acc = 0.0
            h = n - 1
            for k in range(n):
                acc += x[p, k]
                if u[s, p] < acc:
                    h = k
                    break
            acts[p] = h
            idx += h * strides[p]
        for p in range(P):
            n = counts[p]
            _dpu_increment(x[p, :n], c[p, :n], M[p], acts[p], pay[p, idx], buf[:n])
            for k in range(n):
                v = buf[k]
                s1[offsets[p] + k] += v
                s2[offsets[p] + k] += v * v


def _as_configs(config, n_players: int) -> list[LearnerConfig]:
    if isinstance(config, LearnerConfig):
        return [config] * n_players
    configs = list(config)
    if len(configs) != n_players:
        raise ValueError("need one learner config per player")
    return configs


def empirical_drift(
    config: LearnerConfig | Sequence[LearnerConfig],
    game: Game,
    x,
    samples: int,
    rng: np.random.Generator,
    chunk: int = 1 << 16,
) -> DriftEstimate:
    """Monte Carlo estimate of ``E[(X_{n+1} - X_n) / theta | X_n = x]``.

    All players step simultaneously from the frozen profile ``x``. Payoffs
    are shifted to be non-negative first, as in a real run; the shift leaves
    the replicator-mutator field unchanged.
    """
    configs = _as_configs(config, game.num_players)
    for cfg in configs:
        if cfg.algorithm not in ("MBL-DPU", "Cross"):
            raise ValueError(f"drift estimation supports MBL-DPU and Cross, not {cfg.algorithm}")
    prof = make_profile(game, x)
    if not prof.is_interior() and any(cfg.algorithm == "MBL-DPU" for cfg in configs):
        raise ValueError("MBL-DPU drift is estimated at interior points only")
    if samples < 2:
        raise ValueError("need at least two samples")
    shifted, _ = shift_nonnegative(game)

    P = game.num_players
    counts = np.array(game.action_counts, dtype=np.int64)
    nmax = int(counts.max())
    offsets = game.offsets().astype(np.int64)
    pay = np.stack([r.ravel() for r in shifted.payoffs])
    strides = np.array([int(np.prod(counts[p + 1:])) for p in range(P)], dtype=np.int64)
    X = np.zeros((P, nmax))
    C = np.zeros((P, nmax))
    for p, cfg in enumerate(configs):
        X[p, :counts[p]] = prof[p]
        C[p, :counts[p]] = cfg.bias(int(counts[p]))
    M = np.array([cfg.mutation for cfg in configs])

    s1 = np.zeros(game.dim)
    s2 = np.zeros(game.dim)
    done = 0
    while done < samples:
        S = min(chunk, samples - done)
        _drift_sums(pay, strides, counts, offsets, C, M, X, rng.random((S, P)), s1, s2)
        done += S
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean**2, 0.0) * samples / (samples - 1)
    return DriftEstimate(prof, mean, np.sqrt(var / samples), samples)


def ode_approximation_error(
    game: Game,
    config: LearnerConfig,
    x0,
    thetas: Sequence[float],
    horizon: float,
    ensemble_size: int,
    seed: int = 0,
    checkpoints: int = 50,
    budget: int = 10**10,
) -> np.ndarray:
    """Sup-distance between the ensemble mean of MBL-DPU runs and the ODE solution.

    For each learning rate, ``ensemble_size`` independent runs start from the
    same ``x0``; at ``checkpoints`` evenly spaced times ``t_j`` the mean of
    ``X(n_j)``, ``n_j = round(t_j / theta)``, is compared with the ODE
    solution at ``n_j * theta``.
    """
    thetas = [float(t) for t in thetas]
    if any(b >= a for a, b in zip(thetas, thetas[1:])):
        raise ValueError("learning rates must be strictly decreasing")
    if config.algorithm != "MBL-DPU":
        raise ValueError("the ODE comparison applies to MBL-DPU")
    prof = make_profile(game, x0)
    if horizon == 0:
        return np.zeros(len(thetas))
    cost = sum(round(horizon / th) for th in thetas) * ensemble_size * game.num_players
    if cost > budget:
        raise ValueError(f"simulation budget exceeded: {cost} player-steps > {budget}")

    shifted, shifts = shift_nonnegative(game)
    mutation = MutationParams(
        tuple(config.M for _ in range(game.num_players)),
        tuple(config.bias(n) for n in game.action_counts),
    )
    times = np.linspace(0.0, horizon, checkpoints)
    errors = []
    for level, theta in enumerate(thetas):
        cfg = config.model_copy(update={"theta": theta})
        cfg.check_step_size(float(max(r.max() for r in shifted.payoffs)))
        n_total = int(round(horizon / theta))
        rec = np.unique(np.clip(np.rint(times / theta).astype(np.int64), 0, n_total))
        total = np.zeros((rec.size, game.dim))
        for k in range(ensemble_size):
            streams = [player_stream(seed, level * ensemble_size + k, p) for p in range(game.num_players)]
            out = self_play(shifted, [cfg] * game.num_players, prof.strategies, n_total, streams, rec, window=1)
            total += out.profiles
        mean = total / ensemble_size
        ode = integrate_rmd(game, mutation, prof, rec[-1] * theta, t_eval=rec * theta)
        errors.append(float(np.max(np.linalg.norm(mean - ode.states, axis=1))))
    return np.array(errors)


@dataclass
class ConvergenceReport:
    final_distance: float
    hit_time: int | None
    final_fraction: float
    rolling_std: np.ndarray  # (len(steps), num_players)

    def summary(self) -> str:
        hit = "never" if self.hit_time is None else str(self.hit_time)
        return (
            f"final distance {self.final_distance:.4g}, first hit {hit}, "
            f"in-ball fraction {self.final_fraction:.3f}, final std {np.array2string(self.rolling_std[-1], precision=4)}"
        )


def rolling_std(flat: np.ndarray, offsets: Sequence[int], window: int) -> np.ndarray:
    """Per-player Euclidean standard deviation over a trailing window of rows.

    Row ``t`` uses rows ``max(0, t - window + 1) .. t``.
    """
    flat = np.asarray(flat, dtype=float)
    out = np.zeros((flat.shape[0], len(offsets) - 1))
    for t in range(flat.shape[0]):
        block = flat[max(0, t - window + 1):t + 1]
        block = block - block[-1]  # exact zeros for a constant window
        dev = block - block.mean(axis=0)
        for p, (a, b) in enumerate(zip(offsets[:-1], offsets[1:])):
            out[t, p] = np.sqrt(np.mean(np.sum(dev[:, a:b] ** 2, axis=1)))
    return out


def convergence_metrics(
    trajectory: np.ndarray,
    offsets: Sequence[int],
    target: np.ndarray,
    radius: float,
    window: int,
    steps: np.ndarray | None = None,
) -> ConvergenceReport:
    """Distance, first-hit and recurrence diagnostics for one run.

    ``trajectory`` holds one concatenated profile per row; ``steps`` gives
    their step indices (default ``0, 1, ...``). ``window`` counts rows.
    """
    traj = np.asarray(trajectory, dtype=float)
    if window < 2:
        raise ValueError("window must be at least 2")
    if radius <= 0:
        raise ValueError("radius must be positive")
    if traj.shape[0] < window:
        raise ValueError(f"run has {traj.shape[0]} rows, shorter than the window {window}")
    steps = np.arange(traj.shape[0]) if steps is None else np.asarray(steps)
    dist = np.linalg.norm(traj - np.asarray(target)[None, :], axis=1)
    inside = dist < radius
    hit = int(steps[np.argmax(inside)]) if inside.any() else None
    return ConvergenceReport(
        final_distance=float(dist[-1]),
        hit_time=hit,
        final_fraction=float(inside[-window:].mean()),
        rolling_std=rolling_std(traj, offsets, window),
    )


def excursions(inside: np.ndarray, steps: np.ndarray) -> list[tuple[int, int, bool]]:
    """Maximal runs outside the ball as ``(start_step, length, returned)``.

    ``returned`` is False only for an excursion still open at the last sample.
    """
    inside = np.asarray(inside, dtype=bool)
    steps = np.asarray(steps)
    out = []
    k = 0
    while k < inside.size:
        if inside[k]:
            k += 1
            continue
        j = k
        while j < inside.size and not inside[j]:
            j += 1
        end = steps[j] if j < inside.size else steps[-1]
        out.append((int(steps[k]), int(end - steps[k]), j < inside.size))
        k = j
    return out


def step_covariance(game: Game, mutation: MutationParams, profile) -> np.ndarray:
    """Covariance of one MBL-DPU increment ``dX/theta`` at a frozen profile.

    Exact enumeration over pure profiles, payoffs shifted as in a run.
    """
    prof = make_profile(game, profile)
    shifted, _ = shift_nonnegative(game)
    off = game.offsets()
    mean = np.zeros(game.dim)
    second = np.zeros((game.dim, game.dim))
    for a in np.ndindex(*game.action_counts):
        p = np.prod([prof[i][a[i]] for i in range(game.num_players)])
        H = np.empty(game.dim)
        for i in range(game.num_players):
            r = shifted.payoffs[i][a]
            x = prof[i]
            h = -x * r + mutation.M[i] * (mutation.c[i] - x)
            h[a[i]] += r
            H[off[i]:off[i + 1]] = h
        mean += p * H
        second += p * np.outer(H, H)
    return second - np.outer(mean, mean)


def linear_noise_covariance(game: Game, mutation: MutationParams, equilibrium, theta: float) -> np.ndarray:
    """Stationary covariance of MBL-DPU around a stable rest point, to first order in theta.

    Solves ``A S + S A^T + theta * B = 0`` in reduced coordinates, with ``A``
    the reduced Jacobian and ``B`` the increment covariance, and lifts ``S``
    back to the full concatenated profile.
    """
    from .dynamics import reduced_jacobian

    A = reduced_jacobian(game, mutation, equilibrium)
    if np.max(np.linalg.eigvals(A).real) >= 0:
        raise ValueError("rest point is not asymptotically stable")
    off = game.offsets()
    keep = [k for i in range(game.num_players) for k in range(off[i], off[i + 1] - 1)]
    B = step_covariance(game, mutation, equilibrium)[np.ix_(keep, keep)]
    m = len(keep)
    eye = np.eye(m)
    S = np.linalg.solve(np.kron(eye, A) + np.kron(A, eye), -theta * B.reshape(-1, order="F"))
    S = S.reshape(m, m, order="F")
    lift = np.zeros((game.dim, m))
    k = 0
    for i in range(game.num_players):
        for h in range(off[i], off[i + 1] - 1):
            lift[h, k] = 1.0
            lift[off[i + 1] - 1, k] = -1.0
            k += 1
    return lift @ S @ lift.T
