"""Replicator-mutator dynamics: vector field, integration, rest points, stability.

Linear algebra (Newton steps, eigenvalues) runs in reduced coordinates:
each player's last probability is eliminated via ``x_{i,n} = 1 - sum_{h<n} x_ih``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .games import Game, MixedProfile, all_fitness, make_profile, pair_fitness
from .integrate import OdeTrajectory, StepSizeUnderflow, dopri54

log = logging.getLogger(__name__)

FIELD_TOL = 1e-12
EQUILIBRIUM_TOL = 1e-8
MARGIN = 1e-8


class NotAnEquilibrium(ValueError):
    pass


class NoConvergence(RuntimeError):
    def __init__(self, message: str, best: MixedProfile, residual: float):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True, eq=False)
class MutationParams:
    """Per-player mutation strengths ``M`` and interior bias points ``c``."""

    M: tuple[float, ...]
    c: tuple[np.ndarray, ...]
    plain_rd: bool = False

    def __post_init__(self):
        if len(self.M) != len(self.c):
            raise ValueError("M and c must have one entry per player")
        for m in self.M:
            if m < 0 or (m == 0 and not self.plain_rd):
                raise ValueError(f"mutation strength must be > 0 (got {m}); set plain_rd for M = 0")
        for ci in self.c:
            if np.any(ci <= 0) or abs(ci.sum() - 1.0) > 1e-9:
                raise ValueError(f"bias point {ci} is not strictly interior")

    @classmethod
    def uniform(cls, game: Game, M: float | Sequence[float]) -> "MutationParams":
        """Same bias point (the centroid) for every player; ``M = 0`` gives plain RD."""
        Ms = tuple(float(m) for m in np.broadcast_to(np.asarray(M, dtype=float), (game.num_players,)))
        c = tuple(np.full(n, 1.0 / n) for n in game.action_counts)
        return cls(Ms, c, plain_rd=any(m == 0 for m in Ms))

    @classmethod
    def create(cls, game: Game, M, c=None) -> "MutationParams":
        if c is None:
            return cls.uniform(game, M)
        Ms = tuple(float(m) for m in np.broadcast_to(np.asarray(M, dtype=float), (game.num_players,)))
        cs = tuple(np.asarray(ci, dtype=float) for ci in c)
        return cls(Ms, cs, plain_rd=any(m == 0 for m in Ms))


def _split(game: Game, flat: np.ndarray) -> list[np.ndarray]:
    off = game.offsets()
    return [flat[off[i]:off[i + 1]] for i in range(game.num_players)]


def _field_flat(game: Game, mutation: MutationParams, flat: np.ndarray) -> np.ndarray:
    xs = _split(game, flat)
    out = []
    for x, f, M, c in zip(xs, all_fitness(game, xs), mutation.M, mutation.c):
        out.append(x * (f - x @ f) + M * (c - x))
    return np.concatenate(out)


def rmd_field(game: Game, mutation: MutationParams, profile) -> MixedProfile:
    """Right-hand side of the replicator-mutator ODE, as a tangent profile."""
    prof = make_profile(game, profile)
    return MixedProfile.from_flat(game, _field_flat(game, mutation, prof.flat))


def field_norm(game: Game, mutation: MutationParams, profile) -> float:
    return float(np.linalg.norm(_field_flat(game, mutation, make_profile(game, profile).flat)))


def integrate_rmd(
    game: Game,
    mutation: MutationParams,
    x0,
    horizon: float,
    tol: float = 1e-10,
    max_step: float = 1.0,
    t_eval: Sequence[float] | None = None,
) -> OdeTrajectory:
    """Solve the replicator-mutator ODE from ``x0`` up to ``horizon``."""
    prof = make_profile(game, x0)
    return dopri54(
        lambda y: _field_flat(game, mutation, y),
        prof.flat,
        horizon,
        game.offsets(),
        tol=tol,
        max_step=max_step,
        t_eval=t_eval,
    )


def full_jacobian(game: Game, mutation: MutationParams, flat: np.ndarray) -> np.ndarray:
    """Jacobian of the field treating all ``dim`` coordinates as independent."""
    xs = _split(game, flat)
    fs = all_fitness(game, xs)
    off = game.offsets()
    J = np.zeros((game.dim, game.dim))
    for i, (x, f) in enumerate(zip(xs, fs)):
        phi = x @ f
        rows = slice(off[i], off[i + 1])
        J[rows, rows] = np.diag(f - phi - mutation.M[i]) - np.outer(x, f)
        for j in range(game.num_players):
            if j == i:
                continue
            D = pair_fitness(game, xs, i, j)  # (n_i, n_j)
            J[rows, off[j]:off[j + 1]] = x[:, None] * (D - x @ D)
    return J


def _reduce(game: Game, J: np.ndarray) -> np.ndarray:
    off = game.offsets()
    rows = [k for i in range(game.num_players) for k in range(off[i], off[i + 1] - 1)]
    last = [off[j + 1] - 1 for j in range(game.num_players) for _ in range(off[j], off[j + 1] - 1)]
    return J[np.ix_(rows, rows)] - J[np.ix_(rows, last)]


def reduced_jacobian(game: Game, mutation: MutationParams, profile) -> np.ndarray:
    """Analytic Jacobian of the field in reduced coordinates, size ``sum(n_i - 1)``."""
    prof = make_profile(game, profile)
    return _reduce(game, full_jacobian(game, mutation, prof.flat))


def reduced_jacobian_fd(game: Game, mutation: MutationParams, profile, step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian in reduced coordinates."""
    flat = make_profile(game, profile).flat
    y = _to_reduced(game, flat)
    cols = []
    for k in range(y.size):
        e = np.zeros_like(y)
        e[k] = step
        fp = _reduced_field(game, mutation, y + e)
        fm = _reduced_field(game, mutation, y - e)
        cols.append((fp - fm) / (2 * step))
    return np.column_stack(cols)


def _to_reduced(game: Game, flat: np.ndarray) -> np.ndarray:
    off = game.offsets()
    return np.concatenate([flat[off[i]:off[i + 1] - 1] for i in range(game.num_players)])


def _from_reduced(game: Game, y: np.ndarray) -> np.ndarray:
    parts, k = [], 0
    for n in game.action_counts:
        head = y[k:k + n - 1]
        parts.append(np.append(head, 1.0 - head.sum()))
        k += n - 1
    return np.concatenate(parts)


def _reduced_field(game: Game, mutation: MutationParams, y: np.ndarray) -> np.ndarray:
    return _to_reduced(game, _field_flat(game, mutation, _from_reduced(game, y)))


def _newton(game: Game, mutation: MutationParams, flat: np.ndarray, max_iter: int = 100):
    y = _to_reduced(game, flat)
    x = _from_reduced(game, y)
    res = np.linalg.norm(_field_flat(game, mutation, x))
    for _ in range(max_iter):
        if res <= FIELD_TOL:
            break
        J = _reduce(game, full_jacobian(game, mutation, x))
        try:
            dy = np.linalg.solve(J, -_to_reduced(game, _field_flat(game, mutation, x)))
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        while lam > 1e-8:
            x_try = _from_reduced(game, y + lam * dy)
            if np.all(x_try > 0):
                res_try = np.linalg.norm(_field_flat(game, mutation, x_try))
                if res_try < res:
                    break
            lam *= 0.5
        else:
            break
        y = y + lam * dy
        x, res = x_try, res_try
    return x, res


def find_equilibrium(
    game: Game,
    mutation: MutationParams,
    x_init=None,
    max_iter: int = 100,
    fallback_horizon: float = 5000.0,
) -> MixedProfile:
    """Locate a rest point of the replicator-mutator field near ``x_init``.

    Damped Newton in reduced coordinates; if it stalls, integrate the ODE
    from ``x_init`` and polish the end point with Newton again.
    """
    if x_init is None:
        x_init = MixedProfile(tuple(mutation.c))
    flat = make_profile(game, x_init).flat
    if not np.all(flat > 0):
        # start strictly inside so the damped steps can keep positivity
        flat = 0.99 * flat + 0.01 * np.concatenate(mutation.c)
    x, res = _newton(game, mutation, flat, max_iter)
    if res > FIELD_TOL:
        log.debug("Newton stalled at residual %.3g; integrating", res)
        try:
            traj = integrate_rmd(game, mutation, MixedProfile.from_flat(game, flat), fallback_horizon)
            end = traj.terminal
        except StepSizeUnderflow as exc:
            end = exc.trajectory.terminal
        x2, res2 = _newton(game, mutation, end, max_iter)
        if res2 < res:
            x, res = x2, res2
    if res > FIELD_TOL:
        raise NoConvergence(f"no rest point found (residual {res:.3g})", MixedProfile.from_flat(game, x), res)
    return MixedProfile.from_flat(game, x)


def continuation(game: Game, Ms: Sequence[float], c=None, x_init=None) -> list[MixedProfile]:
    """Track one branch of rest points along a sequence of mutation strengths."""
    out = []
    x = x_init
    for M in Ms:
        mut = MutationParams.create(game, M, c)
        x = find_equilibrium(game, mut, x)
        out.append(x)
    return out


@dataclass
class StabilityReport:
    equilibrium: MixedProfile
    eigenvalues: np.ndarray
    classification: Literal["asymptotically-stable", "unstable", "marginal"]
    residual: float

    @property
    def max_real(self) -> float:
        return float(np.max(self.eigenvalues.real))


def classify(eigenvalues: np.ndarray, margin: float = MARGIN) -> str:
    top = float(np.max(np.real(eigenvalues)))
    if top < -margin:
        return "asymptotically-stable"
    if top > margin:
        return "unstable"
    return "marginal"


def stability_spectrum(game: Game, mutation: MutationParams, profile) -> StabilityReport:
    """Eigenvalues of the reduced Jacobian at a rest point and their verdict."""
    prof = make_profile(game, profile)
    residual = field_norm(game, mutation, prof)
    if residual > EQUILIBRIUM_TOL:
        raise NotAnEquilibrium(f"field norm {residual:.3g} exceeds {EQUILIBRIUM_TOL:g}")
    eig = np.linalg.eigvals(reduced_jacobian(game, mutation, prof))
    eig = eig[np.lexsort((eig.imag, -eig.real))]
    return StabilityReport(prof, eig, classify(eig), residual)
