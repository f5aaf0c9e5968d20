"""Finite normal-form games, mixed profiles and Nash-condition checks.

Payoffs are stored as one dense tensor per player, indexed by the pure
profile ``(a_1, ..., a_N)``. All payoff evaluations contract these tensors
against the players' mixed strategies, which is exact (no sampling).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-9


class GameError(ValueError):
    """Malformed game data or a profile that does not fit the game."""


@dataclass(frozen=True, eq=False)
class Game:
    """An N-player normal-form game with dense per-player payoff tensors."""

    action_counts: tuple[int, ...]
    payoffs: tuple[np.ndarray, ...]
    name: str = "custom"

    @property
    def num_players(self) -> int:
        return len(self.action_counts)

    @property
    def dim(self) -> int:
        """Length of the concatenated profile vector."""
        return int(sum(self.action_counts))

    @property
    def reduced_dim(self) -> int:
        return int(sum(n - 1 for n in self.action_counts))

    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.action_counts)]).astype(int)

    def payoff(self, player: int, actions: Sequence[int]) -> float:
        return float(self.payoffs[player][tuple(actions)])


def build_game(action_counts: Sequence[int], payoff_tensors: Sequence, name: str = "custom") -> Game:
    """Validate shapes and finiteness and return an immutable :class:`Game`.

    ``payoff_tensors`` may be nested lists or arrays; a flat row-major list
    of length ``prod(action_counts)`` per player is also accepted.
    """
    counts = tuple(int(n) for n in action_counts)
    if len(counts) < 2:
        raise GameError("a game needs at least two players")
    if any(n < 2 for n in counts):
        raise GameError(f"every player needs at least two actions, got {counts}")
    if len(payoff_tensors) != len(counts):
        raise GameError(f"expected {len(counts)} payoff tensors, got {len(payoff_tensors)}")

    tensors = []
    for i, raw in enumerate(payoff_tensors):
        arr = np.array(raw, dtype=float)
        if arr.ndim == 1 and arr.size == int(np.prod(counts)):
            arr = arr.reshape(counts)
        if arr.shape != counts:
            raise GameError(f"payoff tensor of player {i + 1} has shape {arr.shape}, expected {counts}")
        if not np.all(np.isfinite(arr)):
            raise GameError(f"payoff tensor of player {i + 1} has non-finite entries")
        arr.setflags(write=False)
        tensors.append(arr)
    return Game(counts, tuple(tensors), name)


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """One probability vector per player."""

    strategies: tuple[np.ndarray, ...]

    def __iter__(self):
        return iter(self.strategies)

    def __getitem__(self, i: int) -> np.ndarray:
        return self.strategies[i]

    def __len__(self) -> int:
        return len(self.strategies)

    @property
    def flat(self) -> np.ndarray:
        return np.concatenate(self.strategies)

    def is_interior(self) -> bool:
        return all(bool(np.all(s > 0)) for s in self.strategies)

    def tolist(self) -> list[list[float]]:
        return [s.tolist() for s in self.strategies]

    @classmethod
    def from_flat(cls, game: Game, flat: Iterable[float]) -> "MixedProfile":
        flat = np.asarray(flat, dtype=float)
        off = game.offsets()
        if flat.shape != (game.dim,):
            raise GameError(f"flat profile has length {flat.size}, expected {game.dim}")
        return cls(tuple(flat[off[i]:off[i + 1]].copy() for i in range(game.num_players)))

    @classmethod
    def uniform(cls, game: Game) -> "MixedProfile":
        return cls(tuple(np.full(n, 1.0 / n) for n in game.action_counts))


def make_profile(game: Game, strategies, renormalize: bool = False) -> MixedProfile:
    """Check ``strategies`` against ``game`` and wrap them in a :class:`MixedProfile`.

    Inputs are renormalized only when ``renormalize`` is set; otherwise a sum
    off by more than 1e-9 is an error.
    """
    if isinstance(strategies, MixedProfile):
        strategies = strategies.strategies
    if len(strategies) != game.num_players:
        raise GameError(f"profile has {len(strategies)} players, game has {game.num_players}")
    out = []
    for i, (s, n) in enumerate(zip(strategies, game.action_counts)):
        x = np.array(s, dtype=float)
        if x.shape != (n,):
            raise GameError(f"strategy of player {i + 1} has shape {x.shape}, expected ({n},)")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise GameError(f"strategy of player {i + 1} has negative or non-finite entries")
        total = x.sum()
        if renormalize:
            if total <= 0:
                raise GameError(f"strategy of player {i + 1} has zero mass")
            x = x / total
        elif abs(total - 1.0) > SUM_TOL:
            raise GameError(f"strategy of player {i + 1} sums to {total!r}")
        out.append(x)
    return MixedProfile(tuple(out))


def _contract(tensor: np.ndarray, profile: Sequence[np.ndarray], keep: Sequence[int]) -> np.ndarray:
    """Contract every axis of ``tensor`` not in ``keep`` with the matching strategy."""
    out = tensor
    for axis in range(tensor.ndim - 1, -1, -1):
        if axis in keep:
            continue
        out = np.tensordot(out, profile[axis], axes=([axis], [0]))
    return out


def expected_payoff(game: Game, profile, player: int) -> float:
    """E[r_player(a)] when every player draws independently from ``profile``."""
    prof = make_profile(game, profile)
    return float(_contract(game.payoffs[player], prof.strategies, ()))


def fitness(game: Game, profile, player: int) -> np.ndarray:
    """Expected payoff of each pure action of ``player`` against the others' mix."""
    prof = make_profile(game, profile)
    return _contract(game.payoffs[player], prof.strategies, (player,))


def pair_fitness(game: Game, profile: Sequence[np.ndarray], player: int, other: int) -> np.ndarray:
    """Matrix ``E[r_player | a_player = h, a_other = l]`` with remaining players mixed."""
    out = _contract(game.payoffs[player], profile, (player, other))
    return out if player < other else out.T


def all_fitness(game: Game, profile: Sequence[np.ndarray]) -> list[np.ndarray]:
    # unchecked variant for hot paths (ODE right-hand side)
    return [_contract(game.payoffs[i], profile, (i,)) for i in range(game.num_players)]


def player_violations(game: Game, profile) -> np.ndarray:
    """Per player, the largest gain from switching to a pure action (floored at 0)."""
    prof = make_profile(game, profile)
    out = np.empty(game.num_players)
    for i, f in enumerate(all_fitness(game, prof.strategies)):
        out[i] = max(0.0, float(np.max(f) - prof[i] @ f))
    return out


def nash_violation(game: Game, profile) -> float:
    """Smallest epsilon for which ``profile`` is an epsilon-equilibrium."""
    return float(np.max(player_violations(game, profile)))


def shift_nonnegative(game: Game) -> tuple[Game, np.ndarray]:
    """Add ``C_i = max(0, -min r_i)`` to each player's payoffs."""
    shifts = np.array([max(0.0, -float(np.min(r))) for r in game.payoffs])
    if not np.any(shifts):
        return game, shifts
    shifted = build_game(game.action_counts, [r + s for r, s in zip(game.payoffs, shifts)], game.name)
    return shifted, shifts


def sample_action(profile, player: int, rng: np.random.Generator) -> int:
    """Draw an action of ``player`` with probabilities ``profile[player]``."""
    x = np.asarray(profile[player], dtype=float)
    u = rng.random()
    return int(min(np.searchsorted(np.cumsum(x), u, side="right"), x.size - 1))
