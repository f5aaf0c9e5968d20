"""The six benchmark games with their known Nash equilibria.

Equilibrium coordinates are kept as exact fractions and converted to floats
only when a :class:`MixedProfile` is requested.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction as F
from typing import Literal

import numpy as np

from .games import Game, GameError, MixedProfile, build_game

CATALOG_NAMES = ("PD", "MP", "RPS3", "RPS5", "RPS9", "MP3")


@dataclass(frozen=True)
class KnownEquilibrium:
    game: str
    coords: tuple[tuple[F, ...], ...]
    kind: Literal["strict-vertex", "interior"]

    def profile(self) -> MixedProfile:
        return MixedProfile(tuple(np.array([float(v) for v in s]) for s in self.coords))


def _fr(*vals) -> tuple[F, ...]:
    return tuple(F(v) for v in vals)


_RPS3 = [[0, -2, 3], [2, 0, -2], [-1, 2, 0]]

_RPS5 = [
    [0, 4, -2, 2, -2],
    [-4, 0, 2, -1, 1],
    [2, -4, 0, 4, -1],
    [-4, 1, -4, 0, 2],
    [2, -1, 1, -2, 0],
]

_RPS9 = [
    [0, 2, 1, 3, 1, -1, -1, -2, -1],
    [-1, 0, 1, 3, 1, 1, -1, -2, -1],
    [-1, -2, 0, 3, 1, 1, 1, -2, -1],
    [-2, -4, -2, 0, 2, 2, 2, 4, -2],
    [-1, -2, -1, -3, 0, 1, 1, 2, 1],
    [1, -2, -1, -3, -1, 0, 1, 2, 1],
    [2, 4, -2, -6, -2, -2, 0, 4, 2],
    [1, 2, 1, -3, -1, -1, -1, 0, 1],
    [1, 2, 1, 3, -1, -1, -1, -2, 0],
]

# (a1, a2, a3) -> payoff tuple; action 0 = H, 1 = T
_MP3_TABLE = {
    (0, 0, 0): (1, 1, -1),
    (0, 1, 0): (-1, -1, -1),
    (1, 0, 0): (-1, 1, 1),
    (1, 1, 0): (1, -1, 1),
    (0, 0, 1): (1, -1, 1),
    (0, 1, 1): (-1, 1, 1),
    (1, 0, 1): (-1, -1, -1),
    (1, 1, 1): (1, 1, -1),
}


def _zero_sum(name: str, r1) -> Game:
    r1 = np.array(r1, dtype=float)
    return build_game(r1.shape, [r1, -r1], name)


def _mp3() -> Game:
    tensors = np.zeros((3, 2, 2, 2))
    for a, pay in _MP3_TABLE.items():
        for i in range(3):
            tensors[(i, *a)] = pay[i]
    return build_game((2, 2, 2), list(tensors), "MP3")


def _build(name: str) -> tuple[Game, list[KnownEquilibrium]]:
    if name == "PD":
        # action 0 = defect
        game = build_game((2, 2), [[[1, 5], [0, 3]], [[1, 0], [5, 3]]], "PD")
        eq = [KnownEquilibrium("PD", (_fr(1, 0), _fr(1, 0)), "strict-vertex")]
    elif name == "MP":
        r1 = [[F(1), F(-23, 10)], [F(-4, 10), F(1)]]
        r2 = [[F(-23, 10), F(1)], [F(1), F(-4, 10)]]
        game = build_game((2, 2), [np.array(r1, dtype=float), np.array(r2, dtype=float)], "MP")
        eq = [KnownEquilibrium("MP", (_fr("14/47", "33/47"), _fr("33/47", "14/47")), "interior")]
    elif name == "RPS3":
        game = _zero_sum("RPS3", _RPS3)
        eq = [KnownEquilibrium("RPS3", (_fr("2/7", "11/35", "2/5"), _fr("2/5", "11/35", "2/7")), "interior")]
    elif name == "RPS5":
        game = _zero_sum("RPS5", _RPS5)
        eq = [
            KnownEquilibrium(
                "RPS5",
                (
                    _fr("11/61", "510/2989", "8/61", "50/427", "1198/2989"),
                    _fr("1/7", "68/427", "6/49", "502/2989", "174/427"),
                ),
                "interior",
            )
        ]
    elif name == "RPS9":
        game = _zero_sum("RPS9", _RPS9)
        eq = [
            KnownEquilibrium(
                "RPS9",
                (
                    _fr("1/8", "1/8", "1/8", "1/16", "1/8", "1/8", "1/16", "1/8", "1/8"),
                    _fr("3/22", "3/44", "3/22", "1/22", "3/22", "3/22", "3/22", "3/44", "3/22"),
                ),
                "interior",
            )
        ]
    elif name == "MP3":
        game = _mp3()
        half = _fr("1/2", "1/2")
        eq = [KnownEquilibrium("MP3", (half, half, half), "interior")]
    else:
        raise GameError(f"unknown catalog game {name!r}; choose from {', '.join(CATALOG_NAMES)}")
    return game, eq


_CACHE: dict[str, tuple[Game, list[KnownEquilibrium]]] = {}


def catalog_game(name: str) -> tuple[Game, list[KnownEquilibrium]]:
    """Return a catalog game and its listed Nash equilibria.

    Lookup is case-insensitive; ``3MP`` is accepted as an alias of ``MP3``.
    """
    key = name.upper().replace("-", "")
    if key == "3MP":
        key = "MP3"
    if key not in _CACHE:
        _CACHE[key] = _build(key)
    game, eqs = _CACHE[key]
    return game, list(eqs)
