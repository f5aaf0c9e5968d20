"""Experiment configuration, seeded self-play ensembles and the preset grid."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .catalog import CATALOG_NAMES, catalog_game
from .config import ConfigError, dump_kv, load_kv, parse_kv
from .dynamics import MutationParams, find_equilibrium
from .games import Game, GameError, MixedProfile, build_game, make_profile, shift_nonnegative
from .learners import LearnerConfig
from .simulation import init_stream, player_stream, self_play

log = logging.getLogger(__name__)


class ExperimentConfig(BaseModel):
    """One self-play protocol: a game, a learner per player and run settings.

    Player and action indices are 0-based. ``learners`` holds either one
    config shared by every player or one per player.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    game: str = "MP"
    learners: tuple[LearnerConfig, ...] = (LearnerConfig(),)
    steps: int = Field(600_000, ge=0)
    num_inits: int = Field(10, ge=1)
    seed: int = Field(0, ge=0)
    init: Literal["dirichlet-uniform", "explicit"] = "dirichlet-uniform"
    initial_profiles: tuple[tuple[tuple[float, ...], ...], ...] | None = None
    stride: int = Field(100, ge=1)
    window: int = Field(5000, ge=2)
    projection: tuple[tuple[int, int], ...] = ((0, 0), (1, 0))
    target: Literal["nash", "mutation"] = "nash"
    workers: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if self.init == "explicit":
            if not self.initial_profiles:
                raise ValueError("init = explicit needs initial_profiles")
            if len(self.initial_profiles) != self.num_inits:
                raise ValueError(f"{len(self.initial_profiles)} initial profiles for num_inits={self.num_inits}")
        if len(self.projection) != 2:
            raise ValueError("projection needs exactly two (player, action) pairs")
        return self

    def learner_for(self, player: int) -> LearnerConfig:
        return self.learners[0] if len(self.learners) == 1 else self.learners[player]

    def config_hash(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]

    def record_steps(self) -> np.ndarray:
        return np.arange(0, self.steps + 1, self.stride, dtype=np.int64)


def load_game(spec: str) -> Game:
    """A catalog name, or a path to a game definition file."""
    key = spec.upper().replace("-", "")
    if key in CATALOG_NAMES or key == "3MP":
        return catalog_game(spec)[0]
    path = Path(spec)
    if not path.exists():
        raise GameError(f"{spec!r} is neither a catalog game ({', '.join(CATALOG_NAMES)}) nor a file")
    return game_from_dict(load_kv(path), default_name=path.stem)


def game_from_dict(data: dict[str, Any], default_name: str = "custom") -> Game:
    if "action_counts" not in data or "payoffs" not in data:
        raise GameError("game file needs 'action_counts' and 'payoffs'")
    payoffs = data["payoffs"]
    if isinstance(payoffs, dict):
        try:
            payoffs = [payoffs[str(i)] for i in range(len(data["action_counts"]))]
        except KeyError as exc:
            raise GameError(f"missing payoffs.{exc.args[0]}") from None
    return build_game(data["action_counts"], payoffs, str(data.get("name", default_name)))


def game_to_text(game: Game) -> str:
    data = {
        "name": game.name,
        "action_counts": list(game.action_counts),
        "payoffs": {str(i): r.ravel().tolist() for i, r in enumerate(game.payoffs)},
    }
    return dump_kv(data)


def _config_from_dict(data: dict[str, Any]) -> ExperimentConfig:
    data = dict(data)
    base = data.pop("learner", {})
    per_player = data.pop("player", {})
    if "init" in data and isinstance(data["init"], dict):
        sub = data.pop("init")
        data["init"] = sub.get("scheme", "explicit" if "profiles" in sub else "dirichlet-uniform")
        if "profiles" in sub:
            data["initial_profiles"] = sub["profiles"]
    if per_player:
        game = load_game(str(data.get("game", "MP")))
        unknown = set(per_player) - {str(i) for i in range(game.num_players)}
        if unknown:
            raise ConfigError(f"player sections {sorted(unknown)} do not exist in {game.name}")
        learners = [LearnerConfig(**{**base, **per_player.get(str(i), {})}) for i in range(game.num_players)]
    else:
        learners = [LearnerConfig(**base)]
    return ExperimentConfig(learners=tuple(learners), **data)


def parse_experiment(text: str) -> ExperimentConfig:
    try:
        return _config_from_dict(parse_kv(text))
    except ValidationError as exc:
        raise ConfigError(str(exc)) from None


def load_experiment(path: str | Path) -> ExperimentConfig:
    return parse_experiment(Path(path).read_text())


def experiment_to_text(config: ExperimentConfig) -> str:
    data = config.model_dump(mode="json", exclude_defaults=False)
    learners = data.pop("learners")
    # every learner field is written out so a saved file does not depend on defaults
    if len(learners) == 1:
        data["learner"] = learners[0]
    else:
        data["player"] = {str(i): lc for i, lc in enumerate(learners)}
    profiles = data.pop("initial_profiles")
    if profiles is not None:
        data["initial_profiles"] = profiles
    return dump_kv(data)


@dataclass
class RunRecord:
    run_id: int
    seed: int
    steps: np.ndarray
    profiles: np.ndarray  # (len(steps), dim)
    rolling_std: np.ndarray  # (len(steps), num_players)
    config_hash: str
    action_counts: tuple[int, ...]
    min_dist: np.ndarray | None = None

    def profile_at(self, k: int) -> MixedProfile:
        off = np.concatenate([[0], np.cumsum(self.action_counts)])
        flat = self.profiles[k]
        return MixedProfile(tuple(flat[off[i]:off[i + 1]] for i in range(len(self.action_counts))))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.action_counts)]).astype(int)


def initial_profiles(config: ExperimentConfig, game: Game) -> list[MixedProfile]:
    if config.init == "explicit":
        return [make_profile(game, p) for p in config.initial_profiles]
    out = []
    for run in range(config.num_inits):
        rng = init_stream(config.seed, run)
        out.append(MixedProfile(tuple(rng.dirichlet(np.ones(n)) for n in game.action_counts)))
    return out


def target_profile(config: ExperimentConfig, game: Game) -> MixedProfile | None:
    """Plot/diagnostic target: the listed Nash equilibrium or the mutation equilibrium."""
    key = game.name.upper()
    if config.target == "nash":
        if key in CATALOG_NAMES:
            return catalog_game(key)[1][0].profile()
        return None
    learners = [config.learner_for(i) for i in range(game.num_players)]
    mutation = MutationParams(
        tuple(lc.mutation for lc in learners),
        tuple(lc.bias(n) for lc, n in zip(learners, game.action_counts)),
        plain_rd=any(lc.mutation == 0 for lc in learners),
    )
    start = catalog_game(key)[1][0].profile() if key in CATALOG_NAMES else None
    return find_equilibrium(game, mutation, start)


def run_experiment(config: ExperimentConfig, track: MixedProfile | np.ndarray | None = None) -> list[RunRecord]:
    """Run every initial condition of ``config``; the result is ordered by run id.

    With ``track`` set, every record also stores the smallest per-step
    distance to that profile since the previous record.
    """
    game = load_game(config.game)
    for player, action in config.projection:
        if not (0 <= player < game.num_players and 0 <= action < game.action_counts[player]):
            raise ValueError(f"projection ({player}, {action}) is not valid for {game.name}")
    if len(config.learners) not in (1, game.num_players):
        raise ValueError(f"{len(config.learners)} learner configs for a {game.num_players}-player game")
    shifted, _ = shift_nonnegative(game)
    learners = [config.learner_for(i) for i in range(game.num_players)]
    for i, lc in enumerate(learners):
        lc.check_step_size(float(shifted.payoffs[i].max()))
        lc.bias(game.action_counts[i])
    inits = initial_profiles(config, game)
    rec = config.record_steps()
    chash = config.config_hash()
    target = None
    if track is not None:
        target = track.flat if isinstance(track, MixedProfile) else np.asarray(track, dtype=float)

    def one(run: int) -> RunRecord:
        streams = [player_stream(config.seed, run, p) for p in range(game.num_players)]
        out = self_play(
            shifted, learners, inits[run].strategies, config.steps, streams, rec,
            window=config.window, target=target, original_game=game,
        )
        return RunRecord(run, config.seed, out.steps, out.profiles, out.rolling_std, chash,
                         game.action_counts, out.min_dist)

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            return list(pool.map(one, range(config.num_inits)))
    return [one(run) for run in range(config.num_inits)]


# --- presets ----------------------------------------------------------------

PRESET_STEPS = {"PD": 600_000, "MP": 600_000, "RPS3": 800_000, "RPS5": 800_000, "RPS9": 1_000_000, "MP3": 1_000_000}
PRESET_GRID = {name: (1, 10, 20, 30, 35, 40) for name in ("PD", "MP", "RPS3", "RPS5", "RPS9")}
PRESET_GRID["MP3"] = (10, 20, 30)
DPU_THETA = 1e-4
LOGISTIC_THETA = {name: 5e-3 for name in PRESET_GRID}
LOGISTIC_THETA["MP3"] = 1e-4
WOLF_ALPHA0 = (1e-1, 1e-2)
WOLF_DELTA_W = 0.5e-4


def preset_configs() -> dict[str, ExperimentConfig]:
    """The figure protocols: 10 initial conditions per game/algorithm/parameter."""
    out = {}
    for game, grid in PRESET_GRID.items():
        common = dict(game=game, steps=PRESET_STEPS[game], num_inits=10, seed=0)
        for v in grid:
            out[f"{game}/MBL-DPU/{v}"] = ExperimentConfig(
                learners=(LearnerConfig(algorithm="MBL-DPU", theta=DPU_THETA, M=1 / v),), **common
            )
            out[f"{game}/MBL-LC/{v}"] = ExperimentConfig(
                learners=(LearnerConfig(algorithm="MBL-LC", theta=LOGISTIC_THETA[game], M=1 / v, tau=v),), **common
            )
            out[f"{game}/FAQ/{v}"] = ExperimentConfig(
                learners=(LearnerConfig(algorithm="FAQ", theta=LOGISTIC_THETA[game], tau=v),), **common
            )
        for a0 in WOLF_ALPHA0:
            out[f"{game}/WoLF-PHC/{a0:g}"] = ExperimentConfig(
                learners=(LearnerConfig(algorithm="WoLF-PHC", alpha0=a0, delta_w=WOLF_DELTA_W),), **common
            )
    return out
