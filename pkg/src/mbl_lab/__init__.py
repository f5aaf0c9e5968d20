"""Mutation-bias learning in normal-form games: learners, replicator-mutator ODE and experiment harness."""

from .catalog import CATALOG_NAMES, KnownEquilibrium, catalog_game
from .dynamics import (
    MutationParams,
    StabilityReport,
    find_equilibrium,
    integrate_rmd,
    reduced_jacobian,
    rmd_field,
    stability_spectrum,
)
from .experiment import ExperimentConfig, RunRecord, load_experiment, preset_configs, run_experiment
from .games import (
    Game,
    MixedProfile,
    build_game,
    expected_payoff,
    fitness,
    make_profile,
    nash_violation,
    sample_action,
    shift_nonnegative,
)
from .learners import LearnerConfig, LearnerState, init_state

__all__ = [
    "CATALOG_NAMES",
    "ExperimentConfig",
    "Game",
    "KnownEquilibrium",
    "LearnerConfig",
    "LearnerState",
    "MixedProfile",
    "MutationParams",
    "RunRecord",
    "StabilityReport",
    "build_game",
    "catalog_game",
    "expected_payoff",
    "find_equilibrium",
    "fitness",
    "init_state",
    "integrate_rmd",
    "load_experiment",
    "make_profile",
    "nash_violation",
    "preset_configs",
    "reduced_jacobian",
    "rmd_field",
    "run_experiment",
    "sample_action",
    "shift_nonnegative",
    "stability_spectrum",
]
__version__ = "0.1.0"
