from .config import (
    ExperimentConfig,
    HeldoutSpec,
    apply_overrides,
    build_system,
    config_to_dict,
    load_config,
    parse_config,
)
from .episode import EpisodeRecord, initial_belief, run_episode
from .experiment import METRICS_HEADER, compute_summary, run_experiment
from .heldout import HeldoutData, evaluate_heldout, gen_heldout

__all__ = [
    "ExperimentConfig",
    "HeldoutSpec",
    "apply_overrides",
    "build_system",
    "config_to_dict",
    "load_config",
    "parse_config",
    "EpisodeRecord",
    "initial_belief",
    "run_episode",
    "METRICS_HEADER",
    "compute_summary",
    "run_experiment",
    "HeldoutData",
    "evaluate_heldout",
    "gen_heldout",
]
