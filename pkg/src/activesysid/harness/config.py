"""Declarative experiment configs: YAML files plus dotted-key overrides.

A config file mirrors :class:`ExperimentConfig` field names exactly; unknown
keys anywhere are errors so silent typos cannot change an experiment.
Noise overrides accept a scalar (variance times identity), a list (diagonal
variances), or a full covariance matrix.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, fields, asdict
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError
from ..infocost import CLOSED_FORM_MI, INFO_VARIANTS, DirectedInfoConfig, TaskCostSpec
from ..planner import CemConfig
from ..systems import SYSTEMS, SystemModel, make_system

__all__ = [
    "HeldoutSpec",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "apply_overrides",
    "build_system",
    "config_to_dict",
]


@dataclass(frozen=True)
class HeldoutSpec:
    n_transitions: int = 500
    n_trajectories: int = 20
    traj_length: int = 30
    policy: str = "random"

    def __post_init__(self):
        if self.n_transitions < 0 or self.n_trajectories < 0:
            raise ConfigError("held-out counts must be non-negative")
        if self.n_transitions == 0 and self.n_trajectories == 0:
            raise ConfigError("held-out sets cannot both be empty")
        if self.n_trajectories > 0 and self.traj_length < 1:
            raise ConfigError("traj_length must be >= 1")
        if self.policy != "random":
            raise ConfigError("only the random held-out policy is supported")


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    system: str
    system_overrides: dict = field(default_factory=dict)
    episode_length: int = 100
    x0: list | None = None
    planner: CemConfig = field(default_factory=CemConfig)
    lambda_values: list = field(default_factory=lambda: [0.0, 10.0, 50.0])
    baselines: list = field(default_factory=lambda: ["random"])
    seeds: list = field(default_factory=lambda: [0])
    prior_std: float = 0.5
    state_noise: object = None
    param_noise: object = None
    heldout: HeldoutSpec = field(default_factory=HeldoutSpec)
    info_variant: str = CLOSED_FORM_MI
    directed_info: DirectedInfoConfig = field(default_factory=DirectedInfoConfig)
    task: TaskCostSpec = field(default_factory=TaskCostSpec)
    output_dir: str = "out"
    deterministic_output: bool = True
    jobs: int = 1

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}")
        if self.episode_length < 1:
            raise ConfigError("episode_length must be >= 1")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(v < 0 for v in self.lambda_values):
            raise ConfigError("lambda values must be non-negative")
        bad = set(self.baselines) - {"random", "passive"}
        if bad:
            raise ConfigError(f"unknown baselines: {sorted(bad)}")
        if self.info_variant not in INFO_VARIANTS:
            raise ConfigError(f"info_variant must be one of {INFO_VARIANTS}")
        if self.prior_std <= 0:
            raise ConfigError("prior_std must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    def conditions(self) -> list[str]:
        """Condition labels: baselines plus one condition per lambda value."""
        labels = []
        if "random" in self.baselines:
            labels.append("random")
        lams = sorted(set(float(v) for v in self.lambda_values))
        if "passive" in self.baselines and 0.0 not in lams:
            lams.insert(0, 0.0)
        labels.extend(f"lambda={v:g}" for v in lams)
        return labels

    @staticmethod
    def condition_lambda(condition: str) -> float | None:
        """The lambda of a condition label, or None for the random baseline."""
        if condition == "random":
            return None
        if condition.startswith("lambda="):
            return float(condition.split("=", 1)[1])
        raise ConfigError(f"unknown condition label {condition!r}")


def _build_section(cls, data: dict, section: str):
    if not isinstance(data, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except Exception as exc:  # dataclass validation errors become config errors
        raise ConfigError(f"invalid {section!r} section: {exc}") from exc


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    data = copy.deepcopy(data)
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "name" not in data or "system" not in data:
        raise ConfigError("config requires 'name' and 'system'")
    if "planner" in data:
        data["planner"] = _build_section(CemConfig, data["planner"], "planner")
    if "heldout" in data:
        data["heldout"] = _build_section(HeldoutSpec, data["heldout"], "heldout")
    if "directed_info" in data:
        data["directed_info"] = _build_section(
            DirectedInfoConfig, data["directed_info"], "directed_info"
        )
    if "task" in data:
        task = dict(data["task"])
        if task.get("goal") is not None:
            task["goal"] = np.asarray(task["goal"], dtype=np.float64)
        data["task"] = _build_section(TaskCostSpec, task, "task")
    try:
        return ExperimentConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if data is None:
        raise ConfigError(f"config file {path} is empty")
    return parse_config(data)


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply dotted-key overrides like planner.population=512 to raw config data."""
    out = copy.deepcopy(data)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigError(f"could not parse override value {raw!r}: {exc}") from exc
        node = out
        parts = key.split(".")
        for part in parts[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(f"override {key!r} descends through a non-mapping")
            node = nxt
        node[parts[-1]] = value
    return out


def _noise_matrix(value, dim: int, what: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return float(arr) * np.eye(dim)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ConfigError(f"{what}: diagonal of length {arr.shape[0]}, expected {dim}")
        return np.diag(arr)
    if arr.shape != (dim, dim):
        raise ConfigError(f"{what}: expected {dim}x{dim} matrix, got {arr.shape}")
    return arr


def build_system(cfg: ExperimentConfig) -> SystemModel:
    sys = make_system(cfg.system, **cfg.system_overrides)
    overrides = {}
    if cfg.state_noise is not None:
        overrides["state_noise"] = _noise_matrix(cfg.state_noise, sys.n_x, "state_noise")
    if cfg.param_noise is not None:
        overrides["param_noise"] = _noise_matrix(cfg.param_noise, sys.n_theta, "param_noise")
    if overrides:
        sys = make_system(cfg.system, **cfg.system_overrides, **overrides)
    return sys


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """JSON-serializable echo of the effective config."""

    def clean(value):
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, dict):
            return {k: clean(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [clean(v) for v in value]
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        return value

    return clean(asdict(cfg))
