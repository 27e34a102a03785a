"""Active information gathering for online dynamics identification."""

__version__ = "0.1.0"

from .estimation import GaussianBelief, LearningTrace, ekf_update, info_form_covariance, run_learning_process
from .infocost import (
    CLOSED_FORM_MI,
    DIRECTED_INFO_MC,
    CostContext,
    DirectedInfoConfig,
    TaskCostSpec,
    composite_cost,
    directed_info_cost_mc,
    mi_cost,
    rollout_nominal,
    task_cost,
)
from .linalg import logdet_psd, mvn_sample, symmetrize
from .planner import CemConfig, PlanResult, RecedingHorizonPlanner, cem_plan, receding_horizon_step
from .rng import RngStream
from .systems import (
    SYSTEMS,
    DampedPendulum,
    DoubleIntegrator,
    PursuitEvasionLqr,
    PursuitEvasionMpc,
    SystemModel,
    make_system,
)

__all__ = [
    "__version__",
    "GaussianBelief",
    "LearningTrace",
    "ekf_update",
    "info_form_covariance",
    "run_learning_process",
    "CLOSED_FORM_MI",
    "DIRECTED_INFO_MC",
    "CostContext",
    "DirectedInfoConfig",
    "TaskCostSpec",
    "composite_cost",
    "directed_info_cost_mc",
    "mi_cost",
    "rollout_nominal",
    "task_cost",
    "logdet_psd",
    "mvn_sample",
    "symmetrize",
    "CemConfig",
    "PlanResult",
    "RecedingHorizonPlanner",
    "cem_plan",
    "receding_horizon_step",
    "RngStream",
    "SYSTEMS",
    "DampedPendulum",
    "DoubleIntegrator",
    "PursuitEvasionLqr",
    "PursuitEvasionMpc",
    "SystemModel",
    "make_system",
]
