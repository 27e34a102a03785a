"""One closed-loop episode: plan, act, observe, filter, score.

Per step the agent picks a control (uniform for the random baseline, a
receding-horizon CEM plan otherwise), nature advances the parameters and the
state with noise, and the belief is filtered on the observed transition.
The episode ends with a held-out evaluation of the final belief. Everything
is derived from the seed through named substreams, so a (condition, seed)
pair fully determines the record; the held-out stream depends on the seed
only and is therefore identical across conditions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ActiveSysIdError
from ..estimation import GaussianBelief, ekf_update
from ..infocost import CostContext, task_cost
from ..linalg import as_vec, mvn_sample
from ..planner import RecedingHorizonPlanner
from ..rng import RngStream
from .config import ExperimentConfig, build_system
from .heldout import evaluate_heldout, gen_heldout

__all__ = ["EpisodeRecord", "run_episode", "initial_belief"]


@dataclass
class EpisodeRecord:
    experiment: str
    condition: str
    seed: int
    rows: list[dict] = field(default_factory=list)
    heldout_single_step_err: float = float("nan")
    heldout_autoregressive_err: float = float("nan")
    heldout_diverged: bool = False
    final_param_error: float = float("nan")
    final_cov_trace: float = float("nan")
    aborted: bool = False
    aborted_step: int | None = None
    error: str | None = None


def initial_belief(sys, prior_std: float, seed: int) -> GaussianBelief:
    """Prior belief for a seed: true parameters plus one Gaussian offset.

    The offset is drawn from a stream keyed by the seed alone, so every
    condition of a seed starts from the same prior.
    """
    rng = RngStream(seed).substream("prior")
    offset = prior_std * rng.normal(size=sys.n_theta)
    return GaussianBelief(sys.theta_true + offset, prior_std**2 * np.eye(sys.n_theta))


def run_episode(cfg: ExperimentConfig, condition: str, seed: int) -> EpisodeRecord:
    sys = build_system(cfg)
    lam = ExperimentConfig.condition_lambda(condition)
    record = EpisodeRecord(experiment=cfg.name, condition=condition, seed=seed)

    belief = initial_belief(sys, cfg.prior_std, seed)
    x = (
        sys.default_initial_state()
        if cfg.x0 is None
        else as_vec(np.asarray(cfg.x0, dtype=np.float64), dim=sys.n_x, name="x0")
    )
    theta = sys.theta_true.copy()

    root = RngStream(seed)
    noise_rng = root.substream("episode_noise")
    control_rng = root.substream("baseline_controls")
    plan_rng = root.substream("planner")

    planner = None
    if lam is not None:
        planner = RecedingHorizonPlanner(cfg.planner, cfg.info_variant)

    record_wall = not cfg.deterministic_output
    for step_i in range(cfg.episode_length):
        t_start = time.perf_counter()
        try:
            if planner is None:
                u = sys.sample_control(control_rng)
                info_planned = 0.0
            else:
                ctx = CostContext(
                    sys=sys,
                    belief=belief,
                    x0=x,
                    lam=lam,
                    task=cfg.task,
                    di_config=cfg.directed_info,
                )
                u, plan = planner.step(ctx, plan_rng.substream("step", step_i))
                info_planned = plan.cost_breakdown["info"]

            eps_theta = mvn_sample(np.zeros(sys.n_theta), sys.param_noise, noise_rng)
            theta = sys.param_step(theta) + eps_theta
            eps_x = mvn_sample(np.zeros(sys.n_x), sys.state_noise, noise_rng)
            x_next = sys.step(x, u, theta) + eps_x
            obs = sys.observe(x_next)
            belief = ekf_update(belief, obs, u, x, sys)
        except ActiveSysIdError as exc:
            record.aborted = True
            record.aborted_step = step_i
            record.error = f"{type(exc).__name__}: {exc}"
            break

        wall_ms = (time.perf_counter() - t_start) * 1e3 if record_wall else 0.0
        record.rows.append(
            {
                "step": step_i,
                "param_error": float(np.linalg.norm(belief.mean - theta)),
                "cov_trace": float(np.trace(belief.cov)),
                "task_cost": task_cost(cfg.task, np.stack([x, x_next]), u[None, :]),
                "info_cost": float(info_planned),
                "wall_ms": float(wall_ms),
            }
        )
        x = x_next

    if record.rows:
        record.final_param_error = record.rows[-1]["param_error"]
        record.final_cov_trace = record.rows[-1]["cov_trace"]

    if not record.aborted:
        heldout = gen_heldout(
            sys, sys.theta_true, cfg.heldout, RngStream(seed).substream("heldout")
        )
        scores = evaluate_heldout(belief, sys, heldout)
        record.heldout_single_step_err = scores["single_step_err"]
        record.heldout_autoregressive_err = scores["autoregressive_err"]
        record.heldout_diverged = bool(scores["diverged"])
    return record
