"""Planning costs: task costs, information costs, and their composite.

Two information costs are provided. ``mi_cost`` is the closed form for
Gaussian beliefs with fully observed linearized dynamics: the per-step gain
is half the log-det ratio between the belief-inflated transition covariance
``F Sigma F^T + state_noise`` and the bare noise covariance, accumulated
along the nominal (noise-free, mean-parameter) rollout, and negated so that
more informative plans cost less.

``directed_info_cost_mc`` is the general estimator: it makes no linearity
assumption and instead treats each predicted transition as a Gaussian
mixture over parameter draws from the belief. Each step contributes the gap
between the entropy of that mixture (the observation's marginal uncertainty)
and the entropy given the parameters (bare noise). The two entropies are
estimated jointly from the same mixture samples, pairing every sample with
its own component's log-density, so the estimate collapses to exactly zero
when the belief carries no spread and its Monte-Carlo error is reported.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    EstimatorVarianceWarning,
    NoiseRegularizedWarning,
    NonFiniteOutput,
)
from .estimation import GaussianBelief
from .linalg import as_vec, logdet_psd
from .rng import RngStream
from .systems import SystemModel

__all__ = [
    "TaskCostSpec",
    "CostContext",
    "DirectedInfoConfig",
    "DirectedInfoEstimate",
    "CLOSED_FORM_MI",
    "DIRECTED_INFO_MC",
    "INFO_VARIANTS",
    "rollout_nominal",
    "rollout_nominal_batch",
    "mi_cost",
    "directed_info_cost_mc",
    "directed_info_cost_mc_detailed",
    "task_cost",
    "composite_cost",
    "composite_cost_parts",
    "evaluate_control_population",
]

CLOSED_FORM_MI = "closed_form_mi"
DIRECTED_INFO_MC = "directed_info_mc"
INFO_VARIANTS = (CLOSED_FORM_MI, DIRECTED_INFO_MC)

_NOISE_EIG_FLOOR = 1e-10
_NOISE_RIDGE = 1e-8


@dataclass(frozen=True)
class TaskCostSpec:
    """Task cost selector.

    kind: one of "none", "goal" (quadratic deviation from a goal state),
    "angle" (quadratic tracking of a reference angle, wrapped), or
    "evader_distance" (negated squared distance between the two agents'
    positions). Every variant adds control_effort_weight * sum ||u||^2.
    For the goal variant ``weight`` may be a per-state-dimension vector,
    e.g. weighting only the position components.
    """

    kind: str = "none"
    goal: np.ndarray | None = None
    ref_angle: float = 0.0
    weight: object = 1.0
    control_effort_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "goal", "angle", "evader_distance"):
            raise DimensionMismatch(f"unknown task cost kind {self.kind!r}")
        weight = np.asarray(self.weight, dtype=np.float64)
        if weight.ndim > 1 or (weight.ndim == 1 and self.kind != "goal"):
            raise DimensionMismatch("only the goal variant takes per-dimension weights")
        if np.any(weight < 0) or self.control_effort_weight < 0:
            raise DimensionMismatch("task cost weights must be non-negative")
        object.__setattr__(self, "weight", weight if weight.ndim else float(weight))
        if self.kind == "goal":
            if self.goal is None:
                raise DimensionMismatch("goal task cost requires a goal state")
            object.__setattr__(self, "goal", as_vec(self.goal, name="goal"))
            if weight.ndim == 1 and weight.shape[0] != self.goal.shape[0]:
                raise DimensionMismatch("per-dimension weights must match the goal length")


@dataclass(frozen=True)
class DirectedInfoConfig:
    """Monte-Carlo settings for the directed-information estimator.

    ``n_belief_samples`` is the mixture size K per step. The evaluation
    sample count per step is ``n_noise_samples`` per mixture component,
    capped at ``max_eval_samples`` (scoring cost grows as eval * K, so the
    cap keeps large-K runs tractable without hurting the standard error).
    """

    n_belief_samples: int = 1024
    n_noise_samples: int = 8
    max_eval_samples: int = 2048

    def __post_init__(self):
        # K = 1 is allowed: the estimate must then vanish up to Monte-Carlo
        # error, which is itself a tested property of the estimator.
        if self.n_belief_samples < 1 or self.n_noise_samples < 2:
            raise DimensionMismatch("directed-info sample counts too small")
        if self.max_eval_samples < 2:
            raise DimensionMismatch("max_eval_samples must be >= 2")

    def eval_samples(self) -> int:
        return min(self.n_noise_samples * self.n_belief_samples, self.max_eval_samples)


@dataclass(frozen=True)
class DirectedInfoEstimate:
    value: float
    stderr: float
    per_step: np.ndarray
    high_variance: bool


@dataclass(frozen=True)
class CostContext:
    """Everything a planner needs to score a candidate control sequence."""

    sys: SystemModel
    belief: GaussianBelief
    x0: np.ndarray
    lam: float = 0.0
    task: TaskCostSpec = field(default_factory=TaskCostSpec)
    di_config: DirectedInfoConfig = field(default_factory=DirectedInfoConfig)

    def __post_init__(self):
        object.__setattr__(self, "x0", as_vec(self.x0, dim=self.sys.n_x, name="x0"))
        if not np.isfinite(self.lam) or self.lam < 0:
            raise DimensionMismatch("lambda must be finite and non-negative")
        if self.belief.dim != self.sys.n_theta:
            raise DimensionMismatch("belief dimension does not match system")


# -- rollouts -----------------------------------------------------------------


def rollout_nominal(sys: SystemModel, x0, controls, theta_bar) -> np.ndarray:
    """Noise-free rollout under fixed parameters; returns (T+1, n_x)."""
    x = as_vec(x0, dim=sys.n_x, name="x0")
    theta_bar = as_vec(theta_bar, dim=sys.n_theta, name="theta_bar")
    states = [x]
    for u in controls:
        x = sys.step(states[-1], as_vec(u, dim=sys.n_u, name="control"), theta_bar)
        if not np.all(np.isfinite(x)):
            raise NonFiniteOutput("nominal rollout diverged")
        states.append(x)
    return np.array(states)


def rollout_nominal_batch(sys: SystemModel, x0, U: np.ndarray, theta_bar) -> np.ndarray:
    """Batched noise-free rollouts for (P, T, n_u) control candidates.

    Candidates that diverge are carried as nan rows instead of raising.
    """
    x0 = as_vec(x0, dim=sys.n_x, name="x0")
    U = np.asarray(U, dtype=np.float64)
    P, T = U.shape[0], U.shape[1]
    states = np.empty((P, T + 1, sys.n_x))
    states[:, 0, :] = x0
    with np.errstate(all="ignore"):
        for i in range(T):
            nxt = sys.step_batch(states[:, i, :], U[:, i, :], theta_bar)
            nxt = np.where(np.isfinite(nxt), nxt, np.nan)
            states[:, i + 1, :] = nxt
    return states


# -- task costs ----------------------------------------------------------------


def _wrap_angle(d: np.ndarray) -> np.ndarray:
    return (d + np.pi) % (2.0 * np.pi) - np.pi


def _stage_cost_batch(spec: TaskCostSpec, states: np.ndarray) -> np.ndarray:
    """Summed stage cost over states[:, 1:, :] for a (P, T+1, n_x) batch."""
    if spec.kind == "none":
        return np.zeros(states.shape[0])
    tail = states[:, 1:, :]
    if spec.kind == "goal":
        diff = tail - spec.goal
        if np.ndim(spec.weight) == 1:
            return np.sum((diff * diff) @ spec.weight, axis=1)
        return spec.weight * np.sum(diff * diff, axis=(1, 2))
    if spec.kind == "angle":
        err = _wrap_angle(tail[:, :, 0] - spec.ref_angle)
        return spec.weight * np.sum(err * err, axis=1)
    # evader_distance: stacked two-agent state, positions at [0:2] and [4:6]
    diff = tail[:, :, 0:2] - tail[:, :, 4:6]
    return -spec.weight * np.sum(diff * diff, axis=(1, 2))


def task_cost(spec: TaskCostSpec, states, controls) -> float:
    """Task cost of one rolled-out trajectory (states include the start)."""
    states = np.asarray(states, dtype=np.float64)
    U = np.asarray(controls, dtype=np.float64)
    if states.shape[0] != U.shape[0] + 1:
        raise DimensionMismatch("states must be one longer than controls")
    if spec.kind == "evader_distance" and states.shape[1] < 6:
        raise DimensionMismatch("evader_distance task needs a stacked two-agent state")
    stage = _stage_cost_batch(spec, states[None, :, :])[0]
    effort = spec.control_effort_weight * float(np.sum(U * U))
    return float(stage + effort)


# -- state-noise regularization ---------------------------------------------------


def regularized_state_noise(sys: SystemModel) -> tuple[np.ndarray, bool]:
    """State noise made strictly PD for the log-det ratio; flags adjustment."""
    cov = sys.state_noise
    if np.linalg.eigvalsh(cov)[0] < _NOISE_EIG_FLOOR:
        return cov + _NOISE_RIDGE * np.eye(cov.shape[0]), True
    return cov, False


def _state_noise_for_info(sys: SystemModel) -> np.ndarray:
    cov, adjusted = regularized_state_noise(sys)
    if adjusted:
        warnings.warn(
            f"{sys.name}: state noise is singular; using a 1e-8 ridge for the "
            "information cost",
            NoiseRegularizedWarning,
            stacklevel=3,
        )
    return cov


# -- closed-form mutual-information cost --------------------------------------------


def mi_cost(sys: SystemModel, x0, controls, belief: GaussianBelief) -> float:
    """Closed-form information cost along the nominal rollout.

    Returns -(1/2) * sum_i [logdet(F_i Sigma F_i^T + noise) - logdet(noise)],
    which is always <= 0 and equals 0 only when the belief spread is
    invisible through every step's parameter Jacobian.
    """
    controls = [as_vec(u, dim=sys.n_u, name="control") for u in controls]
    if len(controls) < 1:
        raise DimensionMismatch("mi_cost requires at least one control")
    noise = _state_noise_for_info(sys)
    states = rollout_nominal(sys, x0, controls, belief.mean)
    logdet_noise = logdet_psd(noise)
    total = 0.0
    for i, u in enumerate(controls):
        F = sys.jac_f_theta(states[i], u, belief.mean)
        S = F @ belief.cov @ F.T + noise
        total += logdet_psd(S) - logdet_noise
    return -0.5 * total


def _mi_cost_batch(
    sys: SystemModel, states: np.ndarray, U: np.ndarray, belief: GaussianBelief
) -> np.ndarray:
    """Vectorized mi_cost for pre-rolled (P, T+1, n_x) nominal states."""
    P, T = U.shape[0], U.shape[1]
    noise = _state_noise_for_info(sys)
    logdet_noise = logdet_psd(noise)
    valid = np.all(np.isfinite(states), axis=(1, 2))
    out = np.full(P, np.inf)
    if not valid.any():
        return out
    idx = np.flatnonzero(valid)
    total = np.zeros(idx.shape[0])
    n_x, n_theta = sys.n_x, sys.n_theta
    with np.errstate(all="ignore"):
        for i in range(T):
            F = sys.jac_f_theta_batch(states[idx, i, :], U[idx, i, :], belief.mean)
            FS = (F.reshape(-1, n_theta) @ belief.cov).reshape(-1, n_x, n_theta)
            S = FS @ F.transpose(0, 2, 1) + noise
            good = np.all(np.isfinite(S), axis=(1, 2))
            ld = np.full(S.shape[0], np.inf)
            if good.any():
                try:
                    chol = np.linalg.cholesky(S[good])
                    ld[good] = 2.0 * np.sum(
                        np.log(np.diagonal(chol, axis1=1, axis2=2)), axis=1
                    )
                except np.linalg.LinAlgError:
                    sign, logdet = np.linalg.slogdet(S[good])
                    ld[good] = np.where(sign > 0, logdet, np.inf)
            total += ld - logdet_noise
    out[idx] = -0.5 * total
    # an infinite log-det means a numerically broken candidate, not free information
    out[~np.isfinite(out)] = np.inf
    return out


# -- directed-information cost (Monte Carlo) ------------------------------------------


def _mixture_logpdf(
    X: np.ndarray, whitened_means: np.ndarray, inv_factor: np.ndarray, log_norm: float
) -> np.ndarray:
    """Log density of an equal-weight Gaussian mixture at rows of X.

    The mixture components share one covariance whose inverse Cholesky
    factor is ``inv_factor``; means are passed already whitened. The
    log-sum-exp over components is fused and in-place: the whitened squared
    distances are shifted by their row minimum before exponentiation.
    """
    K = whitened_means.shape[0]
    w2 = np.sum(whitened_means * whitened_means, axis=1)
    out = np.empty(X.shape[0])
    chunk = max(16, int(8_000_000 // max(K, 1)))
    for start in range(0, X.shape[0], chunk):
        rows = X[start : start + chunk] @ inv_factor.T
        z2 = np.sum(rows * rows, axis=1)
        quad = rows @ whitened_means.T
        quad *= -2.0
        quad += z2[:, None]
        quad += w2[None, :]
        qmin = quad.min(axis=1)
        quad -= qmin[:, None]
        quad *= -0.5
        np.exp(quad, out=quad)
        out[start : start + chunk] = (
            log_norm - 0.5 * qmin + np.log(quad.sum(axis=1)) - np.log(K)
        )
    return out


def directed_info_cost_mc_detailed(
    sys: SystemModel,
    x0,
    controls,
    belief: GaussianBelief,
    cfg: DirectedInfoConfig,
    rng: RngStream,
) -> DirectedInfoEstimate:
    """Monte-Carlo directed-information cost with its standard error.

    Per step the nominal state is pushed through the dynamics once per
    belief draw, giving a Gaussian mixture over the next observation; the
    step's information gain is estimated as the mean paired gap between
    each mixture sample's conditional log-density (its own component) and
    its mixture log-density. Deterministic given the rng stream.
    """
    controls = [as_vec(u, dim=sys.n_u, name="control") for u in controls]
    if len(controls) < 1:
        raise DimensionMismatch("directed_info_cost_mc requires at least one control")
    if not sys.has_identity_observation:
        raise DimensionMismatch("directed_info_cost_mc requires the identity observation map")
    noise = _state_noise_for_info(sys)
    chol = np.linalg.cholesky(noise)
    inv_factor = scipy.linalg.solve_triangular(chol, np.eye(sys.n_x), lower=True)
    log_norm = -0.5 * (sys.n_x * np.log(2.0 * np.pi) + logdet_psd(noise))
    states = rollout_nominal(sys, x0, controls, belief.mean)

    K = cfg.n_belief_samples
    M = cfg.eval_samples()
    per_step = np.empty(len(controls))
    var_sum = 0.0
    for i, u in enumerate(controls):
        step_rng = rng.substream("directed_info", i)
        thetas = belief.sample(step_rng.substream("belief"), size=K)
        with np.errstate(all="ignore"):
            means = sys.step_batch_theta(states[i], u, thetas)
        if not np.all(np.isfinite(means)):
            raise NonFiniteOutput(
                "directed_info_cost_mc: a belief draw produced a non-finite transition"
            )
        comp = step_rng.substream("component").choice(K, size=M)
        z = step_rng.substream("noise").normal(size=(M, sys.n_x))
        X = means[comp] + z @ chol.T
        log_cond = log_norm - 0.5 * np.sum(z * z, axis=1)
        log_mix = _mixture_logpdf(X, means @ inv_factor.T, inv_factor, log_norm)
        gaps = log_cond - log_mix
        per_step[i] = float(np.mean(gaps))
        var_sum += float(np.var(gaps, ddof=1)) / M
    value = -float(np.sum(per_step))
    stderr = float(np.sqrt(var_sum))
    high_variance = stderr > 0.1 * abs(value) and abs(value) > 0.0
    if high_variance:
        warnings.warn(
            f"directed info estimate {value:.4g} has standard error {stderr:.4g} "
            "(above 10% of magnitude)",
            EstimatorVarianceWarning,
            stacklevel=2,
        )
    return DirectedInfoEstimate(value=value, stderr=stderr, per_step=per_step, high_variance=high_variance)


def directed_info_cost_mc(
    sys: SystemModel,
    x0,
    controls,
    belief: GaussianBelief,
    cfg: DirectedInfoConfig,
    rng: RngStream,
) -> float:
    return directed_info_cost_mc_detailed(sys, x0, controls, belief, cfg, rng).value


# -- composites ------------------------------------------------------------------------


def _info_cost(ctx: CostContext, controls, info_variant: str, rng: RngStream | None) -> float:
    if info_variant == CLOSED_FORM_MI:
        return mi_cost(ctx.sys, ctx.x0, controls, ctx.belief)
    if info_variant == DIRECTED_INFO_MC:
        if rng is None:
            raise DimensionMismatch("directed_info_mc requires an rng stream")
        return directed_info_cost_mc(ctx.sys, ctx.x0, controls, ctx.belief, ctx.di_config, rng)
    raise DimensionMismatch(f"unknown info variant {info_variant!r}")


def composite_cost_parts(
    ctx: CostContext,
    controls,
    info_variant: str = CLOSED_FORM_MI,
    rng: RngStream | None = None,
) -> tuple[float, float, float]:
    """(total, task, info) for one candidate; lambda = 0 skips the info cost."""
    states = rollout_nominal(ctx.sys, ctx.x0, controls, ctx.belief.mean)
    task = task_cost(ctx.task, states, np.asarray(controls, dtype=np.float64))
    info = 0.0
    if ctx.lam > 0.0:
        info = _info_cost(ctx, controls, info_variant, rng)
    return task + ctx.lam * info, task, info


def composite_cost(
    ctx: CostContext,
    controls,
    info_variant: str = CLOSED_FORM_MI,
    rng: RngStream | None = None,
) -> float:
    return composite_cost_parts(ctx, controls, info_variant, rng)[0]


def evaluate_control_population(
    ctx: CostContext,
    U: np.ndarray,
    info_variant: str = CLOSED_FORM_MI,
    rng: RngStream | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized composite cost of (P, T, n_u) candidates.

    Returns (total, task, info) arrays; candidates whose rollout diverges
    get +inf. The closed-form variant is fully batched; the Monte-Carlo
    variant scores candidates one by one with per-candidate substreams, so
    results do not depend on evaluation order.
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 3 or U.shape[2] != ctx.sys.n_u:
        raise DimensionMismatch(f"population must be (P, T, n_u), got {U.shape}")
    states = rollout_nominal_batch(ctx.sys, ctx.x0, U, ctx.belief.mean)
    valid = np.all(np.isfinite(states), axis=(1, 2))
    with np.errstate(all="ignore"):
        task = _stage_cost_batch(ctx.task, states)
        task = task + ctx.task.control_effort_weight * np.sum(U * U, axis=(1, 2))
    info = np.zeros(U.shape[0])
    if ctx.lam > 0.0:
        if info_variant == CLOSED_FORM_MI:
            info = _mi_cost_batch(ctx.sys, states, U, ctx.belief)
        elif info_variant == DIRECTED_INFO_MC:
            if rng is None:
                raise DimensionMismatch("directed_info_mc requires an rng stream")
            for p in range(U.shape[0]):
                if not valid[p]:
                    info[p] = np.inf
                    continue
                try:
                    info[p] = directed_info_cost_mc(
                        ctx.sys, ctx.x0, U[p], ctx.belief, ctx.di_config, rng.substream("cand", p)
                    )
                except NonFiniteOutput:
                    info[p] = np.inf
        else:
            raise DimensionMismatch(f"unknown info variant {info_variant!r}")
    total = task + ctx.lam * info
    total = np.where(valid & np.isfinite(total), total, np.inf)
    return total, task, info
