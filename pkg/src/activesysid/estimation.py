"""Gaussian parameter beliefs and the EKF belief updater.

The filter tracks a Gaussian over the unknown dynamics parameters only (not
the state): predict through the parameter dynamics, then correct using the
observed transition, linearizing the state map around the predicted mean.
The covariance correction uses the plain gain form followed by
symmetrization; the information-form variant exists separately as an
independent route to the same posterior covariance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, SingularInnovation, SingularMatrix
from .linalg import as_psd, as_vec, mvn_sample, symmetrize
from .rng import RngStream
from .systems import SystemModel

__all__ = [
    "GaussianBelief",
    "LearningTrace",
    "ekf_update",
    "info_form_covariance",
    "run_learning_process",
]

_INNOVATION_JITTER = 1e-9


@dataclass(frozen=True)
class GaussianBelief:
    """Parameter belief {mean, cov}; immutable, validated on construction."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = as_vec(self.mean, name="belief mean")
        cov = as_psd(self.cov, name="belief cov")
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatch(
                f"belief cov side {cov.shape[0]} does not match mean length {mean.shape[0]}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: RngStream, size: int | None = None) -> np.ndarray:
        return mvn_sample(self.mean, self.cov, rng, size=size)


@dataclass
class LearningTrace:
    """Everything recorded while filtering along one executed trajectory.

    beliefs/states/true_params have one more entry than controls; the noise
    realizations are kept so the exact transition identity
    states[k+1] = f(states[k], controls[k], true_params[k+1]) + state_noises[k]
    can be replayed.
    """

    beliefs: list[GaussianBelief] = field(default_factory=list)
    states: list[np.ndarray] = field(default_factory=list)
    true_params: list[np.ndarray] = field(default_factory=list)
    observations: list[np.ndarray] = field(default_factory=list)
    controls: list[np.ndarray] = field(default_factory=list)
    state_noises: list[np.ndarray] = field(default_factory=list)
    param_noises: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.controls)


def ekf_update(
    belief: GaussianBelief,
    o_next: np.ndarray,
    u: np.ndarray,
    x: np.ndarray,
    sys: SystemModel,
) -> GaussianBelief:
    """One predict/correct cycle of the parameter EKF.

    ``x`` is the (fully observed) state the transition started from and
    ``o_next`` the observation of where it ended up. Requires an identity
    observation map: with partial observability the true previous state is
    not available to linearize around.
    """
    if not sys.has_identity_observation:
        raise DimensionMismatch(
            "ekf_update requires an identity observation map (fully observed state)"
        )
    if belief.dim != sys.n_theta:
        raise DimensionMismatch("belief dimension does not match system n_theta")
    x = as_vec(x, dim=sys.n_x, name="x")
    u = as_vec(u, dim=sys.n_u, name="u")
    o_next = as_vec(o_next, dim=sys.n_o, name="o_next")

    # prediction
    mean_pred = sys.param_step(belief.mean)
    G = sys.jac_g_theta(belief.mean)
    cov_pred = G @ belief.cov @ G.T + sys.param_noise
    x_pred = sys.step(x, u, mean_pred)
    o_pred = sys.observe(x_pred)

    # correction
    F = sys.jac_f_theta(x, u, mean_pred)
    Qx = sys.jac_q_x(x_pred)
    QF = Qx @ F
    S = QF @ cov_pred @ QF.T + Qx @ sys.state_noise @ Qx.T
    S = S + _INNOVATION_JITTER * np.eye(S.shape[0])
    cov_F_Q = cov_pred @ QF.T
    try:
        if not np.all(np.isfinite(S)):
            raise scipy.linalg.LinAlgError("non-finite innovation covariance")
        cho = scipy.linalg.cho_factor(S, lower=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise SingularInnovation(
            "innovation covariance not invertible; state noise too small for a "
            "rank-deficient parameter Jacobian"
        ) from exc
    gain = scipy.linalg.cho_solve(cho, cov_F_Q.T).T
    innovation = o_next - o_pred
    mean_post = mean_pred + gain @ innovation
    cov_post = symmetrize((np.eye(belief.dim) - gain @ QF) @ cov_pred)
    return GaussianBelief(mean_post, cov_post)


def info_form_covariance(
    pred_cov: np.ndarray, F: np.ndarray, state_noise: np.ndarray
) -> np.ndarray:
    """Posterior covariance through the information-matrix route.

    Adds F^T (state_noise)^-1 F to the inverse of the predicted covariance
    and inverts back, using Cholesky solves throughout. Both inputs must be
    strictly positive definite.
    """
    pred_cov = as_psd(pred_cov, name="pred_cov")
    state_noise = as_psd(state_noise, name="state_noise")
    F = np.asarray(F, dtype=np.float64)
    n = pred_cov.shape[0]
    if F.shape != (state_noise.shape[0], n):
        raise DimensionMismatch(
            f"F shape {F.shape} inconsistent with pred_cov {pred_cov.shape} "
            f"and state_noise {state_noise.shape}"
        )
    try:
        cho_prior = scipy.linalg.cho_factor(pred_cov, lower=True)
        cho_noise = scipy.linalg.cho_factor(state_noise, lower=True)
        info = scipy.linalg.cho_solve(cho_prior, np.eye(n))
        info = info + F.T @ scipy.linalg.cho_solve(cho_noise, F)
        cho_info = scipy.linalg.cho_factor(0.5 * (info + info.T), lower=True)
        cov = scipy.linalg.cho_solve(cho_info, np.eye(n))
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrix("info_form_covariance: factorization failed") from exc
    return symmetrize(cov)


def run_learning_process(
    sys: SystemModel,
    belief0: GaussianBelief,
    x0: np.ndarray,
    theta0: np.ndarray,
    controls,
    rng: RngStream,
) -> LearningTrace:
    """Execute the closed-loop learning process along a fixed control sequence.

    Per step: nature propagates the parameters and the state (with noise),
    an observation is emitted, and the belief is filtered. The observation
    of step j+1 informs the belief about the parameters at step j+1.
    """
    x = as_vec(x0, dim=sys.n_x, name="x0")
    theta = as_vec(theta0, dim=sys.n_theta, name="theta0")
    trace = LearningTrace()
    trace.beliefs.append(belief0)
    trace.states.append(x.copy())
    trace.true_params.append(theta.copy())

    belief = belief0
    noise_rng = rng.substream("process_noise")
    for j, u in enumerate(controls):
        u = as_vec(u, dim=sys.n_u, name=f"controls[{j}]")
        if np.any(u < sys.control_lo - 1e-12) or np.any(u > sys.control_hi + 1e-12):
            raise DimensionMismatch(f"controls[{j}] outside control bounds")
        eps_theta = mvn_sample(np.zeros(sys.n_theta), sys.param_noise, noise_rng)
        theta = sys.param_step(theta) + eps_theta
        eps_x = mvn_sample(np.zeros(sys.n_x), sys.state_noise, noise_rng)
        x_next = sys.step(x, u, theta) + eps_x
        obs = sys.observe(x_next)
        try:
            belief = ekf_update(belief, obs, u, x, sys)
        except Exception as exc:
            raise type(exc)(f"belief update failed at step {j}: {exc}") from exc
        trace.controls.append(u.copy())
        trace.param_noises.append(eps_theta)
        trace.state_noises.append(eps_x)
        trace.true_params.append(theta.copy())
        trace.states.append(x_next.copy())
        trace.observations.append(obs.copy())
        trace.beliefs.append(belief)
        x = x_next
    return trace
