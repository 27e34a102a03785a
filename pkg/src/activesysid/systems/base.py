"""System model interface: dynamics, parameter dynamics, observation map.

A system is the tuple of a deterministic transition ``step(x, u, theta)``
(noise is added by the caller), parameter dynamics ``param_step`` (identity
for every shipped system), and an observation map ``observe`` (identity for
every shipped system). Jacobians with respect to the parameters drive both
the filter and the information costs; systems provide analytic Jacobians
where available and inherit a central finite-difference fallback otherwise.

Instances are immutable after construction and all operations are pure, so
models can be shared freely across parallel rollouts. Batched variants
(`step_batch`, `step_batch_theta`, `jac_f_theta_batch`) exist so planners and
Monte-Carlo estimators can vectorize; the base-class fallbacks loop over the
scalar operations and subclasses override them with array code. Batched and
scalar paths are interchangeable up to floating-point round-off.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionMismatch, NonFiniteOutput
from ..linalg import as_mat, as_psd, as_vec
from ..rng import RngStream

__all__ = ["SystemModel", "FD_STEP"]

FD_STEP = 1e-5


class SystemModel:
    """Base class for dynamical systems with unknown parameters.

    Subclasses must set ``n_x``, ``n_u``, ``n_theta``, ``state_noise``,
    ``param_noise``, ``control_lo``/``control_hi`` and ``theta_true``, and
    implement ``step``. ``n_o`` defaults to ``n_x`` (identity observation).
    """

    name: str = "system"

    def __init__(
        self,
        n_x: int,
        n_u: int,
        n_theta: int,
        state_noise,
        param_noise,
        control_lo,
        control_hi,
        theta_true,
        n_o: int | None = None,
    ):
        if min(n_x, n_u, n_theta) < 1:
            raise DimensionMismatch("system dimensions must be positive")
        self.n_x = int(n_x)
        self.n_u = int(n_u)
        self.n_theta = int(n_theta)
        self.n_o = self.n_x if n_o is None else int(n_o)
        self.state_noise = as_psd(state_noise, name="state_noise")
        if self.state_noise.shape[0] != self.n_x:
            raise DimensionMismatch("state_noise must be n_x by n_x")
        self.param_noise = as_psd(param_noise, name="param_noise")
        if self.param_noise.shape[0] != self.n_theta:
            raise DimensionMismatch("param_noise must be n_theta by n_theta")
        self.control_lo = as_vec(control_lo, dim=self.n_u, name="control_lo")
        self.control_hi = as_vec(control_hi, dim=self.n_u, name="control_hi")
        if not np.all(self.control_lo < self.control_hi):
            raise DimensionMismatch("control bounds must satisfy lo < hi per dimension")
        self.theta_true = as_vec(theta_true, dim=self.n_theta, name="theta_true")

    # -- core maps ---------------------------------------------------------

    def step(self, x: np.ndarray, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Deterministic next state f(x, u, theta); the caller adds noise."""
        raise NotImplementedError

    def param_step(self, theta: np.ndarray) -> np.ndarray:
        """Parameter dynamics g(theta); identity unless overridden."""
        return as_vec(theta, dim=self.n_theta, name="theta").copy()

    def observe(self, x: np.ndarray) -> np.ndarray:
        """Observation map q(x); identity unless overridden."""
        return as_vec(x, dim=self.n_x, name="x").copy()

    @property
    def has_identity_observation(self) -> bool:
        """True when observe is the identity (fully observed state)."""
        return self.n_o == self.n_x and type(self).observe is SystemModel.observe

    # -- Jacobians ----------------------------------------------------------

    def jac_f_theta(self, x: np.ndarray, u: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """d f / d theta, shape (n_x, n_theta). Central differences by default."""
        x = as_vec(x, dim=self.n_x, name="x")
        u = as_vec(u, dim=self.n_u, name="u")
        theta = as_vec(theta, dim=self.n_theta, name="theta")
        jac = np.empty((self.n_x, self.n_theta))
        for k in range(self.n_theta):
            dp = theta.copy()
            dm = theta.copy()
            dp[k] += FD_STEP
            dm[k] -= FD_STEP
            jac[:, k] = (self.step(x, u, dp) - self.step(x, u, dm)) / (2.0 * FD_STEP)
        if not np.all(np.isfinite(jac)):
            raise NonFiniteOutput(f"{self.name}: non-finite parameter Jacobian")
        return jac

    def jac_g_theta(self, theta: np.ndarray) -> np.ndarray:
        """d g / d theta; identity for static parameters."""
        as_vec(theta, dim=self.n_theta, name="theta")
        return np.eye(self.n_theta)

    def jac_q_x(self, x: np.ndarray) -> np.ndarray:
        """d q / d x; identity for full observability."""
        as_vec(x, dim=self.n_x, name="x")
        return np.eye(self.n_x)

    # -- batched variants ---------------------------------------------------

    def step_batch(self, X: np.ndarray, U: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """f applied row-wise to (P, n_x) states and (P, n_u) controls.

        Rows whose transition is non-finite come back as nan rather than
        raising, so planners can discard individual candidates.
        """
        X = as_mat(X, name="state batch")
        U = as_mat(U, name="control batch")
        out = np.empty_like(X)
        for i in range(X.shape[0]):
            try:
                out[i] = self.step(X[i], U[i], theta)
            except NonFiniteOutput:
                out[i] = np.nan
        return out

    def step_batch_theta(self, x: np.ndarray, u: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        """f at one (x, u) for each parameter row of (K, n_theta)."""
        thetas = as_mat(thetas, name="theta batch")
        out = np.empty((thetas.shape[0], self.n_x))
        for k in range(thetas.shape[0]):
            try:
                out[k] = self.step(x, u, thetas[k])
            except NonFiniteOutput:
                out[k] = np.nan
        return out

    def jac_f_theta_batch(self, X: np.ndarray, U: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Parameter Jacobians for each (x, u) row, shape (P, n_x, n_theta)."""
        X = as_mat(X, name="state batch")
        U = as_mat(U, name="control batch")
        out = np.empty((X.shape[0], self.n_x, self.n_theta))
        for i in range(X.shape[0]):
            out[i] = self.jac_f_theta(X[i], U[i], theta)
        return out

    # -- experiment plumbing -------------------------------------------------

    def default_initial_state(self) -> np.ndarray:
        return np.zeros(self.n_x)

    def sample_state(self, rng: RngStream) -> np.ndarray:
        """A random feasible start for held-out data generation."""
        return rng.uniform(-1.0, 1.0, size=self.n_x)

    def sample_control(self, rng: RngStream) -> np.ndarray:
        return rng.uniform(self.control_lo, self.control_hi)

    def clamp_control(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.control_lo, self.control_hi)

    def theta_layout(self) -> str:
        """Human-readable description of the frozen parameter layout."""
        return f"theta in R^{self.n_theta}"

    def _check_xu(self, x, u) -> tuple[np.ndarray, np.ndarray]:
        return (
            as_vec(x, dim=self.n_x, name="x"),
            as_vec(u, dim=self.n_u, name="u"),
        )
