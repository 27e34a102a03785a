"""Pursuit-evasion against a unicycle pursuer driven by an embedded MPC law.

The pursuer solves, at every step, a short-horizon tracking problem
``min_u  w * sum_i ||p2_i - p1||^2 + sum_i ||u_i||^2`` over its own controls
[omega, a], where p1 is the evader position frozen at the current step. The
single unknown parameter is the tracking weight w, which shapes how
aggressively the pursuer closes in.

The inner solver is projected gradient descent from a zero initialization
with per-candidate backtracking (a step is only accepted if it does not
increase the objective), so the returned control never scores worse than
u = 0 and the whole policy stays deterministic. Gradients come from an
analytic reverse pass through the unicycle rollout by default; a central
finite-difference mode exists as a cross-check. All solver paths are
batched so planners can roll out many candidate states at once.
"""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteOutput
from ..linalg import as_vec
from ..rng import RngStream
from .base import SystemModel
from .double_integrator import discrete_double_integrator

__all__ = ["PursuitEvasionMpc"]


class PursuitEvasionMpc(SystemModel):
    """State [x1 (double integrator); x2 (px, py, phi, v)], evader control in R^2."""

    name = "pe_mpc"

    def __init__(
        self,
        dt: float = 0.1,
        w_true: float = 5.0,
        mpc_horizon: int = 4,
        mpc_iters: int = 50,
        mpc_step_size: float = 0.05,
        mpc_backtracks: int = 8,
        mpc_grad_mode: str = "analytic",
        state_noise: np.ndarray | None = None,
        param_noise: np.ndarray | None = None,
        control_limit: float = 2.0,
        pursuer_control_limit: float = 2.0,
    ):
        if w_true <= 0:
            raise ValueError("tracking weight w_true must be positive")
        if mpc_horizon < 1:
            raise ValueError("mpc_horizon must be at least 1")
        if mpc_grad_mode not in ("analytic", "fd"):
            raise ValueError("mpc_grad_mode must be 'analytic' or 'fd'")
        self.dt = float(dt)
        self.A, self.B = discrete_double_integrator(self.dt)
        self.mpc_horizon = int(mpc_horizon)
        self.mpc_iters = int(mpc_iters)
        self.mpc_step_size = float(mpc_step_size)
        self.mpc_backtracks = int(mpc_backtracks)
        self.mpc_grad_mode = mpc_grad_mode
        self.pursuer_control_limit = float(pursuer_control_limit)
        super().__init__(
            n_x=8,
            n_u=2,
            n_theta=1,
            state_noise=1e-3 * np.eye(8) if state_noise is None else state_noise,
            param_noise=np.zeros((1, 1)) if param_noise is None else param_noise,
            control_lo=[-control_limit, -control_limit],
            control_hi=[control_limit, control_limit],
            theta_true=[w_true],
        )

    # -- unicycle rollout ----------------------------------------------------

    def _unicycle_step(self, X2: np.ndarray, U2: np.ndarray) -> np.ndarray:
        out = np.empty_like(X2)
        phi = X2[:, 2]
        vdt = X2[:, 3] * self.dt
        out[:, 0] = X2[:, 0] + vdt * np.cos(phi)
        out[:, 1] = X2[:, 1] + vdt * np.sin(phi)
        out[:, 2] = phi + U2[:, 0] * self.dt
        out[:, 3] = X2[:, 3] + U2[:, 1] * self.dt
        return out

    def _mpc_rollout(self, X2: np.ndarray, Useq: np.ndarray) -> np.ndarray:
        """All rollout states as one (P, T_pi + 1, 4) array."""
        horizon = Useq.shape[1]
        states = np.empty((X2.shape[0], horizon + 1, 4))
        states[:, 0] = X2
        for i in range(horizon):
            states[:, i + 1] = self._unicycle_step(states[:, i], Useq[:, i])
        return states

    def mpc_objective(self, p1: np.ndarray, X2: np.ndarray, w, Useq: np.ndarray) -> np.ndarray:
        """Tracking-plus-effort objective for a batch of control sequences."""
        states = self._mpc_rollout(X2, Useq)
        diff = states[:, 1:, :2] - p1[:, None, :]
        track = np.einsum("pij,pij->p", diff, diff)
        effort = np.einsum("pij,pij->p", Useq, Useq)
        return w * track + effort

    def _mpc_grad_analytic(self, p1, X2, w, Useq):
        states = self._mpc_rollout(X2, Useq)
        horizon = Useq.shape[1]
        grad = np.empty_like(Useq)
        two_w = 2.0 * w
        lam = np.zeros_like(X2)
        for i in range(horizon, 0, -1):
            xi = states[:, i]
            lam[:, 0] += two_w * (xi[:, 0] - p1[:, 0])
            lam[:, 1] += two_w * (xi[:, 1] - p1[:, 1])
            grad[:, i - 1, 0] = self.dt * lam[:, 2] + 2.0 * Useq[:, i - 1, 0]
            grad[:, i - 1, 1] = self.dt * lam[:, 3] + 2.0 * Useq[:, i - 1, 1]
            xm = states[:, i - 1]
            phi = xm[:, 2]
            cphi = np.cos(phi)
            sphi = np.sin(phi)
            vdt = xm[:, 3] * self.dt
            lam[:, 2] += -vdt * sphi * lam[:, 0] + vdt * cphi * lam[:, 1]
            lam[:, 3] += self.dt * (cphi * lam[:, 0] + sphi * lam[:, 1])
        return grad

    def _mpc_grad_fd(self, p1, X2, w, Useq, h: float = 1e-5):
        grad = np.empty_like(Useq)
        for i in range(Useq.shape[1]):
            for j in range(2):
                up = Useq.copy()
                dn = Useq.copy()
                up[:, i, j] += h
                dn[:, i, j] -= h
                grad[:, i, j] = (
                    self.mpc_objective(p1, X2, w, up) - self.mpc_objective(p1, X2, w, dn)
                ) / (2.0 * h)
        return grad

    def _mpc_solve(self, p1: np.ndarray, X2: np.ndarray, w) -> tuple[np.ndarray, np.ndarray]:
        """Returns (first controls (P, 2), final objective values (P,))."""
        P = X2.shape[0]
        lim = self.pursuer_control_limit
        Useq = np.zeros((P, self.mpc_horizon, 2))
        cost = self.mpc_objective(p1, X2, w, Useq)
        grad_fn = self._mpc_grad_analytic if self.mpc_grad_mode == "analytic" else self._mpc_grad_fd
        for _ in range(self.mpc_iters):
            grad = grad_fn(p1, X2, w, Useq)
            step = np.full(P, self.mpc_step_size)
            active = np.ones(P, dtype=bool)
            prev_cost = cost
            for _ in range(self.mpc_backtracks):
                trial = np.clip(Useq - (step * active)[:, None, None] * grad, -lim, lim)
                tc = self.mpc_objective(p1, X2, w, trial)
                improved = active & (tc <= cost)
                Useq = np.where(improved[:, None, None], trial, Useq)
                cost = np.where(improved, tc, cost)
                active &= ~improved
                if not active.any():
                    break
                step[active] *= 0.5
            # converged rows stop making progress; once every row has stalled
            # the remaining iterations are no-ops
            if np.all(prev_cost - cost <= 1e-10 * (1.0 + np.abs(prev_cost))):
                break
        return Useq[:, 0, :], cost

    # -- public policy ---------------------------------------------------------

    def pursuer_policy(self, x1: np.ndarray, x2: np.ndarray, w: float) -> np.ndarray:
        """First control [omega, a] of the minimizing sequence."""
        x1 = as_vec(x1, dim=4, name="x1")
        x2 = as_vec(x2, dim=4, name="x2")
        u, _ = self._mpc_solve(x1[None, :2], x2[None, :], float(w))
        if not np.all(np.isfinite(u)):
            raise NonFiniteOutput("pe_mpc: pursuer policy diverged")
        return u[0]

    # -- dynamics ---------------------------------------------------------------

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        w = as_vec(theta, dim=1, name="theta")[0]
        pi = self.pursuer_policy(x[:4], x[4:], w)
        out = np.concatenate(
            [self.A @ x[:4] + self.B @ u, self._unicycle_step(x[None, 4:], pi[None, :])[0]]
        )
        if not np.all(np.isfinite(out)):
            raise NonFiniteOutput("pe_mpc: non-finite transition")
        return out

    def step_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        w = as_vec(theta, dim=1, name="theta")[0]
        pi, _ = self._mpc_solve(X[:, :2], X[:, 4:], w)
        x1_next = X[:, :4] @ self.A.T + U @ self.B.T
        x2_next = self._unicycle_step(X[:, 4:], pi)
        return np.concatenate([x1_next, x2_next], axis=1)

    def step_batch_theta(self, x, u, thetas):
        x = as_vec(x, dim=8, name="x")
        u = as_vec(u, dim=2, name="u")
        thetas = np.asarray(thetas, dtype=np.float64)
        K = thetas.shape[0]
        p1 = np.tile(x[:2], (K, 1))
        X2 = np.tile(x[4:], (K, 1))
        pi, _ = self._mpc_solve(p1, X2, thetas[:, 0])
        x1_next = np.tile(self.A @ x[:4] + self.B @ u, (K, 1))
        return np.concatenate([x1_next, self._unicycle_step(X2, pi)], axis=1)

    def jac_f_theta_batch(self, X, U, theta, h: float = 1e-5):
        w = as_vec(theta, dim=1, name="theta")[0]
        up = self.step_batch(X, U, np.array([w + h]))
        dn = self.step_batch(X, U, np.array([w - h]))
        return ((up - dn) / (2.0 * h))[:, :, None]

    def default_initial_state(self):
        return np.array([0.0, 0.0, 0.0, 0.0, 3.0, 3.0, -3.0 * np.pi / 4.0, 0.5])

    def sample_state(self, rng: RngStream):
        evader = np.concatenate(
            [rng.uniform(-3.0, 3.0, size=2), rng.uniform(-1.0, 1.0, size=2)]
        )
        pursuer = np.array(
            [
                rng.uniform(-3.0, 3.0),
                rng.uniform(-3.0, 3.0),
                rng.uniform(-np.pi, np.pi),
                rng.uniform(0.0, 1.5),
            ]
        )
        return np.concatenate([evader, pursuer])

    def theta_layout(self):
        return "theta = [w], the pursuer's tracking weight (w > 0)"
