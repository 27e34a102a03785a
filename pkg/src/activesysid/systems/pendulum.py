"""Torque-controlled damped pendulum with unknown damping and inertia."""

from __future__ import annotations

import numpy as np

from ..errors import NonFiniteOutput
from ..linalg import as_vec
from ..rng import RngStream
from .base import SystemModel

__all__ = ["DampedPendulum"]

_MIN_INERTIA = 1e-9


class DampedPendulum(SystemModel):
    """State [phi, phidot], scalar torque control.

    Euler update with angular acceleration
    ``(u - b*phidot - m*g*l*sin(phi)) / L``; theta = [b, L]. phi is measured
    from the hanging equilibrium, so gravity is restoring around zero.
    """

    name = "damped_pendulum"

    def __init__(
        self,
        dt: float = 0.05,
        m: float = 1.0,
        g_grav: float = 9.81,
        l: float = 1.0,
        b_true: float = 0.3,
        L_true: float = 1.0,
        state_noise: np.ndarray | None = None,
        param_noise: np.ndarray | None = None,
        control_limit: float = 3.0,
    ):
        self.dt = float(dt)
        self.m = float(m)
        self.g_grav = float(g_grav)
        self.l = float(l)
        if L_true <= 0:
            raise ValueError("moment of inertia L_true must be positive")
        if b_true < 0:
            raise ValueError("damping b_true must be non-negative")
        super().__init__(
            n_x=2,
            n_u=1,
            n_theta=2,
            state_noise=1e-3 * np.eye(2) if state_noise is None else state_noise,
            param_noise=np.zeros((2, 2)) if param_noise is None else param_noise,
            control_lo=[-control_limit],
            control_hi=[control_limit],
            theta_true=[b_true, L_true],
        )

    def _accel(self, phi, phidot, torque, b, L):
        return (torque - b * phidot - self.m * self.g_grav * self.l * np.sin(phi)) / L

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        b, L = as_vec(theta, dim=2, name="theta")
        if abs(L) <= _MIN_INERTIA:
            raise NonFiniteOutput("damped_pendulum: inertia magnitude at or below 1e-9")
        acc = self._accel(x[0], x[1], u[0], b, L)
        out = np.array([x[0] + x[1] * self.dt, x[1] + acc * self.dt])
        if not np.all(np.isfinite(out)):
            raise NonFiniteOutput("damped_pendulum: non-finite transition")
        return out

    def jac_f_theta(self, x, u, theta):
        x, u = self._check_xu(x, u)
        b, L = as_vec(theta, dim=2, name="theta")
        if abs(L) <= _MIN_INERTIA:
            raise NonFiniteOutput("damped_pendulum: inertia magnitude at or below 1e-9")
        torque_net = u[0] - b * x[1] - self.m * self.g_grav * self.l * np.sin(x[0])
        return np.array(
            [
                [0.0, 0.0],
                [-x[1] * self.dt / L, -torque_net * self.dt / (L * L)],
            ]
        )

    def step_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        b, L = as_vec(theta, dim=2, name="theta")
        if abs(L) <= _MIN_INERTIA:
            raise NonFiniteOutput("damped_pendulum: inertia magnitude at or below 1e-9")
        acc = self._accel(X[:, 0], X[:, 1], U[:, 0], b, L)
        return np.stack([X[:, 0] + X[:, 1] * self.dt, X[:, 1] + acc * self.dt], axis=1)

    def step_batch_theta(self, x, u, thetas):
        x = as_vec(x, dim=2, name="x")
        u = as_vec(u, dim=1, name="u")
        thetas = np.asarray(thetas, dtype=np.float64)
        b = thetas[:, 0]
        L = np.where(np.abs(thetas[:, 1]) <= _MIN_INERTIA, np.nan, thetas[:, 1])
        acc = self._accel(x[0], x[1], u[0], b, L)
        phi_next = np.full_like(b, x[0] + x[1] * self.dt)
        return np.stack([phi_next, x[1] + acc * self.dt], axis=1)

    def jac_f_theta_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        b, L = as_vec(theta, dim=2, name="theta")
        if abs(L) <= _MIN_INERTIA:
            raise NonFiniteOutput("damped_pendulum: inertia magnitude at or below 1e-9")
        torque_net = U[:, 0] - b * X[:, 1] - self.m * self.g_grav * self.l * np.sin(X[:, 0])
        jac = np.zeros((X.shape[0], 2, 2))
        jac[:, 1, 0] = -X[:, 1] * self.dt / L
        jac[:, 1, 1] = -torque_net * self.dt / (L * L)
        return jac

    def default_initial_state(self):
        return np.zeros(2)

    def sample_state(self, rng: RngStream):
        return np.array(
            [rng.uniform(-np.pi, np.pi), rng.uniform(-2.0, 2.0)]
        )

    def theta_layout(self):
        return "theta = [b (damping), L (moment of inertia)]"
