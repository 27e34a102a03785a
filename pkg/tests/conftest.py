"""Shared fixtures and independent test doubles.

The doubles here are deliberately minimal systems used to isolate one
behavior at a time; oracle computations (Riccati recursions, conjugate
posteriors, quadrature) live inside the test modules that use them so they
stay independent of the library code they check.
"""

from __future__ import annotations

import numpy as np
import pytest

from activesysid.rng import RngStream
from activesysid.systems import SystemModel


class ScalarGain(SystemModel):
    """x' = c * theta: one parameter, fixed sensitivity c."""

    name = "scalar_gain"

    def __init__(self, c=1.0, noise_var=1.0):
        self.c = float(c)
        super().__init__(
            n_x=1,
            n_u=1,
            n_theta=1,
            state_noise=[[noise_var]],
            param_noise=[[0.0]],
            control_lo=[-1.0],
            control_hi=[1.0],
            theta_true=[0.0],
        )

    def step(self, x, u, theta):
        return np.array([self.c * np.asarray(theta, float)[0]])

    def jac_f_theta(self, x, u, theta):
        return np.array([[self.c]])


class ScalarLinear(SystemModel):
    """x' = theta * x + u, the textbook scalar identification problem."""

    name = "scalar_linear"

    def __init__(self, theta_true=0.8, noise_var=0.04):
        super().__init__(
            n_x=1,
            n_u=1,
            n_theta=1,
            state_noise=[[noise_var]],
            param_noise=[[0.0]],
            control_lo=[-1.0],
            control_hi=[1.0],
            theta_true=[theta_true],
        )

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        return np.array([np.asarray(theta, float)[0] * x[0] + u[0]])

    def jac_f_theta(self, x, u, theta):
        return np.array([[float(np.asarray(x, float).ravel()[0])]])


class MatrixGain(SystemModel):
    """x' = F theta for a fixed matrix F; state and control are inert."""

    name = "matrix_gain"

    def __init__(self, F, state_noise):
        F = np.asarray(F, dtype=np.float64)
        self.F = F
        n_x, n_theta = F.shape
        super().__init__(
            n_x=n_x,
            n_u=1,
            n_theta=n_theta,
            state_noise=state_noise,
            param_noise=np.zeros((n_theta, n_theta)),
            control_lo=[-1.0],
            control_hi=[1.0],
            theta_true=np.zeros(n_theta),
        )

    def step(self, x, u, theta):
        return self.F @ np.asarray(theta, dtype=np.float64)

    def jac_f_theta(self, x, u, theta):
        return self.F.copy()


class ControlShift(SystemModel):
    """x' = u - u_star: turns a goal task into ||u - u_star||^2."""

    name = "control_shift"

    def __init__(self, u_star, limit=2.0):
        self.u_star = np.asarray(u_star, dtype=np.float64)
        n = self.u_star.shape[0]
        super().__init__(
            n_x=n,
            n_u=n,
            n_theta=1,
            state_noise=np.eye(n),
            param_noise=[[0.0]],
            control_lo=[-limit] * n,
            control_hi=[limit] * n,
            theta_true=[0.0],
        )

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        return u - self.u_star

    def step_batch(self, X, U, theta):
        return np.asarray(U, dtype=np.float64) - self.u_star

    def jac_f_theta(self, x, u, theta):
        return np.zeros((self.n_x, 1))


class DecayParams(SystemModel):
    """Identity-state system with contracting parameter dynamics g = 0.9 I."""

    name = "decay_params"

    def __init__(self):
        super().__init__(
            n_x=2,
            n_u=1,
            n_theta=3,
            state_noise=np.eye(2),
            param_noise=np.zeros((3, 3)),
            control_lo=[-1.0],
            control_hi=[1.0],
            theta_true=np.zeros(3),
        )

    def step(self, x, u, theta):
        return np.asarray(x, dtype=np.float64).copy()

    def param_step(self, theta):
        return 0.9 * np.asarray(theta, dtype=np.float64)

    def jac_g_theta(self, theta):
        return 0.9 * np.eye(3)


class FirstCoordObserver(SystemModel):
    """Projection observation q(x) = [x_0] for Jacobian tests."""

    name = "first_coord"

    def __init__(self, n_x=3):
        super().__init__(
            n_x=n_x,
            n_u=1,
            n_theta=1,
            state_noise=np.eye(n_x),
            param_noise=[[0.0]],
            control_lo=[-1.0],
            control_hi=[1.0],
            theta_true=[0.0],
            n_o=1,
        )

    def step(self, x, u, theta):
        return np.asarray(x, dtype=np.float64).copy()

    def observe(self, x):
        return np.asarray(x, dtype=np.float64)[:1].copy()

    def jac_q_x(self, x):
        row = np.zeros((1, self.n_x))
        row[0, 0] = 1.0
        return row


@pytest.fixture
def rng():
    return RngStream(12345)
