"""Planar double integrator with unknown A and B matrices."""

from __future__ import annotations

import numpy as np

from ..linalg import as_mat, as_vec
from ..rng import RngStream
from .base import SystemModel

__all__ = ["DoubleIntegrator", "discrete_double_integrator"]


def discrete_double_integrator(dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact zero-order-hold discretization of the planar double integrator."""
    A = np.array(
        [
            [1.0, 0.0, dt, 0.0],
            [0.0, 1.0, 0.0, dt],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    B = np.array(
        [
            [0.5 * dt * dt, 0.0],
            [0.0, 0.5 * dt * dt],
            [dt, 0.0],
            [0.0, dt],
        ]
    )
    return A, B


class DoubleIntegrator(SystemModel):
    """x' = A x + B u with state [px, py, vx, vy] and acceleration control.

    The 24-entry parameter vector is the frozen layout
    ``theta = vec(A) ++ vec(B)`` with column-major vec; reshaping theta
    reproduces A (4x4) and B (4x2) exactly. The transition is linear in
    theta, so the parameter Jacobian is exact:
    d(Ax)/dvec(A) = kron(x^T, I), and likewise for B.
    """

    name = "double_integrator"

    def __init__(
        self,
        dt: float = 0.1,
        A_true: np.ndarray | None = None,
        B_true: np.ndarray | None = None,
        state_noise: np.ndarray | None = None,
        param_noise: np.ndarray | None = None,
        control_limit: float = 2.0,
    ):
        self.dt = float(dt)
        if A_true is None or B_true is None:
            A_def, B_def = discrete_double_integrator(self.dt)
            A_true = A_def if A_true is None else A_true
            B_true = B_def if B_true is None else B_true
        A_true = as_mat(A_true, shape=(4, 4), name="A_true")
        B_true = as_mat(B_true, shape=(4, 2), name="B_true")
        theta_true = self.pack_theta(A_true, B_true)
        super().__init__(
            n_x=4,
            n_u=2,
            n_theta=24,
            state_noise=0.05 * np.eye(4) if state_noise is None else state_noise,
            param_noise=np.zeros((24, 24)) if param_noise is None else param_noise,
            control_lo=[-control_limit, -control_limit],
            control_hi=[control_limit, control_limit],
            theta_true=theta_true,
        )

    @staticmethod
    def pack_theta(A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return np.concatenate([A.flatten(order="F"), B.flatten(order="F")])

    @staticmethod
    def unpack_theta(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        theta = as_vec(theta, dim=24, name="theta")
        A = theta[:16].reshape(4, 4, order="F")
        B = theta[16:].reshape(4, 2, order="F")
        return A, B

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        A, B = self.unpack_theta(theta)
        return A @ x + B @ u

    def jac_f_theta(self, x, u, theta):
        x, u = self._check_xu(x, u)
        as_vec(theta, dim=24, name="theta")
        eye = np.eye(4)
        return np.hstack([np.kron(x[None, :], eye), np.kron(u[None, :], eye)])

    def step_batch(self, X, U, theta):
        A, B = self.unpack_theta(theta)
        return np.asarray(X) @ A.T + np.asarray(U) @ B.T

    def step_batch_theta(self, x, u, thetas):
        x = as_vec(x, dim=4, name="x")
        u = as_vec(u, dim=2, name="u")
        thetas = np.asarray(thetas, dtype=np.float64)
        # row-major reshape of a column-major vec is the transpose
        A = thetas[:, :16].reshape(-1, 4, 4).transpose(0, 2, 1)
        B = thetas[:, 16:].reshape(-1, 2, 4).transpose(0, 2, 1)
        return np.einsum("kij,j->ki", A, x) + np.einsum("kij,j->ki", B, u)

    def jac_f_theta_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        V = np.concatenate([X, U], axis=1)
        P = V.shape[0]
        jac = np.zeros((P, 4, 24))
        rows = np.arange(4)
        for j in range(6):
            jac[:, rows, 4 * j + rows] = V[:, j][:, None]
        return jac

    def default_initial_state(self):
        return np.zeros(4)

    def sample_state(self, rng: RngStream):
        pos = rng.uniform(-3.0, 3.0, size=2)
        vel = rng.uniform(-1.0, 1.0, size=2)
        return np.concatenate([pos, vel])

    def theta_layout(self):
        return (
            "theta[0:16] = vec(A) column-major (A in R^{4x4}), "
            "theta[16:24] = vec(B) column-major (B in R^{4x2})"
        )
