"""Two-agent pursuit-evasion where the pursuer runs a one-step LQR law.

The ego agent (evader) controls the first double integrator; the pursuer's
double integrator is driven by ``pi = -(R + B^T Q B)^{-1} B^T Q (A x2 - x1)``
with cost matrices Q, R unknown to the evader.

Q and R are carried in theta through lower-triangular Cholesky factors
(Q = Lq Lq^T, R = Lr Lr^T + 1e-8 I), so any Gaussian belief sample maps to a
valid PSD Q and PD R; raw vec(Q) samples are frequently indefinite and break
the gain solve. Factor entries are stored column-major, columns of the
factor in order, rows at and below the diagonal.
"""

from __future__ import annotations

import numpy as np

from ..errors import SingularGain
from ..linalg import as_mat, as_vec
from ..rng import RngStream
from .base import SystemModel
from .double_integrator import discrete_double_integrator

__all__ = ["PursuitEvasionLqr"]

_COND_LIMIT = 1e12
_R_RIDGE = 1e-8


def _tril_indices_colmajor(n: int) -> list[tuple[int, int]]:
    return [(i, j) for j in range(n) for i in range(j, n)]

_Q_IDX = _tril_indices_colmajor(4)
_R_IDX = _tril_indices_colmajor(2)


def _pack_tril(L: np.ndarray, idx: list[tuple[int, int]]) -> np.ndarray:
    return np.array([L[i, j] for i, j in idx])


def _unpack_tril(vals: np.ndarray, n: int, idx: list[tuple[int, int]]) -> np.ndarray:
    L = np.zeros((n, n))
    for v, (i, j) in zip(vals, idx):
        L[i, j] = v
    return L


class PursuitEvasionLqr(SystemModel):
    """Stacked state [x1; x2] in R^8, evader acceleration control in R^2."""

    name = "pe_lqr"

    def __init__(
        self,
        dt: float = 0.1,
        Q_true: np.ndarray | None = None,
        R_true: np.ndarray | None = None,
        state_noise: np.ndarray | None = None,
        param_noise: np.ndarray | None = None,
        control_limit: float = 2.0,
    ):
        self.dt = float(dt)
        self.A, self.B = discrete_double_integrator(self.dt)
        Q_true = np.diag([5.0, 5.0, 1.0, 1.0]) if Q_true is None else as_mat(Q_true, (4, 4), "Q_true")
        R_true = np.eye(2) if R_true is None else as_mat(R_true, (2, 2), "R_true")
        theta_true = self.pack_theta(Q_true, R_true)
        super().__init__(
            n_x=8,
            n_u=2,
            n_theta=13,
            state_noise=1e-3 * np.eye(8) if state_noise is None else state_noise,
            param_noise=np.zeros((13, 13)) if param_noise is None else param_noise,
            control_lo=[-control_limit, -control_limit],
            control_hi=[control_limit, control_limit],
            theta_true=theta_true,
        )
        # single-entry memo for gain quantities; planners evaluate thousands
        # of candidates at one frozen theta per step
        self._gain_cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}

    # -- parameterization ----------------------------------------------------

    @staticmethod
    def pack_theta(Q: np.ndarray, R: np.ndarray) -> np.ndarray:
        """Factor PSD cost matrices into the 13-entry theta vector."""
        Lq = np.linalg.cholesky(Q + 1e-12 * np.eye(4))
        Lr = np.linalg.cholesky(R)
        return np.concatenate([_pack_tril(Lq, _Q_IDX), _pack_tril(Lr, _R_IDX)])

    @staticmethod
    def unpack_theta(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Reconstruct (Q, R); Q is PSD and R is PD for any real theta."""
        theta = as_vec(theta, dim=13, name="theta")
        Lq = _unpack_tril(theta[:10], 4, _Q_IDX)
        Lr = _unpack_tril(theta[10:], 2, _R_IDX)
        return Lq @ Lq.T, Lr @ Lr.T + _R_RIDGE * np.eye(2)

    # -- pursuer policy --------------------------------------------------------

    def pursuer_gain(self, theta: np.ndarray) -> np.ndarray:
        """The 2x4 gain G with pi = -G (A x2 - x1)."""
        key = np.asarray(theta, dtype=np.float64).tobytes()
        cached = self._gain_cache.get(key)
        if cached is not None:
            return cached[0]
        Q, R = self.unpack_theta(theta)
        M = R + self.B.T @ Q @ self.B
        if np.linalg.cond(M) >= _COND_LIMIT:
            raise SingularGain("pe_lqr: R + B^T Q B is numerically singular")
        G = np.linalg.solve(M, self.B.T @ Q)
        if not self._gain_cache or key not in self._gain_cache:
            self._gain_cache.clear()
            self._gain_cache[key] = (G, None)
        return G

    def pursuer_policy(self, x1: np.ndarray, x2: np.ndarray, theta: np.ndarray) -> np.ndarray:
        x1 = as_vec(x1, dim=4, name="x1")
        x2 = as_vec(x2, dim=4, name="x2")
        return -self.pursuer_gain(theta) @ (self.A @ x2 - x1)

    # -- dynamics ---------------------------------------------------------------

    def step(self, x, u, theta):
        x, u = self._check_xu(x, u)
        x1, x2 = x[:4], x[4:]
        pi = self.pursuer_policy(x1, x2, theta)
        return np.concatenate([self.A @ x1 + self.B @ u, self.A @ x2 + self.B @ pi])

    def _gain_derivatives(self, theta: np.ndarray) -> np.ndarray:
        """d pi / d theta_k as matrices C_k with d pi_k = C_k (A x2 - x1).

        From pi = -M^{-1} B^T Q e with M = R + B^T Q B:
        d pi_k = (M^{-1} dM_k G - M^{-1} B^T dQ_k) e.
        """
        theta = as_vec(theta, dim=13, name="theta")
        key = theta.tobytes()
        cached = self._gain_cache.get(key)
        if cached is not None and cached[1] is not None:
            return cached[1]
        Lq = _unpack_tril(theta[:10], 4, _Q_IDX)
        Lr = _unpack_tril(theta[10:], 2, _R_IDX)
        Q = Lq @ Lq.T
        R = Lr @ Lr.T + _R_RIDGE * np.eye(2)
        M = R + self.B.T @ Q @ self.B
        if np.linalg.cond(M) >= _COND_LIMIT:
            raise SingularGain("pe_lqr: R + B^T Q B is numerically singular")
        G = np.linalg.solve(M, self.B.T @ Q)
        C = np.zeros((13, 2, 4))
        for k, (i, j) in enumerate(_Q_IDX):
            E = np.zeros((4, 4))
            E[i, j] = 1.0
            dQ = E @ Lq.T + Lq @ E.T
            dM = self.B.T @ dQ @ self.B
            C[k] = np.linalg.solve(M, dM @ G - self.B.T @ dQ)
        for k, (i, j) in enumerate(_R_IDX):
            E = np.zeros((2, 2))
            E[i, j] = 1.0
            dR = E @ Lr.T + Lr @ E.T
            C[10 + k] = np.linalg.solve(M, dR @ G)
        self._gain_cache.clear()
        self._gain_cache[key] = (G, C)
        return C

    def jac_f_theta(self, x, u, theta):
        x, u = self._check_xu(x, u)
        e = self.A @ x[4:] - x[:4]
        C = self._gain_derivatives(theta)
        jac = np.zeros((8, 13))
        jac[4:, :] = self.B @ (C @ e).T
        return jac

    def step_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        U = np.asarray(U, dtype=np.float64)
        G = self.pursuer_gain(theta)
        E = X[:, 4:] @ self.A.T - X[:, :4]
        Pi = -E @ G.T
        return np.concatenate(
            [X[:, :4] @ self.A.T + U @ self.B.T, X[:, 4:] @ self.A.T + Pi @ self.B.T],
            axis=1,
        )

    def jac_f_theta_batch(self, X, U, theta):
        X = np.asarray(X, dtype=np.float64)
        C = self._gain_derivatives(theta)
        # flatten the 13 per-parameter 2x4 maps into one (4, 2*13) matrix so
        # the batch reduces to two BLAS matmuls
        Cmat = C.transpose(2, 1, 0).reshape(4, 2 * 13)
        E = X[:, 4:] @ self.A.T - X[:, :4]
        dpi = (E @ Cmat).reshape(-1, 2, 13)
        jac = np.zeros((X.shape[0], 8, 13))
        jac[:, 4:, :] = np.matmul(self.B[None, :, :], dpi)
        return jac

    def default_initial_state(self):
        return np.array([0.0, 0.0, 0.0, 0.0, 3.0, 3.0, 0.0, 0.0])

    def sample_state(self, rng: RngStream):
        out = np.empty(8)
        for agent in range(2):
            out[4 * agent : 4 * agent + 2] = rng.uniform(-3.0, 3.0, size=2)
            out[4 * agent + 2 : 4 * agent + 4] = rng.uniform(-1.0, 1.0, size=2)
        return out

    def theta_layout(self):
        return (
            "theta[0:10] = lower-triangular Cholesky factor of Q (column-major), "
            "theta[10:13] = lower-triangular Cholesky factor of R; "
            "Q = Lq Lq^T, R = Lr Lr^T + 1e-8 I"
        )
