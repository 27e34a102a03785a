"""Dimension-checked array helpers and numerically safe PSD routines.

All numerics are float64: covariance recursions visibly lose symmetry in
32-bit. Arrays returned by these helpers are freshly validated copies or
views; callers treat them as immutable.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonFiniteOutput, SingularMatrix
from .rng import RngStream

__all__ = [
    "as_vec",
    "as_mat",
    "as_psd",
    "symmetrize",
    "logdet_psd",
    "mvn_sample",
    "psd_factor",
]

_SYM_TOL = 1e-10
_EIG_TOL = -1e-10
_JITTER = 1e-12


def as_vec(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and return a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name}: expected 1-D array, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"{name}: expected length {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteOutput(f"{name}: contains non-finite entries")
    return v


def as_mat(m, shape: tuple[int, int] | None = None, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-D float64 array."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name}: expected 2-D array, got shape {a.shape}")
    if shape is not None and a.shape != shape:
        raise DimensionMismatch(f"{name}: expected shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteOutput(f"{name}: contains non-finite entries")
    return a


def as_psd(m, name: str = "psd matrix") -> np.ndarray:
    """Validate a square matrix as PSD.

    Symmetry must hold within 1e-10; eigenvalues down to -1e-10 are tolerated
    and clamped to zero. Anything worse is an error, not silently repaired.
    """
    a = as_mat(m, name=name)
    n, k = a.shape
    if n != k:
        raise DimensionMismatch(f"{name}: expected square matrix, got {a.shape}")
    if np.max(np.abs(a - a.T), initial=0.0) > _SYM_TOL:
        raise DimensionMismatch(f"{name}: not symmetric within {_SYM_TOL}")
    a = 0.5 * (a + a.T)
    w = np.linalg.eigvalsh(a)
    if w[0] < _EIG_TOL:
        raise DimensionMismatch(
            f"{name}: smallest eigenvalue {w[0]:.3e} below tolerance {_EIG_TOL}"
        )
    if w[0] < 0.0:
        a = symmetrize(a)
    return a


def symmetrize(m) -> np.ndarray:
    """(m + m^T)/2 with negative eigenvalues clamped to zero."""
    a = as_mat(m, name="symmetrize input")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"symmetrize: expected square matrix, got {a.shape}")
    s = 0.5 * (a + a.T)
    w, v = np.linalg.eigh(s)
    if w[0] >= 0.0:
        return s
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.T
    return 0.5 * (out + out.T)


def logdet_psd(m) -> float:
    """ln det of a positive-definite matrix via Cholesky.

    Never touches the raw determinant. If the factorization fails, a single
    1e-12 * I jitter retry is attempted before raising SingularMatrix:
    repeated silent jitter would mask modeling bugs upstream.
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"logdet_psd: expected square matrix, got {a.shape}")
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        try:
            chol = np.linalg.cholesky(a + _JITTER * np.eye(a.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise SingularMatrix(
                "logdet_psd: Cholesky failed even after 1e-12 jitter"
            ) from exc
    return float(2.0 * np.sum(np.log(np.diagonal(chol))))


def psd_factor(cov: np.ndarray) -> np.ndarray:
    """A factor L with L @ L.T = cov, valid for singular PSD inputs.

    Cholesky on the fast path; falls back to an eigen factor when the matrix
    is only semidefinite.
    """
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (cov + cov.T))
        w = np.clip(w, 0.0, None)
        return v * np.sqrt(w)


def mvn_sample(
    mean: np.ndarray,
    cov: np.ndarray,
    rng: RngStream,
    size: int | None = None,
) -> np.ndarray:
    """Draw from N(mean, cov) as mean + L z, advancing ``rng``.

    A zero covariance returns the mean exactly. With ``size`` set, returns a
    (size, dim) array of independent draws.
    """
    mu = as_vec(mean, name="mvn mean")
    c = np.asarray(cov, dtype=np.float64)
    if c.shape != (mu.shape[0], mu.shape[0]):
        raise DimensionMismatch(
            f"mvn_sample: cov shape {c.shape} does not match mean length {mu.shape[0]}"
        )
    n = mu.shape[0]
    if not c.any():
        if size is None:
            return mu.copy()
        return np.tile(mu, (size, 1))
    factor = psd_factor(c)
    z = rng.normal(size=(n,) if size is None else (size, n))
    return mu + z @ factor.T
