"""
RTF vector estimators.

Single-matrix functions (``estimate_*``) follow the textbook definitions and
raise on degenerate input. The ``batch_*`` functions do the same per frequency
bin on stacks of matrices and return an ``ok`` mask instead of raising, which
is what the online pipeline needs to hold the previous estimate.

Local-only estimators use the M x M covariances of the array (Ry, Rn). The
external-microphone estimator ``estimate_sc`` reads the RTF off the last
column of the (M+1) x (M+1) extended covariance and needs no noise statistics.
"""

import numpy as np

from . import kernels
from .errors import DegenerateError, ShapeError
from .linalg import cholesky, hermitian_evd, power_iteration, solve_triangular

__all__ = [
    "ESTIMATORS", "LOCAL_ESTIMATORS", "normalize_rtf", "initial_pm_state",
    "estimate_cs", "estimate_r1", "estimate_cw", "estimate_pm_cs",
    "estimate_pm_cw", "estimate_sc",
    "batch_cs", "batch_r1", "batch_cw", "batch_pm_cs", "batch_pm_cw", "batch_sc",
]

ESTIMATORS = ("CS", "R1", "CW", "PM-CS", "PM-CW", "SC")
LOCAL_ESTIMATORS = ESTIMATORS[:5]

_EPS = np.finfo(np.float64).eps


def _pair(Ry, Rn):
    Ry = np.asarray(Ry, dtype=np.complex128)
    Rn = np.asarray(Rn, dtype=np.complex128)
    if Ry.ndim != 2 or Ry.shape != Rn.shape or Ry.shape[0] != Ry.shape[1]:
        raise ShapeError(f"Ry and Rn must be equal square matrices, got {Ry.shape}, {Rn.shape}")
    return Ry, Rn


def normalize_rtf(v, tol=1e-12):
    """Divide by the reference entry and pin it to exactly 1."""
    v = np.asarray(v, dtype=np.complex128)
    if not abs(v[0]) > tol * np.linalg.norm(v):
        raise DegenerateError("reference entry of the vector is (numerically) zero")
    h = v / v[0]
    h[0] = 1.0
    return h


PM_INITS = ("ones", "e1")


def initial_pm_state(dim, bins=None, kind="ones"):
    """Power-iteration start vector, per bin if ``bins`` is given.

    ``"ones"`` is the normalized all-ones vector, ``"e1"`` the reference unit vector.
    """
    if kind == "ones":
        v = np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128)
    elif kind == "e1":
        v = np.zeros(dim, dtype=np.complex128)
        v[0] = 1.0
    else:
        raise ValueError(f"unknown PM start vector {kind!r}, choose from {PM_INITS}")
    if bins is None:
        return v
    return np.tile(v, (bins, 1))


def _whiten(Ry, S, triangular=True):
    """S^-H Ry S^-1 without forming an inverse."""
    if triangular:
        T = solve_triangular(S, Ry, lower=False, trans="C")
        W = solve_triangular(S, T.conj().T, lower=False, trans="C").conj().T
    else:
        T = np.linalg.solve(S.conj().T, Ry)
        W = np.linalg.solve(S.conj().T, T.conj().T).conj().T
    return 0.5 * (W + W.conj().T)


def _principal(A):
    if not np.any(A):
        raise DegenerateError("matrix is zero, no principal direction")
    return hermitian_evd(A).principal


def estimate_cs(Ry, Rn):
    """First column of Ry - Rn normalized by its reference entry."""
    Ry, Rn = _pair(Ry, Rn)
    col = Ry[:, 0] - Rn[:, 0]
    scale = max(abs(np.trace(Ry)), np.finfo(float).tiny)
    if not abs(col[0]) > _EPS * scale:
        raise DegenerateError("speech power estimate at the reference is zero")
    h = col / col[0]
    h[0] = 1.0
    return h


def estimate_r1(Ry, Rn):
    """Principal eigenvector of Ry - Rn (no eigenvalue thresholding)."""
    Ry, Rn = _pair(Ry, Rn)
    return normalize_rtf(_principal(Ry - Rn))


def estimate_cw(Ry, Rn, factor=None):
    """Covariance whitening with Rn = S^H S.

    The principal eigenvector of S^-H Ry S^-1 is proportional to S^-H h, so
    the estimate is S^H v_max normalized by its reference entry.

    ``factor`` overrides the square root of Rn (default: upper Cholesky factor).
    """
    Ry, Rn = _pair(Ry, Rn)
    if factor is None:
        S, triangular = cholesky(Rn), True
    else:
        S, triangular = np.asarray(factor, dtype=np.complex128), False
    v = _principal(_whiten(Ry, S, triangular))
    return normalize_rtf(S.conj().T @ v)


def estimate_pm_cs(Ry, Rn, state):
    """One power-iteration step on Ry - Rn; returns (rtf, new_state)."""
    Ry, Rn = _pair(Ry, Rn)
    v = power_iteration(Ry - Rn, state, 1)
    return normalize_rtf(v), v


def estimate_pm_cw(Ry, Rn, state):
    """One power-iteration step on the whitened Ry; returns (rtf, new_state)."""
    Ry, Rn = _pair(Ry, Rn)
    S = cholesky(Rn)
    v = power_iteration(_whiten(Ry, S), state, 1)
    return normalize_rtf(S.conj().T @ v), v


def estimate_sc(Ry_ext):
    """Local RTF from the external-mic column of the extended covariance."""
    R = np.asarray(Ry_ext, dtype=np.complex128)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] < 2:
        raise ShapeError(f"extended covariance must be square with dim >= 2, got {R.shape}")
    col = R[:-1, -1]
    scale = max(abs(np.trace(R)), np.finfo(float).tiny)
    if not abs(col[0]) > _EPS * scale:
        raise DegenerateError("reference/external cross-power is zero")
    h = col / col[0]
    h[0] = 1.0
    return h


# -- batched per-bin versions ----------------------------------------------------


def _normalize_rows(V, ok, tol):
    ref = V[:, 0]
    ok = ok & (np.abs(ref) > tol * np.linalg.norm(V, axis=1)) & np.isfinite(V).all(axis=1)
    H = np.zeros_like(V)
    H[ok] = V[ok] / ref[ok, None]
    H[:, 0] = 1.0
    return H, ok


def _column_rtf(col, Ry):
    scale = np.maximum(np.abs(np.trace(Ry, axis1=1, axis2=2)), np.linalg.norm(col, axis=1))
    ok = np.abs(col[:, 0]) > _EPS * np.maximum(scale, np.finfo(float).tiny)
    H = np.zeros_like(col)
    with np.errstate(over="ignore", invalid="ignore"):
        H[ok] = col[ok] / col[ok, :1]
    ok &= np.isfinite(H).all(axis=1)
    H[:, 0] = 1.0
    return H, ok


def batch_cs(Ry, Rn):
    return _column_rtf(Ry[:, :, 0] - Rn[:, :, 0], Ry)


def batch_r1(Ry, Rn):
    V, ok = kernels.principal_vectors(np.ascontiguousarray(Ry - Rn))
    return _normalize_rows(V, ok, 1e-12)


def batch_cw(Ry, Rn):
    U, ok = kernels.cw_vectors(np.ascontiguousarray(Ry), np.ascontiguousarray(Rn))
    return _normalize_rows(U, ok, 1e-12)


def batch_pm_cs(Ry, Rn, state):
    """Returns (H, ok, new_state); degenerate bins keep their state."""
    V, ok = kernels.pm_step(np.ascontiguousarray(Ry - Rn), state)
    H, ok = _normalize_rows(V, ok, 1e-12)
    return H, ok, V


def batch_pm_cw(Ry, Rn, state):
    U, V, ok = kernels.pm_cw_step(np.ascontiguousarray(Ry), np.ascontiguousarray(Rn), state)
    H, ok = _normalize_rows(U, ok, 1e-12)
    return H, ok, V


def batch_sc(Ry_ext):
    return _column_rtf(np.ascontiguousarray(Ry_ext[:, :-1, -1]), Ry_ext)
