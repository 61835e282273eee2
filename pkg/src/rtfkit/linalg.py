"""
Dense complex Hermitian linear algebra for small matrices (M <= ~8).

These routines work on one matrix at a time and favour clarity and accuracy.
The batched per-bin versions used by the online pipeline live in
:mod:`rtfkit.kernels`.
"""

import numpy as np

from .errors import (DegenerateError, NotHermitianError, NotPositiveDefiniteError,
                     ShapeError, SingularError)

__all__ = [
    "EigenPairs", "cholesky", "solve_triangular", "hermitian_evd",
    "power_iteration", "solve_hermitian", "fix_phase",
]

_EPS = np.finfo(np.float64).eps


def _square(R, name="R"):
    R = np.asarray(R)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ShapeError(f"{name} must be a square matrix, got shape {R.shape}")
    return R


def _hermitian(R, tol=1e-10):
    R = _square(R).astype(np.complex128)
    scale = max(np.abs(R).max(), np.finfo(float).tiny)
    if np.abs(R - R.conj().T).max() > tol * scale:
        raise NotHermitianError("matrix is not Hermitian within tolerance")
    return 0.5 * (R + R.conj().T)


def cholesky(R):
    """Upper-triangular factor ``S`` with ``R = S^H S``."""
    R = _hermitian(R)
    M = R.shape[0]
    diag = R.diagonal().real
    threshold = M * _EPS * max(diag.max(initial=0.0), 0.0)
    S = np.zeros_like(R)
    for j in range(M):
        pivot = R[j, j].real - np.vdot(S[:j, j], S[:j, j]).real
        if pivot <= threshold:
            raise NotPositiveDefiniteError(f"pivot {pivot:.3e} at index {j} is not positive")
        s = np.sqrt(pivot)
        S[j, j] = s
        # row j of S: S[j, k] = (R[j, k] - sum_i conj(S[i, j]) S[i, k]) / S[j, j]
        S[j, j + 1:] = (R[j, j + 1:] - S[:j, j].conj() @ S[:j, j + 1:]) / s
    return S


def solve_triangular(S, B, lower=False, trans="N"):
    """Solve ``op(S) X = B`` for triangular ``S``.

    ``trans`` is ``"N"`` (``S``), ``"T"`` (``S^T``) or ``"C"`` (``S^H``).
    ``lower`` describes ``S`` itself, before ``trans`` is applied.
    """
    S = _square(S, "S")
    B = np.asarray(B)
    vector = B.ndim == 1
    X = np.array(B, dtype=np.result_type(S, B, np.float64), copy=True)
    if vector:
        X = X[:, None]
    if X.shape[0] != S.shape[0]:
        raise ShapeError(f"B has {X.shape[0]} rows, S is {S.shape[0]}x{S.shape[0]}")
    if trans == "N":
        A = S
    elif trans == "T":
        A, lower = S.T, not lower
    elif trans == "C":
        A, lower = S.conj().T, not lower
    else:
        raise ValueError(f"trans must be 'N', 'T' or 'C', got {trans!r}")
    d = np.abs(A.diagonal())
    if d.min() <= S.shape[0] * _EPS * max(d.max(), np.finfo(float).tiny):
        raise SingularError("triangular matrix has a (near) zero diagonal entry")
    n = A.shape[0]
    order = range(n) if lower else range(n - 1, -1, -1)
    for i in order:
        if lower:
            acc = A[i, :i] @ X[:i]
        else:
            acc = A[i, i + 1:] @ X[i + 1:]
        X[i] = (X[i] - acc) / A[i, i]
    return X[:, 0] if vector else X


def fix_phase(v):
    """Rotate ``v`` so that its largest-magnitude entry is real and positive."""
    v = np.asarray(v, dtype=np.complex128)
    i = int(np.argmax(np.abs(v)))
    a = v[i]
    if a == 0:
        return v.copy()
    return v * (abs(a) / a)


class EigenPairs:
    """Eigenvalues (descending) and the matching unit eigenvectors as columns."""

    def __init__(self, eigenvalues, eigenvectors):
        self.eigenvalues = eigenvalues
        self.eigenvectors = eigenvectors

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors

    @property
    def principal(self):
        return self.eigenvectors[:, 0]


def hermitian_evd(R, tol=1e-15, max_sweeps=100):
    """Full eigendecomposition by cyclic complex Jacobi rotations.

    Eigenvalues are sorted in descending order (ties keep their diagonal
    order); each eigenvector has its largest-magnitude entry real positive.
    """
    A = _hermitian(R)
    M = A.shape[0]
    V = np.eye(M, dtype=np.complex128)
    total = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(A.diagonal()))
        if off <= tol * total:
            break
        for p in range(M - 1):
            for q in range(p + 1, M):
                b = A[p, q]
                mag = abs(b)
                if mag <= _EPS * 1e-3 * total:
                    continue
                a, d = A[p, p].real, A[q, q].real
                theta = 0.5 * np.arctan2(2.0 * mag, d - a)
                c, s = np.cos(theta), np.sin(theta)
                ph = b.conjugate() / mag
                # U = diag(1, ph) @ [[c, s], [-s, c]] makes the (p, q) entry vanish
                U = np.array([[c, s], [-s * ph, c * ph]])
                cols = [p, q]
                A[:, cols] = A[:, cols] @ U
                A[cols, :] = U.conj().T @ A[cols, :]
                A[p, q] = A[q, p] = 0.0
                V[:, cols] = V[:, cols] @ U
    w = A.diagonal().real.copy()
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    for j in range(M):
        V[:, j] = fix_phase(V[:, j])
    return EigenPairs(w, V)


def power_iteration(R, v_prev, iterations=1):
    """Normalized ``R^iterations v_prev``; one iteration is the online update."""
    R = _square(R)
    v = np.asarray(v_prev, dtype=np.complex128)
    if v.shape != (R.shape[0],):
        raise ShapeError(f"v_prev must have shape ({R.shape[0]},), got {v.shape}")
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("v_prev must be a nonzero finite vector")
    scale = max(np.abs(R).max(), np.finfo(float).tiny)
    v = v / norm
    for _ in range(iterations):
        u = R @ v
        n = np.linalg.norm(u)
        if n <= R.shape[0] * _EPS * scale:
            raise DegenerateError("R v vanished during power iteration")
        v = u / n
    return v


def solve_hermitian(R, b):
    """Solve ``R x = b`` for Hermitian positive definite ``R``."""
    S = cholesky(R)
    y = solve_triangular(S, b, lower=False, trans="C")
    return solve_triangular(S, y, lower=False, trans="N")
