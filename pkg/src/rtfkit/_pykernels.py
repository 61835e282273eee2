"""Pure numpy implementation of the batched per-bin kernels.

Every function takes stacks of matrices with shape (K, D, D) and vectors with
shape (K, D) and returns an ``ok`` mask of shape (K,) flagging bins where the
computation is valid. Invalid bins carry unspecified values.
"""

import numpy as np

_EPS = np.finfo(np.float64).eps


def rank1_update(R, Y, alpha):
    """In place: ``R = alpha R + (1 - alpha) y y^H`` for every bin."""
    R *= alpha
    R += (1.0 - alpha) * (Y[:, :, None] * Y[:, None, :].conj())


def _pd_mask(R):
    D = R.shape[-1]
    diag = R.diagonal(axis1=1, axis2=2).real
    return diag.min(axis=1) > D * _EPS * np.maximum(diag.max(axis=1), 0.0)


def _cholesky_lower(R):
    """Batched lower Cholesky factor plus PD mask (invalid bins get identity)."""
    K, D, _ = R.shape
    ok = _pd_mask(R)
    L = np.empty_like(R)
    eye = np.eye(D, dtype=R.dtype)
    work = np.where(ok[:, None, None], R, eye)
    try:
        L[:] = np.linalg.cholesky(work)
    except np.linalg.LinAlgError:
        for k in range(K):
            try:
                L[k] = np.linalg.cholesky(work[k])
            except np.linalg.LinAlgError:
                ok[k] = False
                L[k] = eye
    diag = L.diagonal(axis1=1, axis2=2).real ** 2
    thresh = D * _EPS * np.maximum(R.diagonal(axis1=1, axis2=2).real.max(axis=1), 0.0)
    ok &= diag.min(axis=1) > thresh
    return L, ok


def principal_vectors(A):
    """Unit-norm principal eigenvector of each Hermitian matrix."""
    _, vecs = np.linalg.eigh(A)
    V = np.ascontiguousarray(vecs[:, :, -1])
    ok = np.isfinite(V).all(axis=1) & (np.abs(A).max(axis=(1, 2)) > 0)
    return V, ok


def _whiten(Ry, L):
    Linv = np.linalg.inv(L)
    W = Linv @ Ry @ Linv.conj().transpose(0, 2, 1)
    return 0.5 * (W + W.conj().transpose(0, 2, 1))


def cw_vectors(Ry, Rn):
    """De-whitened principal eigenvector ``S^H v`` of ``S^-H Ry S^-1`` (``Rn = S^H S``)."""
    L, ok = _cholesky_lower(Rn)
    V, ok_v = principal_vectors(_whiten(Ry, L))
    U = np.einsum("kij,kj->ki", L, V)
    return U, ok & ok_v


def pm_step(A, V):
    """One power-iteration step per bin; degenerate bins keep their iterate."""
    U = np.einsum("kij,kj->ki", A, V)
    n = np.linalg.norm(U, axis=1)
    scale = np.abs(A).max(axis=(1, 2))
    ok = n > A.shape[1] * _EPS * np.maximum(scale, np.finfo(float).tiny)
    out = V.copy()
    out[ok] = U[ok] / n[ok, None]
    return out, ok


def pm_cw_step(Ry, Rn, V):
    """Power step on the whitened matrix; returns (S^H v_new, v_new, ok)."""
    L, ok = _cholesky_lower(Rn)
    Vn, ok_p = pm_step(_whiten(Ry, L), V)
    ok &= ok_p
    Vn[~ok] = V[~ok]
    U = np.einsum("kij,kj->ki", L, Vn)
    return U, Vn, ok


def mvdr(Rn, H, loading):
    """MVDR weights ``Rl^-1 h / (h^H Rl^-1 h)`` with diagonal loading."""
    K, D, _ = Rn.shape
    # scale-invariant: normalize so tiny or huge Rn cannot under- or overflow
    tr = Rn.diagonal(axis1=1, axis2=2).real.sum(axis=1) / D
    good = (tr > 0) & np.isfinite(tr)
    s = np.where(good, tr, 1.0)
    s = s[:, None, None]
    # componentwise: complex division by a subnormal real overflows in numpy
    Rl = (Rn.real / s + loading * np.eye(D)) + 1j * (Rn.imag / s)
    L, ok = _cholesky_lower(Rl)
    ok &= good
    y = np.linalg.solve(L, H[:, :, None])
    x = np.linalg.solve(L.conj().transpose(0, 2, 1), y)[:, :, 0]
    den = np.einsum("ki,ki->k", H.conj(), x)
    ok &= den.real > 0
    W = np.zeros_like(H)
    W[ok] = x[ok] / den[ok, None]
    return W, ok
