# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled batched per-bin kernels; same contract as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY, sqrt
from libc.float cimport DBL_EPSILON, DBL_MIN

cnp.import_array()

DEF MAXD = 16

ctypedef double complex cplx


cdef inline double _abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx _conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef int _cholesky_upper(const cplx* R, int D, cplx* S) noexcept nogil:
    """Upper factor S (row-major) with R = S^H S. Returns 0 on success."""
    cdef int i, j, k
    cdef double dmax = 0.0, pivot, s
    cdef cplx acc
    for i in range(D):
        if R[i * D + i].real > dmax:
            dmax = R[i * D + i].real
    for i in range(D * D):
        S[i] = 0
    for j in range(D):
        pivot = R[j * D + j].real
        for i in range(j):
            pivot -= _abs2(S[i * D + j])
        if pivot <= D * DBL_EPSILON * dmax or pivot <= 0.0:
            return 1
        s = sqrt(pivot)
        S[j * D + j] = s
        for k in range(j + 1, D):
            acc = R[j * D + k]
            for i in range(j):
                acc = acc - _conj(S[i * D + j]) * S[i * D + k]
            S[j * D + k] = acc / s
    return 0


cdef void _whiten(const cplx* Ry, const cplx* S, int D, cplx* W) noexcept nogil:
    """W = S^-H Ry S^-1 for upper-triangular S."""
    cdef cplx T[MAXD * MAXD]
    cdef int i, j, k
    cdef cplx acc
    # T = S^-H Ry: solve S^H T = Ry (S^H lower triangular), column by column
    for j in range(D):
        for i in range(D):
            acc = Ry[i * D + j]
            for k in range(i):
                acc = acc - _conj(S[k * D + i]) * T[k * D + j]
            T[i * D + j] = acc / _conj(S[i * D + i])
    # W = T S^-1: solve W S = T, i.e. row by row forward substitution
    for i in range(D):
        for j in range(D):
            acc = T[i * D + j]
            for k in range(j):
                acc = acc - W[i * D + k] * S[k * D + j]
            W[i * D + j] = acc / S[j * D + j]
    for i in range(D):
        W[i * D + i] = W[i * D + i].real
        for j in range(i + 1, D):
            acc = 0.5 * (W[i * D + j] + _conj(W[j * D + i]))
            W[i * D + j] = acc
            W[j * D + i] = _conj(acc)


cdef int _principal(const cplx* A, int D, cplx* v) noexcept nogil:
    """Principal eigenvector of Hermitian A by cyclic Jacobi rotations."""
    cdef cplx a[MAXD * MAXD]
    cdef cplx V[MAXD * MAXD]
    cdef int i, j, p, q, sweep, best, rotated
    cdef double total = 0.0, off, mag, tau, t, c, s, app, aqq, nrm
    cdef cplx ph, b, x, y
    for i in range(D * D):
        a[i] = A[i]
        V[i] = 0
        total += _abs2(A[i])
    for i in range(D):
        V[i * D + i] = 1
    total = sqrt(total)
    if total == 0.0 or total != total:
        for i in range(D):
            v[i] = 0
        v[0] = 1
        return 1
    for sweep in range(100):
        off = 0.0
        for i in range(D):
            for j in range(D):
                if i != j:
                    off += _abs2(a[i * D + j])
        if sqrt(off) <= 1e-14 * total:
            break
        rotated = 0
        for p in range(D - 1):
            for q in range(p + 1, D):
                b = a[p * D + q]
                mag = sqrt(_abs2(b))
                if mag <= DBL_EPSILON * 1e-3 * total:
                    continue
                rotated = 1
                app = a[p * D + p].real
                aqq = a[q * D + q].real
                # tangent of the rotation angle without trigonometry
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                ph = _conj(b) / mag
                # columns: A[:, p], A[:, q] <- A[:, [p, q]] @ U
                for i in range(D):
                    x = a[i * D + p]
                    y = a[i * D + q]
                    a[i * D + p] = c * x - s * ph * y
                    a[i * D + q] = s * x + c * ph * y
                    x = V[i * D + p]
                    y = V[i * D + q]
                    V[i * D + p] = c * x - s * ph * y
                    V[i * D + q] = s * x + c * ph * y
                # rows: A[[p, q], :] <- U^H @ A[[p, q], :]
                for j in range(D):
                    x = a[p * D + j]
                    y = a[q * D + j]
                    a[p * D + j] = c * x - s * _conj(ph) * y
                    a[q * D + j] = s * x + c * _conj(ph) * y
                a[p * D + q] = 0
                a[q * D + p] = 0
        if not rotated:
            break
    best = 0
    for i in range(1, D):
        if a[i * D + i].real > a[best * D + best].real:
            best = i
    nrm = 0.0
    for i in range(D):
        v[i] = V[i * D + best]
        nrm += _abs2(v[i])
    nrm = sqrt(nrm)
    for i in range(D):
        v[i] = v[i] / nrm
    return 0


def rank1_update(cplx[:, :, ::1] R, const cplx[:, ::1] Y, double alpha):
    cdef Py_ssize_t K = R.shape[0], k
    cdef int D = R.shape[1], i, j
    cdef double beta = 1.0 - alpha
    cdef double a, b, c, d, re, im
    with nogil:
        for k in range(K):
            for i in range(D):
                a = Y[k, i].real
                b = Y[k, i].imag
                for j in range(D):
                    # y_i conj(y_j) in real arithmetic, same rounding as numpy
                    c = Y[k, j].real
                    d = Y[k, j].imag
                    re = a * c + b * d
                    im = b * c - a * d
                    R[k, i, j] = (alpha * R[k, i, j].real + beta * re) + \
                        1j * (alpha * R[k, i, j].imag + beta * im)


def principal_vectors(const cplx[:, :, ::1] A):
    cdef Py_ssize_t K = A.shape[0], k
    cdef int D = A.shape[1]
    if D > MAXD:
        raise ValueError("matrix dimension exceeds compiled limit")
    V_arr = np.empty((K, D), dtype=np.complex128)
    ok_arr = np.ones(K, dtype=bool)
    cdef cplx[:, ::1] V = V_arr
    cdef cnp.npy_bool[::1] ok = ok_arr.view(np.uint8)
    with nogil:
        for k in range(K):
            if _principal(&A[k, 0, 0], D, &V[k, 0]):
                ok[k] = 0
    return V_arr, ok_arr


def cw_vectors(const cplx[:, :, ::1] Ry, const cplx[:, :, ::1] Rn):
    cdef Py_ssize_t K = Ry.shape[0], k
    cdef int D = Ry.shape[1], i, j
    if D > MAXD:
        raise ValueError("matrix dimension exceeds compiled limit")
    U_arr = np.zeros((K, D), dtype=np.complex128)
    ok_arr = np.ones(K, dtype=bool)
    cdef cplx[:, ::1] U = U_arr
    cdef cnp.npy_bool[::1] ok = ok_arr.view(np.uint8)
    cdef cplx S[MAXD * MAXD]
    cdef cplx W[MAXD * MAXD]
    cdef cplx v[MAXD]
    cdef cplx acc
    with nogil:
        for k in range(K):
            if _cholesky_upper(&Rn[k, 0, 0], D, S):
                ok[k] = 0
                continue
            _whiten(&Ry[k, 0, 0], S, D, W)
            if _principal(W, D, v):
                ok[k] = 0
                continue
            # de-whiten with S^H (lower triangular)
            for i in range(D):
                acc = 0
                for j in range(i + 1):
                    acc = acc + _conj(S[j * D + i]) * v[j]
                U[k, i] = acc
    return U_arr, ok_arr


cdef int _step(const cplx* A, int D, const cplx* v, cplx* out) noexcept nogil:
    cdef int i, j
    cdef double nrm = 0.0, scale = 0.0, m
    cdef cplx acc
    for i in range(D * D):
        m = _abs2(A[i])
        if m > scale:
            scale = m
    scale = sqrt(scale)
    if scale < DBL_MIN:
        scale = DBL_MIN
    for i in range(D):
        acc = 0
        for j in range(D):
            acc = acc + A[i * D + j] * v[j]
        out[i] = acc
        nrm += _abs2(acc)
    nrm = sqrt(nrm)
    if not (nrm > D * DBL_EPSILON * scale):
        for i in range(D):
            out[i] = v[i]
        return 1
    for i in range(D):
        out[i] = out[i] / nrm
    return 0


def pm_step(const cplx[:, :, ::1] A, const cplx[:, ::1] V):
    cdef Py_ssize_t K = A.shape[0], k
    cdef int D = A.shape[1]
    out_arr = np.empty((K, D), dtype=np.complex128)
    ok_arr = np.ones(K, dtype=bool)
    cdef cplx[:, ::1] out = out_arr
    cdef cnp.npy_bool[::1] ok = ok_arr.view(np.uint8)
    with nogil:
        for k in range(K):
            if _step(&A[k, 0, 0], D, &V[k, 0], &out[k, 0]):
                ok[k] = 0
    return out_arr, ok_arr


def pm_cw_step(const cplx[:, :, ::1] Ry, const cplx[:, :, ::1] Rn, const cplx[:, ::1] V):
    cdef Py_ssize_t K = Ry.shape[0], k
    cdef int D = Ry.shape[1], i, j
    if D > MAXD:
        raise ValueError("matrix dimension exceeds compiled limit")
    U_arr = np.zeros((K, D), dtype=np.complex128)
    Vn_arr = np.array(V, dtype=np.complex128, copy=True)
    ok_arr = np.ones(K, dtype=bool)
    cdef cplx[:, ::1] U = U_arr
    cdef cplx[:, ::1] Vn = Vn_arr
    cdef cnp.npy_bool[::1] ok = ok_arr.view(np.uint8)
    cdef cplx S[MAXD * MAXD]
    cdef cplx W[MAXD * MAXD]
    cdef cplx acc
    with nogil:
        for k in range(K):
            if _cholesky_upper(&Rn[k, 0, 0], D, S):
                ok[k] = 0
                continue
            _whiten(&Ry[k, 0, 0], S, D, W)
            if _step(W, D, &V[k, 0], &Vn[k, 0]):
                ok[k] = 0
            for i in range(D):
                acc = 0
                for j in range(i + 1):
                    acc = acc + _conj(S[j * D + i]) * Vn[k, j]
                U[k, i] = acc
    return U_arr, Vn_arr, ok_arr


def mvdr(const cplx[:, :, ::1] Rn, const cplx[:, ::1] H, double loading):
    cdef Py_ssize_t K = Rn.shape[0], k
    cdef int D = Rn.shape[1], i, j
    if D > MAXD:
        raise ValueError("matrix dimension exceeds compiled limit")
    W_arr = np.zeros((K, D), dtype=np.complex128)
    ok_arr = np.ones(K, dtype=bool)
    cdef cplx[:, ::1] W = W_arr
    cdef cnp.npy_bool[::1] ok = ok_arr.view(np.uint8)
    cdef cplx Rl[MAXD * MAXD]
    cdef cplx S[MAXD * MAXD]
    cdef cplx y[MAXD]
    cdef cplx x[MAXD]
    cdef cplx acc, den
    cdef double tr
    with nogil:
        for k in range(K):
            tr = 0.0
            for i in range(D):
                tr += Rn[k, i, i].real
            # MVDR is invariant to the scale of Rn; normalizing keeps tiny or
            # huge covariances away from under- and overflow
            tr = tr / D
            if not (tr > 0.0 and tr < INFINITY):
                ok[k] = 0
                continue
            for i in range(D):
                for j in range(D):
                    Rl[i * D + j] = Rn[k, i, j] / tr
                Rl[i * D + i] = Rl[i * D + i] + loading
            if _cholesky_upper(Rl, D, S):
                ok[k] = 0
                continue
            # S^H y = h
            for i in range(D):
                acc = H[k, i]
                for j in range(i):
                    acc = acc - _conj(S[j * D + i]) * y[j]
                y[i] = acc / _conj(S[i * D + i])
            # S x = y
            for i in range(D - 1, -1, -1):
                acc = y[i]
                for j in range(i + 1, D):
                    acc = acc - S[i * D + j] * x[j]
                x[i] = acc / S[i * D + i]
            den = 0
            for i in range(D):
                den = den + _conj(H[k, i]) * x[i]
            if not (den.real > 0.0):
                ok[k] = 0
                continue
            for i in range(D):
                W[k, i] = x[i] / den
    return W_arr, ok_arr
