"""MVDR weights, filtering ``Z = w^H y`` and shadow filtering of oracle components."""

import numpy as np

from . import kernels
from .errors import DegenerateError, ShapeError
from .linalg import solve_hermitian

__all__ = ["DEFAULT_LOADING", "load_diagonal", "mvdr_weights", "batch_mvdr",
           "apply", "shadow_apply"]

DEFAULT_LOADING = 1e-6


def load_diagonal(Rn, loading=DEFAULT_LOADING):
    """``Rn + loading * trace(Rn) / M * I``."""
    Rn = np.asarray(Rn, dtype=np.complex128)
    M = Rn.shape[-1]
    tr = np.trace(Rn, axis1=-2, axis2=-1).real
    return Rn + (loading * tr / M)[..., None, None] * np.eye(M)


def mvdr_weights(Rn, h, loading=DEFAULT_LOADING):
    """MVDR filter for noise covariance ``Rn`` and steering (RTF) vector ``h``."""
    Rn = np.asarray(Rn, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    if Rn.ndim != 2 or Rn.shape != (len(h), len(h)):
        raise ShapeError(f"Rn must be {len(h)}x{len(h)}, got {Rn.shape}")
    x = solve_hermitian(load_diagonal(Rn, loading), h)
    den = np.vdot(h, x)
    if not den.real > 0:
        raise DegenerateError("h^H Rn^-1 h is not positive")
    return x / den


def batch_mvdr(Rn, H, loading=DEFAULT_LOADING):
    """Per-bin MVDR weights for (bins, M, M) and (bins, M); returns (W, ok)."""
    W, ok = kernels.mvdr(np.ascontiguousarray(Rn, dtype=np.complex128),
                         np.ascontiguousarray(H, dtype=np.complex128), float(loading))
    return W, ok


def apply(weights, tensor):
    """``Z = w^H y`` per (frame, bin).

    ``weights`` is (bins, M) for a fixed filter or (frames, bins, M) for a
    time-varying one; ``tensor`` is (frames, bins, M). Returns (frames, bins, 1).
    """
    weights = np.asarray(weights)
    tensor = np.asarray(tensor)
    if tensor.ndim != 3:
        raise ShapeError(f"tensor must be (frames, bins, channels), got {tensor.shape}")
    if weights.shape not in (tensor.shape, tensor.shape[1:]):
        raise ShapeError(f"weights {weights.shape} do not match tensor {tensor.shape}")
    if weights.ndim == 2:
        z = np.einsum("km,lkm->lk", weights.conj(), tensor)
    else:
        z = np.einsum("lkm,lkm->lk", weights.conj(), tensor)
    return z[:, :, None]


def shadow_apply(weights, speech_tensor, noise_tensor):
    """Filter speech and noise components separately with identical weights."""
    speech_tensor = np.asarray(speech_tensor)
    noise_tensor = np.asarray(noise_tensor)
    if speech_tensor.shape != noise_tensor.shape:
        raise ShapeError(f"component shapes differ: {speech_tensor.shape} vs {noise_tensor.shape}")
    return apply(weights, speech_tensor), apply(weights, noise_tensor)

