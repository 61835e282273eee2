"""
Batched per-bin kernels, backed by the compiled extension when available.

The compiled module ``rtfkit._ckernels`` is built from Cython at install time.
If it is missing (or ``RTFKIT_PURE_PYTHON=1`` is set) the numpy
implementation in ``rtfkit._pykernels`` is used instead. Both expose:

    rank1_update(R, Y, alpha)          in place
    principal_vectors(A)       -> V, ok
    cw_vectors(Ry, Rn)         -> U, ok
    pm_step(A, V)              -> V_new, ok
    pm_cw_step(Ry, Rn, V)      -> U, V_new, ok
    mvdr(Rn, H, loading)       -> W, ok
"""

import os
import warnings

from . import _pykernels

BACKEND = "python"

if os.environ.get("RTFKIT_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        warnings.warn("compiled kernels not available, falling back to numpy "
                      "(reinstall the package to build them)", RuntimeWarning)
        _impl = _pykernels
    else:
        BACKEND = "cython"

rank1_update = _impl.rank1_update
principal_vectors = _impl.principal_vectors
cw_vectors = _impl.cw_vectors
pm_step = _impl.pm_step
pm_cw_step = _impl.pm_cw_step
mvdr = _impl.mvdr

__all__ = ["BACKEND", "rank1_update", "principal_vectors", "cw_vectors",
           "pm_step", "pm_cw_step", "mvdr"]
