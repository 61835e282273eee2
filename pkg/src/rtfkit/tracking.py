"""
Recursive per-bin covariance tracking with VAD gating, plus the oracle VAD.

A tracker holds one Hermitian matrix per frequency bin. On frames whose VAD
flag matches the tracker's gate it applies

    R(l) = alpha R(l-1) + (1 - alpha) y(l) y(l)^H

and otherwise keeps R(l) = R(l-1).
"""

from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError, InitError, ShapeError
from .spectral import StftConfig, n_frames

__all__ = [
    "SPEECH", "NOISE", "smoothing_factor", "CovarianceTracker", "oracle_vad",
    "long_term_init", "identity_init", "write_vad", "read_vad",
]

SPEECH = 1
NOISE = 0


def smoothing_factor(tau, config=None):
    """Recursive smoothing factor for time constant ``tau`` in seconds."""
    if config is None:
        config = StftConfig()
    if not tau > 0:
        raise ConfigError(f"time constant must be > 0, got {tau}")
    shift = config.frame_length - config.hop
    return float(np.exp(-shift / (config.sample_rate * tau)))


class CovarianceTracker:
    """Per-bin smoothed covariance, updated only on frames matching ``gate``.

    Parameters
    ----------
    initial : array (bins, dim, dim)
        R(0), e.g. from :func:`long_term_init`. Copied.
    alpha : float in [0, 1)
    gate : SPEECH or NOISE
    """

    def __init__(self, initial, alpha, gate=SPEECH):
        initial = np.asarray(initial)
        if initial.ndim != 3 or initial.shape[1] != initial.shape[2]:
            raise ShapeError(f"initial must be (bins, dim, dim), got {initial.shape}")
        if not 0.0 <= alpha < 1.0:
            raise ConfigError(f"alpha must lie in [0, 1), got {alpha}")
        if gate not in (SPEECH, NOISE):
            raise ConfigError(f"gate must be SPEECH (1) or NOISE (0), got {gate!r}")
        self.R = np.array(initial, dtype=np.complex128, order="C", copy=True)
        self.alpha = float(alpha)
        self.gate = gate

    @property
    def bins(self):
        return self.R.shape[0]

    @property
    def dim(self):
        return self.R.shape[1]

    def update(self, frame, vad):
        """Apply one frame (bins, dim) with its VAD flag; returns self."""
        frame = np.asarray(frame)
        if frame.shape != (self.bins, self.dim):
            raise ShapeError(f"frame must be ({self.bins}, {self.dim}), got {frame.shape}")
        if int(vad) == self.gate:
            kernels.rank1_update(self.R, np.ascontiguousarray(frame, dtype=np.complex128),
                                 self.alpha)
        return self

    def copy(self):
        return CovarianceTracker(self.R, self.alpha, self.gate)


def _frame_energies(signal, config):
    x = np.asarray(signal, dtype=np.float64).ravel()
    L = n_frames(len(x), config)
    if L == 0:
        return np.zeros(0)
    idx = np.arange(L)[:, None] * config.hop + np.arange(config.frame_length)[None, :]
    return np.sum((x[idx] * config.window) ** 2, axis=1)


def oracle_vad(clean_reference, config=None, threshold_db=40.0):
    """Broadband energy VAD on the clean speech at the reference microphone.

    A frame is flagged 1 when its windowed energy is within ``threshold_db``
    of the loudest frame. An all-zero signal yields all zeros.
    """
    if config is None:
        config = StftConfig()
    energy = _frame_energies(clean_reference, config)
    peak = energy.max(initial=0.0)
    if peak <= 0.0:
        return np.zeros(len(energy), dtype=np.int8)
    return (energy > peak * 10.0 ** (-threshold_db / 10.0)).astype(np.int8)


def long_term_init(frames, vad, gate=SPEECH):
    """Unweighted average of y y^H over all frames whose VAD matches ``gate``.

    ``frames`` is a (frames, bins, dim) tensor; returns (bins, dim, dim).
    """
    frames = np.asarray(frames)
    vad = np.asarray(vad)
    if frames.ndim != 3 or len(vad) != frames.shape[0]:
        raise ShapeError(f"need (frames, bins, dim) tensor and one flag per frame, "
                         f"got {frames.shape} and {vad.shape}")
    sel = frames[vad == gate]
    if len(sel) == 0:
        raise InitError(f"no frames with VAD == {gate} available for initialization")
    return np.einsum("lki,lkj->kij", sel, sel.conj()) / len(sel)


def identity_init(frames):
    """Scaled identity per bin whose trace matches the mean ||y||^2 over all frames."""
    frames = np.asarray(frames)
    if frames.ndim != 3 or frames.shape[0] == 0:
        raise InitError("identity init needs a nonempty (frames, bins, dim) tensor")
    D = frames.shape[2]
    power = np.mean(np.sum(np.abs(frames) ** 2, axis=2), axis=0) / D
    power = np.maximum(power, np.finfo(float).tiny)
    return power[:, None, None] * np.eye(D, dtype=np.complex128)


def write_vad(path, vad):
    """One line per frame: ``<frame index> <flag>``."""
    lines = [f"{i} {int(f)}" for i, f in enumerate(vad)]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vad(path):
    flags = []
    for n, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        idx, flag = line.split()
        if int(idx) != len(flags) or flag not in ("0", "1"):
            raise ConfigError(f"{path}:{n + 1}: malformed VAD line {line!r}")
        flags.append(int(flag))
    return np.array(flags, dtype=np.int8)
