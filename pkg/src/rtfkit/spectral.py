"""
STFT analysis/synthesis with a square-root Hann window.

Layout conventions used throughout the package:

    time signals      (channels, samples), float64
    spectral tensors  (frames, bins, channels), complex128

Frame ``l`` covers samples ``[l * hop, l * hop + frame_length)``; there is no
padding, so the first and last frames only partly overlap with neighbours
(edge frames). The DFT uses orthonormal scaling (``norm="ortho"``) in both
directions, which makes each frame transform unitary.
"""

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import ConfigError, ShapeError

__all__ = [
    "StftConfig", "sqrt_hann", "analyze", "synthesize", "n_frames",
    "edge_frame_mask", "bin_frequencies", "read_wav", "write_wav",
]


def sqrt_hann(length):
    """Periodic square-root Hann window of even ``length``.

    The squared window sums to one over two copies shifted by ``length / 2``.
    """
    if not isinstance(length, (int, np.integer)) or length < 2 or length % 2:
        raise ConfigError(f"window length must be an even integer >= 2, got {length!r}")
    n = np.arange(length)
    return np.sqrt(0.5 - 0.5 * np.cos(2.0 * np.pi * n / length))


@dataclass(frozen=True)
class StftConfig:
    frame_length: int = 512
    hop: int = None
    sample_rate: int = 16000
    window: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.hop is None:
            object.__setattr__(self, "hop", self.frame_length // 2)
        if self.hop <= 0 or self.frame_length % self.hop:
            raise ConfigError(
                f"hop ({self.hop}) must be positive and divide frame_length ({self.frame_length})")
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be > 0, got {self.sample_rate}")
        window = sqrt_hann(self.frame_length)
        # sqrt-Hann OLA of the squared window sums to frame_length / (2 * hop);
        # rescale so analysis followed by synthesis is the identity for any hop.
        window = window * np.sqrt(2.0 * self.hop / self.frame_length)
        window.flags.writeable = False
        object.__setattr__(self, "window", window)

    @property
    def bins(self):
        return self.frame_length // 2 + 1


def n_frames(n_samples, config):
    if n_samples < config.frame_length:
        return 0
    return 1 + (n_samples - config.frame_length) // config.hop


def bin_frequencies(config):
    """Center frequency of every one-sided bin in Hz."""
    return np.arange(config.bins) * config.sample_rate / config.frame_length


def edge_frame_mask(frames):
    """Boolean mask that is False for the first and last (edge) frames."""
    mask = np.ones(frames, dtype=bool)
    mask[:1] = False
    mask[-1:] = False
    return mask


def _as_channels(signal):
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim == 1:
        signal = signal[None, :]
    if signal.ndim != 2:
        raise ShapeError(f"signal must be 1-D or (channels, samples), got shape {signal.shape}")
    return signal


def analyze(signal, config=None):
    """Forward STFT of a (channels, samples) array.

    Returns a complex array of shape (frames, bins, channels). A 1-D input is
    treated as a single channel. Inputs shorter than one frame give an empty
    tensor.
    """
    if config is None:
        config = StftConfig()
    if isinstance(signal, (list, tuple)):
        lengths = {len(np.atleast_1d(s)) for s in signal}
        if len(lengths) > 1:
            raise ShapeError(f"channel lengths differ: {sorted(lengths)}")
    x = _as_channels(signal)
    channels, n = x.shape
    L = n_frames(n, config)
    if L == 0:
        return np.zeros((0, config.bins, channels), dtype=np.complex128)
    idx = np.arange(L)[:, None] * config.hop + np.arange(config.frame_length)[None, :]
    # (channels, frames, frame_length)
    frames = x[:, idx] * config.window
    spec = np.fft.rfft(frames, axis=-1, norm="ortho")
    return np.ascontiguousarray(spec.transpose(1, 2, 0))


def synthesize(tensor, config=None, length=None):
    """Inverse STFT with synthesis windowing and overlap-add.

    ``length`` sets the number of output samples; by default the span covered
    by the frames. Samples not covered by any frame are zero.
    """
    if config is None:
        config = StftConfig()
    tensor = np.asarray(tensor)
    if tensor.ndim == 2:
        tensor = tensor[:, :, None]
    if tensor.ndim != 3 or tensor.shape[1] != config.bins:
        raise ShapeError(
            f"tensor must be (frames, {config.bins}, channels), got shape {tensor.shape}")
    L, _, channels = tensor.shape
    span = 0 if L == 0 else (L - 1) * config.hop + config.frame_length
    if length is None:
        length = span
    out = np.zeros((channels, max(length, span)))
    if L:
        frames = np.fft.irfft(tensor.transpose(2, 0, 1), n=config.frame_length,
                              axis=-1, norm="ortho") * config.window
        ratio = config.frame_length // config.hop
        # frames l, l + ratio, ... never overlap; add each residue class at once
        for r in range(ratio):
            sub = frames[:, r::ratio, :]
            start = r * config.hop
            stop = start + sub.shape[1] * config.frame_length
            out[:, start:stop] += sub.reshape(channels, -1)
    return out[:, :length]


def read_wav(path, expected_rate=16000):
    """Read a WAV file as float64 (channels, samples) in [-1, 1] units."""
    path = Path(path)
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read WAV file {path}: {exc}") from exc
    if expected_rate is not None and rate != expected_rate:
        raise ConfigError(f"{path}: sample rate {rate} Hz, expected {expected_rate} Hz "
                          "(resampling is not supported)")
    if data.dtype == np.int16:
        data = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        data = data.astype(np.float64) / 2147483648.0
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise ConfigError(f"{path}: unsupported sample format {data.dtype}")
    if data.ndim == 1:
        data = data[:, None]
    return np.ascontiguousarray(data.T), rate


def write_wav(path, signal, sample_rate=16000, pcm16=False):
    """Write a (channels, samples) array as 32-bit float or 16-bit PCM WAV."""
    x = _as_channels(signal).T
    if pcm16:
        data = np.clip(np.round(x * 32768.0), -32768, 32767).astype(np.int16)
    else:
        data = x.astype(np.float32)
    if data.shape[1] == 1:
        data = data[:, 0]
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, sample_rate, data)
