"""
Synthetic acoustic scenes: a reverberant talker recorded by a small local
array plus one external microphone, in spherically isotropic noise.

Channel order is always the M local microphones (reference first) followed by
the external microphone.
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq
from scipy.signal import fftconvolve, lfilter

from .errors import GenerationError, GeometryError, MixError, ShapeError
from .metrics import (SNR_CEIL_DB, SNR_FLOOR_DB, band_powers,
                      intelligibility_weighted_snr, sii_band_weights)
from .spectral import StftConfig, bin_frequencies, synthesize, write_wav

__all__ = [
    "SceneSpec", "SceneOutput", "default_positions", "coherence",
    "coherence_matrix", "factor_coherence", "speech_shaped_psd",
    "generate_diffuse_noise", "impulse_responses", "simulate_source",
    "synthetic_speech", "mix_at_snr", "generate_components", "generate_scene",
    "write_scene",
]


def default_positions(external_distance=0.6, source_distance=0.75, azimuth_deg=-45.0):
    """Default layout: two ear pairs, external mic and talker.

    Local mics sit in two pairs (front/rear, 1.5 cm apart) 16 cm apart. The
    talker is ``source_distance`` from the reference mic at ``azimuth_deg``
    (negative = to the right); the external mic lies on the same line,
    ``external_distance`` from the reference. Returns (mics (M+1, 3), source (3,)).
    """
    local = np.array([
        [0.0, 0.08, 0.0],       # left front (reference)
        [-0.015, 0.08, 0.0],    # left rear
        [0.0, -0.08, 0.0],      # right front
        [-0.015, -0.08, 0.0],   # right rear
    ])
    az = np.deg2rad(azimuth_deg)
    u = np.array([np.cos(az), np.sin(az), 0.0])
    external = local[0] + external_distance * u
    source = local[0] + source_distance * u
    return np.vstack([local, external]), source


_DEFAULT_MICS, _DEFAULT_SOURCE = default_positions()


@dataclass
class SceneSpec:
    mic_positions: np.ndarray = field(default_factory=lambda: _DEFAULT_MICS.copy())
    source_position: np.ndarray = field(default_factory=lambda: _DEFAULT_SOURCE.copy())
    speed_of_sound: float = 343.0
    reverb_time: float = 0.62
    drr_db: float = 0.0
    noise_kind: str = "speech_shaped"
    input_snr_db: float = 0.0
    duration: float = 23.0
    sample_rate: int = 16000
    seed: int = 0
    has_external: bool = True

    def __post_init__(self):
        self.mic_positions = np.atleast_2d(np.asarray(self.mic_positions, dtype=np.float64))
        self.source_position = np.asarray(self.source_position, dtype=np.float64)
        if self.mic_positions.shape[1] != 3 or self.source_position.shape != (3,):
            raise GeometryError("positions must be 3-D coordinates")
        d = np.linalg.norm(self.mic_positions[:, None] - self.mic_positions[None], axis=-1)
        np.fill_diagonal(d, 1.0)
        if np.any(d <= 0):
            raise GeometryError("two microphones share a position")
        if self.reverb_time < 0:
            raise GeometryError(f"reverb_time must be >= 0, got {self.reverb_time}")
        if not np.isfinite(self.input_snr_db):
            raise GeometryError("input SNR must be finite")
        if self.noise_kind not in ("speech_shaped", "multi_talker"):
            raise GeometryError(f"unknown noise kind {self.noise_kind!r}")

    @property
    def channels(self):
        return len(self.mic_positions)

    @property
    def n_local(self):
        return self.channels - 1 if self.has_external else self.channels

    def describe(self):
        out = asdict(self)
        out["mic_positions"] = self.mic_positions.round(6).tolist()
        out["source_position"] = self.source_position.round(6).tolist()
        return out


@dataclass
class SceneOutput:
    speech_track: np.ndarray
    noise_track: np.ndarray
    mixed: np.ndarray
    metadata: dict = field(default_factory=dict)


# -- spatial coherence -------------------------------------------------------------


def coherence(d, omega, c=343.0):
    """Diffuse-field coherence sin(x)/x with x = d * omega / c."""
    x = np.asarray(d, dtype=np.float64) * np.asarray(omega, dtype=np.float64) / c
    # np.sinc is the normalized sinc sin(pi t)/(pi t)
    out = np.sinc(x / np.pi)
    return float(out) if out.ndim == 0 else out


def coherence_matrix(positions, omega, c=343.0):
    """(..., C, C) diffuse-field coherence matrices for angular frequencies ``omega``."""
    positions = np.asarray(positions, dtype=np.float64)
    d = np.linalg.norm(positions[:, None] - positions[None], axis=-1)
    omega = np.asarray(omega, dtype=np.float64)
    return coherence(d, omega[..., None, None], c)


def factor_coherence(gamma, floor=0.0):
    """Mixing matrix A with A A^H = gamma (EVD with eigenvalue flooring).

    Works on stacks (..., C, C); eigenvalues below ``floor * max`` are raised
    to that floor. The default only clips rounding negatives, so rank-deficient
    gamma (collocated mics) yields exactly dependent channels.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    w, U = np.linalg.eigh(gamma)
    top = w.max(axis=-1, keepdims=True)
    if np.any(w < -1e-6 * top):
        raise GenerationError("coherence matrix is indefinite beyond flooring")
    w = np.maximum(w, floor * top)
    return U * np.sqrt(w)[..., None, :]


def speech_shaped_psd(freqs):
    """Rough long-term speech spectrum: flat to 500 Hz, -12 dB/oct roll-off above
    about 1 kHz, high-pass below 100 Hz."""
    f = np.asarray(freqs, dtype=np.float64)
    hp = (f / 100.0) ** 4 / (1.0 + (f / 100.0) ** 4)
    lp = 1.0 / (1.0 + (f / 800.0) ** 2)
    return hp * lp


def generate_diffuse_noise(positions, duration, spectrum=None, seed=0, sample_rate=16000,
                           c=343.0, config=None):
    """Spherically isotropic noise at ``positions`` (C, 3), shape (C, samples).

    Per STFT bin, independent complex Gaussian coefficients are mixed by a
    factor of the sinc coherence matrix, shaped by ``spectrum`` (per-bin power,
    default speech-shaped) and overlap-added back to the time domain.
    """
    if duration < 1.0:
        raise GenerationError(f"duration must be >= 1 s, got {duration}")
    if config is None:
        config = StftConfig(sample_rate=sample_rate)
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    freqs = bin_frequencies(config)
    if spectrum is None:
        spectrum = speech_shaped_psd(freqs)
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.shape != freqs.shape or np.any(spectrum < 0):
        raise GenerationError("spectrum must be a nonnegative per-bin array")
    n = int(round(duration * config.sample_rate))
    # extra frames on both sides so the kept span is fully overlapped
    L = n // config.hop + 2 * (config.frame_length // config.hop) + 1
    rng = np.random.default_rng(seed)
    C = len(positions)
    G = (rng.standard_normal((L, len(freqs), C))
         + 1j * rng.standard_normal((L, len(freqs), C))) / np.sqrt(2.0)
    A = factor_coherence(coherence_matrix(positions, 2 * np.pi * freqs, c))
    spec = np.einsum("kij,lkj->lki", A, G) * np.sqrt(spectrum)[None, :, None]
    x = synthesize(spec, config)
    start = config.frame_length
    return x[:, start:start + n]


# -- source simulation -------------------------------------------------------------


def _fractional_delay(delay, taps=65):
    """Hann-windowed sinc interpolator; returns (filter, first sample index)."""
    half = taps // 2
    base = int(np.floor(delay))
    n = np.arange(base - half, base + half + 1)
    t = n - delay
    win = 0.5 + 0.5 * np.cos(np.pi * t / (half + 1))
    win[np.abs(t) > half + 1] = 0.0
    return np.sinc(t) * win, base - half


def impulse_responses(spec, seed=0):
    """Synthetic IRs (C, taps): 1/r direct path plus an exponential Gaussian tail.

    The tail of every channel has unit-normalized energy scaled to
    ``10 ** (-drr_db / 10)`` (the direct path energy at 1 m), decays by 60 dB
    over ``reverb_time`` and is drawn independently per channel.
    """
    fs = spec.sample_rate
    r = np.linalg.norm(spec.mic_positions - spec.source_position, axis=1)
    if np.any(r < 1e-3):
        raise GeometryError("source collocated with a microphone")
    delays = r / spec.speed_of_sound * fs
    tail_len = int(np.ceil(spec.reverb_time * fs))
    taps = int(np.ceil(delays.max())) + 40 + tail_len + 1
    h = np.zeros((spec.channels, taps))
    rng = np.random.default_rng(seed)
    tail_gain = 10.0 ** (-spec.drr_db / 20.0)
    for m in range(spec.channels):
        fd, first = _fractional_delay(delays[m])
        lo = max(first, 0)
        h[m, lo:first + len(fd)] += fd[lo - first:] / r[m]
        if tail_len:
            t = np.arange(tail_len) / fs
            env = np.exp(-3.0 * np.log(10.0) * t / spec.reverb_time)
            tail = rng.standard_normal(tail_len) * env
            tail *= tail_gain / np.linalg.norm(tail)
            start = int(np.floor(delays[m])) + 1
            h[m, start:start + tail_len] += tail
    return h


def simulate_source(dry_signal, spec, seed=0, irs=None):
    """Convolve a dry signal with the per-channel IRs; output (C, len(dry))."""
    dry = np.asarray(dry_signal, dtype=np.float64).ravel()
    if dry.size == 0:
        raise ShapeError("dry signal is empty")
    if irs is None:
        irs = impulse_responses(spec, seed)
    return fftconvolve(irs, dry[None, :], axes=1)[:, :len(dry)]


def synthetic_speech(duration, sample_rate=16000, seed=0, lead_silence=0.35):
    """Deterministic speech-like test signal.

    Phrases of voiced (formant-filtered glottal pulse trains) and unvoiced
    (shaped noise) syllables, separated by pauses of 0.6-1.2 s so the oracle
    VAD finds noise-only frames. The signal is silent for ``lead_silence`` s.
    """
    rng = np.random.default_rng(seed)
    fs = sample_rate
    n = int(round(duration * fs))
    out = np.zeros(n)
    vowels = [(730, 1090, 2440), (270, 2290, 3010), (530, 1840, 2480),
              (660, 1720, 2410), (300, 870, 2240), (640, 1190, 2390)]
    pos = int(lead_silence * fs)
    while pos < n:
        phrase_end = min(n, pos + int(rng.uniform(1.0, 2.5) * fs))
        while pos < phrase_end:
            syl = int(rng.uniform(0.12, 0.3) * fs)
            syl = min(syl, n - pos)
            if syl < 64:
                break
            t = np.arange(syl) / fs
            if rng.random() < 0.8:
                f0 = rng.uniform(180, 240) * (1 + 0.1 * np.sin(2 * np.pi * rng.uniform(1, 3) * t))
                phase = np.cumsum(f0) / fs
                src = np.diff(np.floor(phase), prepend=0.0)
                src = lfilter([1.0], [1.0, -0.9], src)
                for f, bw in zip(rng.choice(vowels), (80, 100, 150)):
                    r = np.exp(-np.pi * bw / fs)
                    src = lfilter([1 - r], [1, -2 * r * np.cos(2 * np.pi * f / fs), r * r], src)
                gain = 1.0
            else:
                src = lfilter([1.0, -0.95], [1.0], rng.standard_normal(syl))
                gain = 0.3
            env = np.sin(np.pi * t / t[-1]) ** 2 if syl > 1 else np.ones(1)
            seg = src * env
            seg *= gain * rng.uniform(0.5, 1.0) / max(np.abs(seg).max(), 1e-12)
            out[pos:pos + syl] += seg
            pos += syl + int(rng.uniform(0.02, 0.06) * fs)
        pos = phrase_end + int(rng.uniform(0.6, 1.2) * fs)
    peak = np.abs(out).max()
    return 0.5 * out / peak if peak > 0 else out


# -- mixing ------------------------------------------------------------------------


def mix_at_snr(speech, noise, target_snr_db, reference_channel=0, weights=None,
               sample_rate=16000):
    """Scale the noise by one broadband gain so the reference-channel iSNR hits
    ``target_snr_db`` (within 1e-6 dB), and add the components."""
    speech = np.atleast_2d(np.asarray(speech, dtype=np.float64))
    noise = np.atleast_2d(np.asarray(noise, dtype=np.float64))
    if speech.shape != noise.shape:
        raise ShapeError(f"speech {speech.shape} and noise {noise.shape} differ")
    if weights is None:
        weights = sii_band_weights()
    ps = band_powers(speech[reference_channel], weights, sample_rate)
    pn = band_powers(noise[reference_channel], weights, sample_rate)
    if not ps.sum() > 0 or not pn.sum() > 0:
        raise MixError("speech and noise must both be nonzero at the reference channel")
    if not SNR_FLOOR_DB < target_snr_db < SNR_CEIL_DB:
        raise MixError(f"target iSNR {target_snr_db} dB outside ({SNR_FLOOR_DB}, {SNR_CEIL_DB})")
    with np.errstate(divide="ignore", invalid="ignore"):
        base = 10.0 * np.log10(ps / pn)
    base = np.where(np.isnan(base), SNR_FLOOR_DB, base)

    def realized(gain_db):
        return float(np.dot(weights.weights, np.clip(base - gain_db, SNR_FLOOR_DB, SNR_CEIL_DB)))

    lo, hi = -400.0, 400.0
    if not realized(lo) > target_snr_db > realized(hi):
        raise MixError(f"target iSNR {target_snr_db} dB is not reachable by scaling the noise")
    gain_db = brentq(lambda g: realized(g) - target_snr_db, lo, hi, xtol=1e-12, rtol=1e-15)
    gain = 10.0 ** (gain_db / 20.0)
    noise_track = noise * gain
    meta = {
        "target_snr_db": float(target_snr_db),
        "noise_gain": gain,
        "channel_isnr_db": [intelligibility_weighted_snr(s, n, weights, sample_rate)
                            for s, n in zip(speech, noise_track)],
    }
    return SceneOutput(speech, noise_track, speech + noise_track, meta)


def _multi_talker_noise(spec, n, rng, config):
    """Diffuse babble bed plus a few point-source interferers at 1.5-4 m."""
    bed = generate_diffuse_noise(spec.mic_positions, n / spec.sample_rate,
                                 seed=rng.integers(2 ** 32), sample_rate=spec.sample_rate,
                                 c=spec.speed_of_sound, config=config)
    bed /= np.sqrt(np.mean(bed[0] ** 2))
    fs = spec.sample_rate
    talkers = np.zeros_like(bed)
    shape_b, shape_a = [1.0], [1.0, -0.9]
    for _ in range(6):
        az = rng.uniform(0, 2 * np.pi)
        pos = spec.mic_positions[0] + rng.uniform(1.5, 4.0) * np.array([np.cos(az), np.sin(az), 0.0])
        src = lfilter(shape_b, shape_a, rng.standard_normal(n))
        t = np.arange(n) / fs
        src *= (0.5 + 0.5 * np.sin(2 * np.pi * rng.uniform(3, 5) * t + rng.uniform(0, 6.3))) ** 2
        r = np.linalg.norm(spec.mic_positions - pos, axis=1)
        for m in range(spec.channels):
            fd, first = _fractional_delay(r[m] / spec.speed_of_sound * fs)
            img = np.convolve(src, fd)[:n] / r[m]
            shift = max(first, 0)
            talkers[m, shift:] += img[:n - shift]
    talkers /= np.sqrt(np.mean(talkers[0] ** 2))
    return bed + 0.5 * talkers


def generate_components(spec, config=None):
    """Unscaled (speech image, noise) tracks, each (C, samples), plus the dry signal."""
    if config is None:
        config = StftConfig(sample_rate=spec.sample_rate)
    ss = np.random.SeedSequence(spec.seed)
    s_speech, s_ir, s_noise = (np.random.default_rng(s) for s in ss.spawn(3))
    n = int(round(spec.duration * spec.sample_rate))
    dry = synthetic_speech(spec.duration, spec.sample_rate, seed=s_speech.integers(2 ** 32))
    speech = simulate_source(dry, spec, irs=impulse_responses(spec, s_ir.integers(2 ** 32)))
    if spec.noise_kind == "speech_shaped":
        noise = generate_diffuse_noise(spec.mic_positions, spec.duration,
                                       seed=s_noise.integers(2 ** 32),
                                       sample_rate=spec.sample_rate,
                                       c=spec.speed_of_sound, config=config)
    else:
        noise = _multi_talker_noise(spec, n, s_noise, config)
    return speech, noise, dry


def generate_scene(spec, config=None, weights=None):
    """Full scene at ``spec.input_snr_db`` with separate speech/noise tracks."""
    speech, noise, _ = generate_components(spec, config)
    out = mix_at_snr(speech, noise, spec.input_snr_db, 0, weights, spec.sample_rate)
    out.metadata["seed"] = spec.seed
    out.metadata["geometry"] = spec.describe()
    if spec.has_external:
        adv = out.metadata["channel_isnr_db"][-1] - out.metadata["channel_isnr_db"][0]
        out.metadata["external_snr_advantage_db"] = adv
    return out


def write_scene(scene, directory, sample_rate=16000):
    """speech.wav, noise.wav, mixed.wav (float32) and metadata.txt."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_wav(directory / "speech.wav", scene.speech_track, sample_rate)
    write_wav(directory / "noise.wav", scene.noise_track, sample_rate)
    write_wav(directory / "mixed.wav", scene.mixed, sample_rate)
    lines = [f"{k} = {v}" for k, v in sorted(_flatten(scene.metadata).items())]
    (directory / "metadata.txt").write_text("\n".join(lines) + "\n")


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out
