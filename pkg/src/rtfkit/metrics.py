"""
Evaluation metrics: Hermitian angle, oracle reference RTF, intelligibility-
weighted SNR (iSNR) and the SNR improvement of a beamformer.

The iSNR groups the power spectrum of the whole signal into one-third octave
bands (160 Hz - 8 kHz), clamps every band SNR to [-15, 30] dB and combines
them with the SII band-importance weights (ANSI S3.5-1997, average speech).
"""

import csv
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import DegenerateError, ShapeError
from .linalg import hermitian_evd
from .estimators import normalize_rtf

__all__ = [
    "BandWeights", "sii_band_weights", "flat_band_weights", "hermitian_angle",
    "batch_hermitian_angle", "reference_rtf", "band_powers",
    "intelligibility_weighted_snr", "snr_improvement", "MetricsReport",
    "SNR_FLOOR_DB", "SNR_CEIL_DB", "write_metrics_csv", "read_metrics_csv",
    "write_trace_csv", "read_trace_csv", "save_rtfs", "load_rtfs",
]

SNR_FLOOR_DB = -15.0
SNR_CEIL_DB = 30.0


@dataclass(frozen=True)
class BandWeights:
    centers: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.centers, dtype=np.float64)
        w = np.asarray(self.weights, dtype=np.float64)
        if c.shape != w.shape or c.ndim != 1 or np.any(w < 0) or w.sum() <= 0:
            raise ValueError("band centers and nonnegative weights must be equal-length 1-D arrays")
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "weights", w / w.sum())

    def edges(self, sample_rate):
        """(lower, upper) band edges in Hz, capped at Nyquist."""
        lo = self.centers * 2.0 ** (-1 / 6)
        hi = np.minimum(self.centers * 2.0 ** (1 / 6), sample_rate / 2)
        return lo, hi


def sii_band_weights():
    text = resources.files("rtfkit").joinpath("data/sii_third_octave.csv").read_text()
    rows = [r for r in csv.reader(line for line in text.splitlines()
                                  if not line.startswith("#"))][1:]
    centers, weights = zip(*((float(a), float(b)) for a, b in rows))
    return BandWeights(np.array(centers), np.array(weights))


def flat_band_weights():
    """Same bands as :func:`sii_band_weights` with equal importance."""
    sii = sii_band_weights()
    return BandWeights(sii.centers, np.ones_like(sii.weights))


def hermitian_angle(h_ref, h_est):
    """Angle in [0, pi/2] between two complex vectors, blind to scale and phase.

    Evaluated as atan2(|perpendicular part|, |inner product|), which equals
    arccos(|a^H b| / (|a| |b|)) but stays accurate for tiny angles.
    """
    a = np.asarray(h_ref, dtype=np.complex128)
    b = np.asarray(h_est, dtype=np.complex128)
    if a.shape != b.shape:
        raise ShapeError(f"vector shapes differ: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise DegenerateError("Hermitian angle is undefined for a zero vector")
    a = a / na
    b = b / nb
    inner = np.vdot(a, b)
    perp = np.linalg.norm(b - inner * a)
    return float(np.clip(np.arctan2(perp, abs(inner)), 0.0, np.pi / 2))


def batch_hermitian_angle(H_ref, H_est):
    """Row-wise Hermitian angle for (..., M) stacks; zero rows give nan."""
    a = np.asarray(H_ref, dtype=np.complex128)
    b = np.asarray(H_est, dtype=np.complex128)
    na = np.linalg.norm(a, axis=-1, keepdims=True)
    nb = np.linalg.norm(b, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = a / na
        b = b / nb
        inner = np.sum(a.conj() * b, axis=-1)
        perp = np.linalg.norm(b - inner[..., None] * a, axis=-1)
        return np.clip(np.arctan2(perp, np.abs(inner)), 0.0, np.pi / 2)


def reference_rtf(oracle_speech, vad):
    """Per-bin principal eigenvector of the speech covariance over VAD=1 frames.

    ``oracle_speech`` is (frames, bins, M); returns (bins, M) RTF vectors.
    """
    X = np.asarray(oracle_speech)
    vad = np.asarray(vad)
    if X.ndim != 3 or len(vad) != X.shape[0]:
        raise ShapeError(f"need (frames, bins, M) and one VAD flag per frame, got {X.shape}, {vad.shape}")
    sel = X[vad == 1]
    if len(sel) == 0:
        raise DegenerateError("no speech frames available for the reference RTF")
    Rx = np.einsum("lki,lkj->kij", sel, sel.conj()) / len(sel)
    out = np.empty(X.shape[1:], dtype=np.complex128)
    for k in range(X.shape[1]):
        out[k] = normalize_rtf(hermitian_evd(Rx[k]).principal)
    return out


def band_powers(signal, weights, sample_rate=16000):
    """Power of ``signal`` in each band of ``weights`` (FFT bin grouping)."""
    x = np.asarray(signal, dtype=np.float64).ravel()
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1.0 / sample_rate)
    lo, hi = weights.edges(sample_rate)
    # cumulative sums make each band a difference of two lookups
    csum = np.concatenate([[0.0], np.cumsum(spec)])
    i0 = np.searchsorted(freqs, lo, side="left")
    i1 = np.searchsorted(freqs, hi, side="left")
    i1 = np.where(hi >= sample_rate / 2, len(freqs), i1)
    return csum[i1] - csum[i0]


def intelligibility_weighted_snr(speech, noise, weights=None, sample_rate=16000):
    """Band-importance weighted mean of clamped band SNRs, in dB."""
    if weights is None:
        weights = sii_band_weights()
    speech = np.asarray(speech, dtype=np.float64).ravel()
    noise = np.asarray(noise, dtype=np.float64).ravel()
    if speech.shape != noise.shape:
        raise ShapeError(f"speech and noise lengths differ: {speech.shape} vs {noise.shape}")
    ps = band_powers(speech, weights, sample_rate)
    pn = band_powers(noise, weights, sample_rate)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = 10.0 * np.log10(ps / pn)
    # 0/0 bands carry no speech; x/0 bands saturate high
    snr = np.where(np.isnan(snr), SNR_FLOOR_DB, snr)
    snr = np.clip(snr, SNR_FLOOR_DB, SNR_CEIL_DB)
    return float(np.dot(weights.weights, snr))


def snr_improvement(in_speech, in_noise, out_speech, out_noise, weights=None,
                    sample_rate=16000):
    """iSNR of the filtered components minus iSNR at the reference input."""
    before = intelligibility_weighted_snr(in_speech, in_noise, weights, sample_rate)
    after = intelligibility_weighted_snr(out_speech, out_noise, weights, sample_rate)
    return after - before


@dataclass
class MetricsReport:
    """Aggregate metrics of one experiment grid.

    ``rows`` holds one dict per (scene, estimator, tau_y, input SNR) with keys
    ``scene, estimator, tau_y, snr_db, mean_angle, input_isnr, output_isnr,
    delta_snr, failed_bins``. ``traces`` maps (tau_y, snr_db) to a dict of
    per-frame, frequency-averaged angles per estimator.
    """

    rows: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)

    def add(self, **row):
        row["delta_snr"] = row["output_isnr"] - row["input_isnr"]
        self.rows.append(row)

    def select(self, **match):
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]

    def value(self, key, **match):
        rows = self.select(**match)
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} rows match {match}")
        return rows[0][key]

    @property
    def estimators(self):
        return list(dict.fromkeys(r["estimator"] for r in self.rows))

    @property
    def tau_grid(self):
        return sorted({r["tau_y"] for r in self.rows})

    @property
    def snr_grid(self):
        return sorted({r["snr_db"] for r in self.rows})


# -- CSV interchange ------------------------------------------------------------------

CSV_VERSION = 1
METRICS_COLUMNS = ("scene", "estimator", "tau_y", "snr_db", "mean_angle", "input_isnr",
                   "output_isnr", "delta_snr", "failed_bins", "max_distortion")
_INT_COLUMNS = {"failed_bins"}
_STR_COLUMNS = {"scene", "estimator"}


def _fmt(x):
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_metrics_csv(report, path):
    """Aggregate rows with a versioned ``# rtfkit-metrics vN`` header line."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# rtfkit-metrics v{CSV_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for r in report.rows:
            w.writerow([_fmt(r.get(c, "")) for c in METRICS_COLUMNS])


def _read_versioned(path, kind):
    with open(path, newline="", encoding="utf-8") as fh:
        head = fh.readline().strip()
        if not head.startswith(f"# rtfkit-{kind} v"):
            raise ValueError(f"{path}: missing '# rtfkit-{kind} vN' header")
        version = int(head.rsplit("v", 1)[1])
        if version > CSV_VERSION:
            raise ValueError(f"{path}: unsupported {kind} CSV version {version}")
        return list(csv.DictReader(fh))


def read_metrics_csv(path):
    report = MetricsReport()
    for rec in _read_versioned(path, "metrics"):
        row = {}
        for k, v in rec.items():
            if k in _STR_COLUMNS:
                row[k] = v
            elif v == "":
                continue
            elif k in _INT_COLUMNS:
                row[k] = int(v)
            else:
                row[k] = float(v)
        report.rows.append(row)
    return report


def write_trace_csv(trace, path):
    """Per-frame, frequency-averaged angles: columns frame, <estimator>..."""
    names = list(trace)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# rtfkit-trace v{CSV_VERSION}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", *names])
        for l, vals in enumerate(zip(*(trace[n] for n in names))):
            w.writerow([l, *map(_fmt, vals)])


def read_trace_csv(path):
    recs = _read_versioned(path, "trace")
    if not recs:
        return {}
    names = [k for k in recs[0] if k != "frame"]
    return {n: np.array([float(r[n]) for r in recs]) for n in names}


def save_rtfs(path, rtfs):
    """Binary dump of RTF estimates: one (frames, bins, M) array per estimator."""
    np.savez(path, **{name.replace("-", "_"): h for name, h in rtfs.items()},
             names=np.array(list(rtfs)))


def load_rtfs(path):
    with np.load(path) as data:
        return {str(n): data[str(n).replace("-", "_")] for n in data["names"]}
