"""
Online processing loop and experiment sweep.

Per frame: update the gated covariance trackers, estimate the RTF with every
selected estimator, build the M-channel MVDR from the current noise covariance
and apply it to the mixture and, with the same weights, to the oracle speech
and noise components.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import beamforming, estimators as est
from .errors import ConfigError
from .metrics import (MetricsReport, batch_hermitian_angle, intelligibility_weighted_snr,
                      reference_rtf, sii_band_weights)
from .scenegen import generate_components, mix_at_snr
from .spectral import analyze, edge_frame_mask, synthesize
from .tracking import (NOISE, SPEECH, CovarianceTracker, identity_init, long_term_init,
                       oracle_vad, smoothing_factor)

log = logging.getLogger(__name__)

__all__ = ["OnlineResult", "PointResult", "run_online", "evaluation_bins", "prepare_scene",
           "evaluate_point", "synthetic_scene", "sweep"]


@dataclass
class OnlineResult:
    """Outputs of one online pass; per-estimator arrays are keyed by name."""

    angles: dict = field(default_factory=dict)        # (frames, bins) radians
    output: dict = field(default_factory=dict)        # (frames, bins) Z = w^H y
    speech_out: dict = field(default_factory=dict)    # (frames, bins) w^H x
    noise_out: dict = field(default_factory=dict)     # (frames, bins) w^H n
    failures: dict = field(default_factory=dict)      # count of held (frame, bin) RTFs
    distortion: dict = field(default_factory=dict)    # max |w^H h - 1| over the run
    rtfs: dict = field(default_factory=dict)          # (frames, bins, M), if kept


def _initial(Y, vad, gate, mode):
    if mode == "long_term":
        return long_term_init(Y, vad, gate)
    if mode == "identity":
        return identity_init(Y)
    raise ConfigError(f"unknown init mode {mode!r}")


def run_online(Y, vad, n_local, estimators, alpha_y, alpha_n, h_ref=None,
               speech=None, noise=None, loading=beamforming.DEFAULT_LOADING,
               init_mode="long_term", keep_rtfs=False, pm_init="ones"):
    """Run the online estimators and MVDR over a (frames, bins, C) mixture.

    The first ``n_local`` channels form the local array; a further channel, if
    present, is the external microphone (required by ``"SC"``).
    """
    Y = np.ascontiguousarray(Y, dtype=np.complex128)
    L, K, C = Y.shape
    M = n_local
    unknown = set(estimators) - set(est.ESTIMATORS)
    if unknown:
        raise ConfigError(f"unknown estimators: {sorted(unknown)}")
    if "SC" in estimators and C < M + 1:
        raise ConfigError("estimator SC needs an external microphone channel")
    vad = np.asarray(vad).astype(np.int8)

    # the local Ry shares update instants and alpha with the extended tracker,
    # so it is exactly the upper-left block of the extended matrix
    ty = CovarianceTracker(_initial(Y[:, :, :min(C, M + 1)], vad, SPEECH, init_mode),
                           alpha_y, SPEECH)
    tn = CovarianceTracker(_initial(Y[:, :, :M], vad, NOISE, init_mode), alpha_n, NOISE)

    res = OnlineResult()
    e1 = np.zeros((K, M), dtype=np.complex128)
    e1[:, 0] = 1.0
    held = {name: e1.copy() for name in estimators}
    weights = {name: e1.copy() for name in estimators}
    pm_state = {name: est.initial_pm_state(M, K, pm_init) for name in ("PM-CS", "PM-CW")}
    for name in estimators:
        res.failures[name] = 0
        res.distortion[name] = 0.0
        res.output[name] = np.empty((L, K), dtype=np.complex128)
        if speech is not None:
            res.speech_out[name] = np.empty((L, K), dtype=np.complex128)
            res.noise_out[name] = np.empty((L, K), dtype=np.complex128)
        if h_ref is not None:
            res.angles[name] = np.empty((L, K))
        if keep_rtfs:
            res.rtfs[name] = np.empty((L, K, M), dtype=np.complex128)

    for l in range(L):
        y = Y[l]
        ty.update(y[:, :ty.dim], vad[l])
        tn.update(y[:, :M], vad[l])
        Ry = ty.R[:, :M, :M]
        Rn = tn.R
        for name in estimators:
            if name == "CS":
                H, ok = est.batch_cs(Ry, Rn)
            elif name == "R1":
                H, ok = est.batch_r1(Ry, Rn)
            elif name == "CW":
                H, ok = est.batch_cw(Ry, Rn)
            elif name == "PM-CS":
                H, ok, pm_state[name] = est.batch_pm_cs(Ry, Rn, pm_state[name])
            elif name == "PM-CW":
                H, ok, pm_state[name] = est.batch_pm_cw(Ry, Rn, pm_state[name])
            else:
                H, ok = est.batch_sc(ty.R)
            h = held[name]
            h[ok] = H[ok]
            res.failures[name] += int(K - ok.sum())
            W, okw = beamforming.batch_mvdr(Rn, h, loading)
            w = weights[name]
            w[okw] = W[okw]
            wc = w.conj()
            # measured on the weights actually applied, held bins included
            dist = np.abs(np.einsum("ki,ki->k", wc, h) - 1.0).max()
            res.distortion[name] = max(res.distortion[name], float(dist))
            res.output[name][l] = np.einsum("km,km->k", wc, y[:, :M])
            if speech is not None:
                res.speech_out[name][l] = np.einsum("km,km->k", wc, speech[l, :, :M])
                res.noise_out[name][l] = np.einsum("km,km->k", wc, noise[l, :, :M])
            if h_ref is not None:
                res.angles[name][l] = batch_hermitian_angle(h_ref, h)
            if keep_rtfs:
                res.rtfs[name][l] = h
    for name, n in res.failures.items():
        if n:
            log.info("%s: held previous RTF on %d (frame, bin) pairs", name, n)
    return res


def evaluation_bins(bins):
    """Bins used for angle averages: everything except DC and Nyquist."""
    mask = np.ones(bins, dtype=bool)
    mask[0] = mask[-1] = False
    return mask


@dataclass
class PreparedScene:
    speech: np.ndarray          # (C, samples) unscaled speech image
    noise: np.ndarray           # (C, samples) unscaled noise
    vad: np.ndarray
    h_ref: np.ndarray           # (bins, M)
    X: np.ndarray               # STFT of speech
    n_local: int
    name: str = "synthetic"


def prepare_scene(speech, noise, n_local, stft, vad_threshold_db=40.0, name="synthetic"):
    """Oracle VAD and reference RTF for a pair of component tracks."""
    X = analyze(speech, stft)
    vad = oracle_vad(speech[0], stft, vad_threshold_db)
    h_ref = reference_rtf(X[:, :, :n_local], vad)
    return PreparedScene(speech, noise, vad, h_ref, X, n_local, name)


@dataclass
class PointResult:
    """Metrics rows, per-frame angle traces (frames,), enhanced signals and,
    if requested, the RTF estimates (frames, bins, M) of one grid point."""

    rows: list
    trace: dict
    enhanced: dict
    rtfs: dict = field(default_factory=dict)


def evaluate_point(scene, snr_db, tau_y, tau_n, estimators, stft, loading,
                   init_mode="long_term", weights=None, keep_rtfs=False, pm_init="ones"):
    """One grid point: mix, run online, compute metrics. Returns a PointResult."""
    if weights is None:
        weights = sii_band_weights()
    n = scene.speech.shape[1]
    mix = mix_at_snr(scene.speech, scene.noise, snr_db, 0, weights, stft.sample_rate)
    N = analyze(mix.noise_track, stft)
    Y = analyze(mix.mixed, stft)
    res = run_online(Y, scene.vad, scene.n_local, estimators,
                     smoothing_factor(tau_y, stft), smoothing_factor(tau_n, stft),
                     h_ref=scene.h_ref, speech=scene.X, noise=N, loading=loading,
                     init_mode=init_mode, keep_rtfs=keep_rtfs, pm_init=pm_init)
    frames = edge_frame_mask(Y.shape[0])
    bins = evaluation_bins(Y.shape[1])
    # input components through the passthrough filter, so w = e1 gives 0 dB
    x_in = synthesize(scene.X[:, :, 0], stft, n)[0]
    n_in = synthesize(N[:, :, 0], stft, n)[0]
    isnr_in = intelligibility_weighted_snr(x_in, n_in, weights, stft.sample_rate)
    rows, trace, enhanced = [], {}, {}
    for name in estimators:
        ang = res.angles[name]
        x_out = synthesize(res.speech_out[name], stft, n)[0]
        n_out = synthesize(res.noise_out[name], stft, n)[0]
        rows.append({
            "scene": scene.name,
            "estimator": name,
            "tau_y": tau_y,
            "snr_db": snr_db,
            "mean_angle": float(ang[np.ix_(frames, bins)].mean()),
            "input_isnr": isnr_in,
            "output_isnr": intelligibility_weighted_snr(x_out, n_out, weights, stft.sample_rate),
            "failed_bins": res.failures[name],
            "max_distortion": res.distortion[name],
        })
        trace[name] = ang[:, bins].mean(axis=1)
        enhanced[name] = synthesize(res.output[name], stft, n)[0]
    return PointResult(rows, trace, enhanced, res.rtfs)


def synthetic_scene(spec, stft, vad_threshold_db=40.0):
    speech, noise, _ = generate_components(spec, stft)
    return prepare_scene(speech, noise, spec.n_local, stft, vad_threshold_db)


def sweep(scene, tau_grid, snr_grid, tau_n, estimators, stft, loading,
          init_mode="long_term", on_point=None, keep_rtfs=False, pm_init="ones"):
    """Evaluate every (tau_y, SNR) pair; returns a MetricsReport.

    ``on_point(tau_y, snr_db, point)`` is called after each grid point with
    its PointResult, e.g. to write outputs.
    """
    report = MetricsReport()
    for tau in tau_grid:
        for snr in snr_grid:
            point = evaluate_point(scene, snr, tau, tau_n, estimators, stft, loading,
                                   init_mode, keep_rtfs=keep_rtfs, pm_init=pm_init)
            for r in point.rows:
                report.add(**r)
            report.traces[(tau, snr)] = point.trace
            if on_point is not None:
                on_point(tau, snr, point)
    return report
