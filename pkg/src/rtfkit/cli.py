"""
Command line batch runner.

    rtfkit generate --config exp.yaml --out scene/   # write one synthetic scene
    rtfkit run      --config exp.yaml --out results/  # full estimator x tau x SNR sweep
    rtfkit plot     --out results/                    # re-render plots from the CSVs

Exit codes: 0 success, 2 invalid configuration, 3 I/O failure, 4 runtime failure.
"""

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__, kernels
from .config import ConfigValidationError, load_config
from .errors import ConfigError, RtfkitError, ShapeError
from .metrics import (read_metrics_csv, read_trace_csv, save_rtfs, write_metrics_csv,
                      write_trace_csv)
from .pipeline import prepare_scene, sweep
from .plots import emit_plots, snr_tag, tau_tag
from .scenegen import SceneSpec, default_positions, generate_components, generate_scene, write_scene
from .spectral import StftConfig, read_wav, write_wav

log = logging.getLogger("rtfkit")

__all__ = ["main", "run_experiment", "build_scene", "EXIT_OK", "EXIT_CONFIG", "EXIT_IO",
           "EXIT_RUNTIME"]

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_RUNTIME = 0, 2, 3, 4
N_LOCAL_DEFAULT = 4


def stft_config(cfg):
    return StftConfig(cfg.frame_length, cfg.hop, cfg.sample_rate)


def scene_spec(cfg, snr_db=0.0):
    mics, src = default_positions(cfg.external_distance, cfg.source_distance)
    if not cfg.external_mic:
        mics = mics[:N_LOCAL_DEFAULT]
    return SceneSpec(mic_positions=mics, source_position=src, reverb_time=cfg.reverb_time,
                     drr_db=cfg.drr_db, noise_kind=cfg.noise_kind, input_snr_db=snr_db,
                     duration=cfg.duration, sample_rate=cfg.sample_rate, seed=cfg.seed,
                     has_external=cfg.external_mic)


def build_scene(cfg):
    """Prepared scene from the config: synthetic, or speech.wav + noise.wav in a directory."""
    stft = stft_config(cfg)
    if cfg.synthetic:
        spec = scene_spec(cfg)
        speech, noise, _ = generate_components(spec, stft)
        return prepare_scene(speech, noise, spec.n_local, stft, cfg.vad_threshold_db)
    d = Path(cfg.scene)
    if not d.is_dir():
        raise OSError(f"scene directory not found: {d}")
    speech, _ = read_wav(d / "speech.wav", cfg.sample_rate)
    noise, _ = read_wav(d / "noise.wav", cfg.sample_rate)
    if speech.shape != noise.shape:
        raise ShapeError(f"{d}: speech {speech.shape} and noise {noise.shape} tracks differ")
    n_local = speech.shape[0] - (1 if cfg.external_mic else 0)
    if n_local < 1:
        raise ConfigError(f"scene: {d} has {speech.shape[0]} channel(s), too few for "
                          f"external_mic={cfg.external_mic}")
    return prepare_scene(speech, noise, n_local, stft, cfg.vad_threshold_db, name=d.name)


def _atomic_write(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".part")
    write(tmp)
    os.replace(tmp, path)


def _manifest(cfg, scene, extra):
    items = {
        "rtfkit_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "n_local": scene.n_local,
        "frames": scene.X.shape[0],
        "samples": scene.speech.shape[1],
        "first_speech_frame": int(np.argmax(scene.vad)) if scene.vad.any() else -1,
    }
    items.update({f"config.{k}": json.dumps(v) for k, v in cfg.to_dict().items()})
    items.update(extra)
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def run_experiment(cfg, out_dir=None, emit=True):
    """Sweep the config's grid and write all artifacts; returns the MetricsReport."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stft = stft_config(cfg)
    t0 = time.perf_counter()
    scene = build_scene(cfg)
    if "SC" in cfg.estimators and scene.speech.shape[0] <= scene.n_local:
        raise ConfigError("estimators: SC requires an external microphone channel")
    if not scene.vad.any():
        raise RtfkitError("oracle VAD found no speech frame")
    log.info("scene ready: %d channels, %d frames (%.1f s)", scene.speech.shape[0],
             scene.X.shape[0], time.perf_counter() - t0)

    def on_point(tau, snr, point):
        tag = f"{tau_tag(tau)}_{snr_tag(snr)}"
        _atomic_write(out / "traces" / f"trace_{tag}.csv",
                      lambda p: write_trace_csv(point.trace, p))
        if cfg.write_audio:
            for name, sig in point.enhanced.items():
                _atomic_write(out / "audio" / tag / f"{name}.wav",
                              lambda p: write_wav(p, sig, cfg.sample_rate))
        if cfg.dump_rtfs:
            def dump(p):
                with open(p, "wb") as fh:
                    save_rtfs(fh, point.rtfs)
            _atomic_write(out / "rtfs" / f"rtfs_{tag}.npz", dump)
        for r in point.rows:
            log.info("tau_y=%g snr=%+g %-6s angle=%.3f rad  out iSNR=%.2f dB  held=%d",
                     tau, snr, r["estimator"], r["mean_angle"], r["output_isnr"],
                     r["failed_bins"])

    report = sweep(scene, cfg.tau_y, cfg.snr_db, cfg.tau_n, cfg.estimators, stft,
                   cfg.diagonal_loading, cfg.init_mode, on_point, keep_rtfs=cfg.dump_rtfs,
                   pm_init=cfg.pm_init)
    _atomic_write(out / "metrics.csv", lambda p: write_metrics_csv(report, p))
    if emit:
        emit_plots(report, out / "plots", trace_key=(min(cfg.tau_y), 0.0))
    _atomic_write(out / "manifest.txt", lambda p: Path(p).write_text(_manifest(cfg, scene, {
        "grid_points": len(cfg.tau_y) * len(cfg.snr_db),
        "metrics_rows": len(report.rows),
    })))
    log.info("done in %.1f s, %d rows -> %s", time.perf_counter() - t0, len(report.rows), out)
    return report


def load_report(out_dir):
    """MetricsReport with traces, read back from a run directory."""
    out = Path(out_dir)
    report = read_metrics_csv(out / "metrics.csv")
    for tau in report.tau_grid:
        for snr in report.snr_grid:
            path = out / "traces" / f"trace_{tau_tag(tau)}_{snr_tag(snr)}.csv"
            if path.exists():
                report.traces[(tau, snr)] = read_trace_csv(path)
    return report


def _parser():
    p = argparse.ArgumentParser(prog="rtfkit", description="RTF estimation experiments")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    for name, doc in (("generate", "write a synthetic scene (speech, noise, mixed WAVs)"),
                      ("run", "run the experiment grid"),
                      ("plot", "re-render plots from a run directory")):
        s = sub.add_parser(name, help=doc)
        s.add_argument("--config", type=Path, required=name != "plot",
                       help="YAML config file")
        s.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
        if name != "plot":
            s.add_argument("--seed", type=int, help="override the config seed")
            s.add_argument("--estimators", help="comma-separated subset, e.g. CS,SC")
        if name == "generate":
            s.add_argument("--snr", type=float, default=0.0,
                           help="reference-channel iSNR of the mixture [dB]")
    return p


def _load(args):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "estimators", None):
        overrides["estimators"] = [e.strip() for e in args.estimators.split(",") if e.strip()]
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    return load_config(args.config, overrides)


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "plot":
            if args.out is None and args.config is None:
                raise ConfigError("plot needs --out or --config")
            out = args.out if args.out is not None else Path(_load(args).output_dir)
            report = load_report(out)
            for path in emit_plots(report, out / "plots", trace_key=(min(report.tau_grid), 0.0)):
                print(path)
        elif args.command == "generate":
            cfg = _load(args)
            if not cfg.synthetic:
                raise ConfigError("scene: generate needs scene: synthetic")
            scene = generate_scene(scene_spec(cfg, args.snr), stft_config(cfg))
            write_scene(scene, cfg.output_dir, cfg.sample_rate)
            print(cfg.output_dir)
        else:
            cfg = _load(args)
            run_experiment(cfg)
            print(Path(cfg.output_dir) / "metrics.csv")
    except ConfigValidationError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RtfkitError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
