"""
Experiment configuration: a flat YAML mapping, validated strictly.

Example::

    scene: synthetic          # or a directory holding speech.wav and noise.wav
    tau_y: [0.05, 0.1, 0.15, 0.2]
    snr_db: [-10, -5, 0, 5, 10]
    estimators: [CS, R1, CW, PM-CS, PM-CW, SC]
    seed: 0

Every key except ``scene`` has a default (see ``DEFAULTS``).
"""

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigError
from .estimators import ESTIMATORS

__all__ = ["ExperimentConfig", "DEFAULTS", "validate_config", "load_config", "ConfigValidationError"]

DEFAULTS = {
    "scene": None,
    "external_mic": True,
    "duration": 23.0,
    "reverb_time": 0.62,
    "drr_db": 0.0,
    "noise_kind": "speech_shaped",
    "external_distance": 0.6,
    "source_distance": 0.75,
    "frame_length": 512,
    "hop": 256,
    "sample_rate": 16000,
    "tau_y": [0.05, 0.1, 0.15, 0.2],
    "tau_n": 0.5,
    "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0],
    "estimators": list(ESTIMATORS),
    "vad_threshold_db": 40.0,
    "diagonal_loading": 1e-6,
    "init_mode": "long_term",
    "pm_init": "ones",
    "output_dir": "out",
    "seed": 0,
    "write_audio": True,
    "dump_rtfs": False,
}


class ConfigValidationError(ConfigError):
    """Carries every problem found, one message per entry in ``errors``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ExperimentConfig:
    scene: str
    external_mic: bool = True
    duration: float = 23.0
    reverb_time: float = 0.62
    drr_db: float = 0.0
    noise_kind: str = "speech_shaped"
    external_distance: float = 0.6
    source_distance: float = 0.75
    frame_length: int = 512
    hop: int = 256
    sample_rate: int = 16000
    tau_y: tuple = (0.05, 0.1, 0.15, 0.2)
    tau_n: float = 0.5
    snr_db: tuple = (-10.0, -5.0, 0.0, 5.0, 10.0)
    estimators: tuple = ESTIMATORS
    vad_threshold_db: float = 40.0
    diagonal_loading: float = 1e-6
    init_mode: str = "long_term"
    pm_init: str = "ones"
    output_dir: str = "out"
    seed: int = 0
    write_audio: bool = True
    dump_rtfs: bool = False
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def synthetic(self):
        return self.scene == "synthetic"

    def to_dict(self):
        d = asdict(self)
        d.pop("extras")
        for k in ("tau_y", "snr_db", "estimators"):
            d[k] = list(d[k])
        return d


def _number(errors, name, value, positive=False, nonneg=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{name} must be a number, got {value!r}")
        return None
    if integer and int(value) != value:
        errors.append(f"{name} must be an integer, got {value!r}")
        return None
    if positive and not value > 0:
        errors.append(f"{name} must be > 0")
        return None
    if nonneg and not value >= 0:
        errors.append(f"{name} must be >= 0")
        return None
    return int(value) if integer else float(value)


def _grid(errors, name, value, positive=False):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        errors.append(f"{name} must be a nonempty list of numbers")
        return ()
    out = []
    for v in value:
        x = _number(errors, name, v, positive=positive)
        if x is not None:
            out.append(x)
    return tuple(out)


def validate_config(raw, strict=True):
    """Resolve defaults and check a config given as YAML text or a mapping.

    Raises :class:`ConfigValidationError` listing every problem found.
    """
    if isinstance(raw, str):
        try:
            raw = yaml.safe_load(raw)
        except yaml.YAMLError as exc:
            raise ConfigValidationError([f"config is not valid YAML: {exc}"]) from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigValidationError(["config must be a mapping of keys to values"])
    errors = []
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown and strict:
        errors.extend(f"unknown key {k!r}" for k in unknown)
    merged = {**DEFAULTS, **{k: v for k, v in raw.items() if k in DEFAULTS}}
    out = {}

    scene = merged["scene"]
    if scene is None:
        errors.append("scene is required ('synthetic' or a directory with speech.wav/noise.wav)")
    elif not isinstance(scene, str):
        errors.append(f"scene must be a string, got {scene!r}")
    out["scene"] = scene

    for key in ("external_mic", "write_audio", "dump_rtfs"):
        if not isinstance(merged[key], bool):
            errors.append(f"{key} must be true or false, got {merged[key]!r}")
        out[key] = merged[key]

    for key in ("duration", "tau_n", "external_distance", "source_distance"):
        out[key] = _number(errors, key, merged[key], positive=True)
    out["reverb_time"] = _number(errors, "reverb_time", merged["reverb_time"], nonneg=True)
    out["diagonal_loading"] = _number(errors, "diagonal_loading", merged["diagonal_loading"],
                                      nonneg=True)
    for key in ("drr_db", "vad_threshold_db"):
        out[key] = _number(errors, key, merged[key])
    for key in ("frame_length", "hop", "sample_rate"):
        out[key] = _number(errors, key, merged[key], positive=True, integer=True)
    out["seed"] = _number(errors, "seed", merged["seed"], nonneg=True, integer=True)
    if out["frame_length"] and out["hop"] and (out["frame_length"] % 2 or out["frame_length"] % out["hop"]):
        errors.append("frame_length must be even and divisible by hop")

    out["tau_y"] = _grid(errors, "tau_y", merged["tau_y"], positive=True)
    out["snr_db"] = _grid(errors, "snr_db", merged["snr_db"])

    ests = merged["estimators"]
    if isinstance(ests, str):
        ests = [e.strip() for e in ests.split(",") if e.strip()]
    if not isinstance(ests, list) or not ests:
        errors.append("estimators must be a nonempty list")
        ests = []
    bad = [e for e in ests if e not in ESTIMATORS]
    if bad:
        errors.append(f"estimators: unknown {bad}, choose from {list(ESTIMATORS)}")
    # keep canonical order, drop duplicates
    out["estimators"] = tuple(e for e in ESTIMATORS if e in ests)

    if merged["noise_kind"] not in ("speech_shaped", "multi_talker"):
        errors.append("noise_kind must be 'speech_shaped' or 'multi_talker'")
    out["noise_kind"] = merged["noise_kind"]
    if merged["init_mode"] not in ("long_term", "identity"):
        errors.append("init_mode must be 'long_term' or 'identity'")
    out["init_mode"] = merged["init_mode"]
    if merged["pm_init"] not in ("ones", "e1"):
        errors.append("pm_init must be 'ones' or 'e1'")
    out["pm_init"] = merged["pm_init"]
    if not isinstance(merged["output_dir"], str) or not merged["output_dir"]:
        errors.append("output_dir must be a nonempty string")
    out["output_dir"] = merged["output_dir"]

    if "SC" in out["estimators"] and out["external_mic"] is False:
        errors.append("estimators: SC requires an external microphone (external_mic: true)")
    if errors:
        raise ConfigValidationError(errors)
    return ExperimentConfig(**out, extras={k: raw[k] for k in unknown})


def load_config(path, overrides=None, strict=True):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigValidationError([f"{path}: not valid YAML: {exc}"]) from exc
    if raw is None:
        raw = {}
    if overrides:
        if not isinstance(raw, dict):
            raise ConfigValidationError(["config must be a mapping of keys to values"])
        raw = {**raw, **overrides}
    return validate_config(raw, strict)
