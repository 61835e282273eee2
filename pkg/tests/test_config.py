import pytest

from rtfkit.config import DEFAULTS, ConfigValidationError, load_config, validate_config
from rtfkit.estimators import ESTIMATORS


def errors_of(raw, **kw):
    with pytest.raises(ConfigValidationError) as exc:
        validate_config(raw, **kw)
    return exc.value.errors


def test_empty_config_names_scene():
    errs = errors_of("")
    assert len(errs) == 1 and "scene" in errs[0]


def test_defaults_resolved():
    cfg = validate_config("scene: synthetic\n")
    assert cfg.synthetic
    assert cfg.tau_y == (0.05, 0.1, 0.15, 0.2)
    assert cfg.snr_db == (-10.0, -5.0, 0.0, 5.0, 10.0)
    assert cfg.estimators == ESTIMATORS
    assert cfg.tau_n == 0.5 and cfg.frame_length == 512 and cfg.hop == 256
    assert set(cfg.to_dict()) == set(DEFAULTS)


def test_negative_tau():
    assert "tau_y must be > 0" in errors_of({"scene": "synthetic", "tau_y": -1})


def test_sc_without_external_mic():
    errs = errors_of({"scene": "synthetic", "estimators": ["SC"], "external_mic": False})
    assert any("SC" in e and "external" in e for e in errs)


def test_all_errors_collected():
    errs = errors_of({"scene": 3, "tau_n": "x", "hop": 300, "estimators": ["XX"], "bogus": 1})
    joined = " | ".join(errs)
    for word in ("scene", "tau_n", "hop", "XX", "bogus"):
        assert word in joined
    assert len(errs) == 5


def test_unknown_key_lenient():
    cfg = validate_config({"scene": "synthetic", "note": "x"}, strict=False)
    assert cfg.extras == {"note": "x"}


def test_type_mismatches():
    errs = errors_of({"scene": "synthetic", "write_audio": "yes", "seed": 1.5, "duration": True})
    assert len(errs) == 3


def test_estimators_canonical_order():
    cfg = validate_config({"scene": "synthetic", "estimators": "SC, CS, CS"})
    assert cfg.estimators == ("CS", "SC")


def test_invalid_yaml():
    assert "YAML" in errors_of("scene: [unclosed")[0]


def test_load_config(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("scene: synthetic\nseed: 3\n")
    cfg = load_config(p, {"seed": 5})
    assert cfg.seed == 5
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.yaml")
