import numpy as np
import pytest

from rtfkit.errors import ConfigError
from rtfkit.estimators import ESTIMATORS
from rtfkit.pipeline import evaluate_point, run_online, synthetic_scene, sweep
from rtfkit.scenegen import SceneSpec
from rtfkit.spectral import StftConfig

STFT = StftConfig()


@pytest.fixture(scope="module")
def scene():
    return synthetic_scene(SceneSpec(duration=4.0, seed=2), STFT)


def test_point_rows_and_contracts(scene):
    pt = evaluate_point(scene, 0.0, 0.1, 0.5, ESTIMATORS, STFT, 1e-6, keep_rtfs=True)
    assert [r["estimator"] for r in pt.rows] == list(ESTIMATORS)
    n = scene.speech.shape[1]
    for r in pt.rows:
        assert r["max_distortion"] < 1e-10
        assert 0 <= r["mean_angle"] <= np.pi / 2
        assert abs(r["input_isnr"]) < 0.1
    for name, sig in pt.enhanced.items():
        assert sig.shape == (n,)
        assert pt.trace[name].shape == (scene.X.shape[0],)
        H = pt.rtfs[name]
        assert np.allclose(H[..., 0], 1)


@pytest.mark.filterwarnings("error")
def test_silent_input_stays_finite(scene):
    Y = np.zeros_like(scene.X)
    vad = np.zeros(scene.X.shape[0], dtype=np.int8)
    res = run_online(Y, vad, scene.n_local, list(ESTIMATORS), 0.9, 0.9, init_mode="identity")
    for name in ESTIMATORS:
        assert np.array_equal(res.output[name], Y[:, :, 0])


def test_sc_needs_external(scene):
    with pytest.raises(ConfigError):
        run_online(scene.X[:, :, :4], scene.vad, 4, ["SC"], 0.9, 0.9)
    with pytest.raises(ConfigError):
        run_online(scene.X, scene.vad, 4, ["XX"], 0.9, 0.9)


def test_sweep_grid(scene):
    seen = []
    rep = sweep(scene, [0.05, 0.1], [0.0, 5.0], 0.5, ["CS", "SC"], STFT, 1e-6,
                on_point=lambda t, s, p: seen.append((t, s)))
    assert len(rep.rows) == 8
    assert seen == [(0.05, 0.0), (0.05, 5.0), (0.1, 0.0), (0.1, 5.0)]
    assert rep.tau_grid == [0.05, 0.1] and rep.snr_grid == [0.0, 5.0]


def test_point_deterministic(scene):
    a = evaluate_point(scene, 5.0, 0.05, 0.5, ["PM-CW", "SC"], STFT, 1e-6)
    b = evaluate_point(scene, 5.0, 0.05, 0.5, ["PM-CW", "SC"], STFT, 1e-6)
    assert a.rows == b.rows
    for k in a.enhanced:
        assert a.enhanced[k].tobytes() == b.enhanced[k].tobytes()


def test_identity_init_holds_until_speech(scene):
    pt = evaluate_point(scene, 0.0, 0.05, 0.5, ["SC"], STFT, 1e-6, init_mode="identity")
    f = int(np.argmax(scene.vad))
    tr = pt.trace["SC"]
    assert np.ptp(tr[:f]) < 1e-12
    assert tr[-10:].mean() < tr[f - 1]
