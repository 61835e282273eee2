import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtfkit.errors import ConfigError, InitError, ShapeError
from rtfkit.spectral import StftConfig, analyze
from rtfkit.tracking import (NOISE, SPEECH, CovarianceTracker, identity_init, long_term_init,
                             oracle_vad, read_vad, smoothing_factor, write_vad)

CFG = StftConfig()


def frames(rng, L, K, M):
    return rng.standard_normal((L, K, M)) + 1j * rng.standard_normal((L, K, M))


def test_smoothing_factor():
    assert smoothing_factor(0.5, CFG) == pytest.approx(np.exp(-0.032), abs=1e-12)
    assert smoothing_factor(0.5, CFG) == pytest.approx(0.96851, abs=1e-5)
    assert smoothing_factor(0.05, CFG) == pytest.approx(0.72615, abs=1e-5)
    assert smoothing_factor(1e9, CFG) == pytest.approx(1.0, abs=1e-6)
    for bad in (0.0, -1.0):
        with pytest.raises(ConfigError):
            smoothing_factor(bad, CFG)


def test_gate_mismatch_leaves_matrix_unchanged(rng):
    R0 = np.tile(np.eye(3, dtype=complex), (5, 1, 1))
    t = CovarianceTracker(R0, 0.9, SPEECH)
    before = t.R.copy()
    t.update(frames(rng, 1, 5, 3)[0], 0)
    assert np.array_equal(t.R, before)


def test_alpha_zero_gives_outer_product(rng):
    y = frames(rng, 1, 4, 3)[0]
    t = CovarianceTracker(np.zeros((4, 3, 3), complex), 0.0, NOISE)
    t.update(y, 0)
    a, b = y.real, y.imag
    outer = (a[:, :, None] * a[:, None, :] + b[:, :, None] * b[:, None, :]) \
        + 1j * (b[:, :, None] * a[:, None, :] - a[:, :, None] * b[:, None, :])
    # last-bit differences only (numpy's complex multiply may fuse operations)
    assert np.abs(t.R - outer).max() <= 4 * np.finfo(float).eps * np.abs(outer).max()


def test_recursive_matches_weighted_sum(rng):
    L, K, M, a = 200, 3, 4, 0.9
    Y = frames(rng, L, K, M)
    R0 = np.tile(np.eye(M, dtype=complex), (K, 1, 1))
    t = CovarianceTracker(R0, a, SPEECH)
    for l in range(L):
        t.update(Y[l], 1)
    w = (1 - a) * a ** np.arange(L - 1, -1, -1)
    direct = a ** L * R0 + np.einsum("l,lki,lkj->kij", w, Y, Y.conj())
    assert np.abs(t.R - direct).max() < 1e-10


def test_update_shape_error(rng):
    t = CovarianceTracker(np.zeros((4, 3, 3), complex), 0.5, SPEECH)
    with pytest.raises(ShapeError):
        t.update(np.zeros((4, 2), complex), 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_hermitian_psd_and_trace_bound(seed):
    rng = np.random.default_rng(seed)
    K, M = 3, 4
    t = CovarianceTracker(np.zeros((K, M, M), complex), rng.uniform(0, 0.99), SPEECH)
    for _ in range(30):
        y = frames(rng, 1, K, M)[0] * rng.uniform(0, 3)
        prev = np.trace(t.R, axis1=1, axis2=2).real.copy()
        t.update(y, int(rng.integers(0, 2)))
        tr = np.trace(t.R, axis1=1, axis2=2).real
        assert np.all(tr <= np.maximum(prev, (np.abs(y) ** 2).sum(1)) * (1 + 1e-12))
        assert np.abs(t.R - t.R.conj().transpose(0, 2, 1)).max() < 1e-12
        ev = np.linalg.eigvalsh(t.R)
        assert np.all(ev >= -1e-10 * np.maximum(tr, 1e-300)[:, None])


def test_update_deterministic(rng):
    Y = frames(rng, 20, 3, 2)
    vad = rng.integers(0, 2, 20)
    out = []
    for _ in range(2):
        t = CovarianceTracker(np.tile(np.eye(2, dtype=complex), (3, 1, 1)), 0.8, SPEECH)
        for l in range(20):
            t.update(Y[l], vad[l])
        out.append(t.R.tobytes())
    assert out[0] == out[1]


def test_vad_zero_and_tone():
    assert not oracle_vad(np.zeros(8000), CFG).any()
    t = np.arange(16000) / 16000
    v = oracle_vad(np.sin(2 * np.pi * 1000 * t), CFG)
    assert v[1:-1].all()


def test_vad_segments(rng):
    fs, seg = 16000, 8000
    x = np.concatenate([rng.standard_normal(seg) if i % 2 == 0 else 1e-4 * rng.standard_normal(seg)
                        for i in range(6)])
    v = oracle_vad(x, CFG, 40.0)
    for l, flag in enumerate(v):
        start = l * CFG.hop
        centre_seg = (start + 256) // seg
        # frames fully inside a segment follow it; boundary frames may go either way
        if start // seg == (start + 511) // seg:
            assert flag == (centre_seg % 2 == 0)


def test_long_term_init(rng):
    Y = frames(rng, 5, 2, 3)
    vad = np.array([0, 0, 1, 0, 0])
    R = long_term_init(Y, vad, SPEECH)
    np.testing.assert_allclose(R, Y[2][:, :, None] * Y[2][:, None, :].conj())
    with pytest.raises(InitError):
        long_term_init(Y, np.zeros(5), SPEECH)


def test_long_term_init_known_covariance(rng):
    M, L = 3, 1000
    C = np.array([[1, 0.5, 0.2], [0.5, 1, 0.3], [0.2, 0.3, 1]])
    A = np.linalg.cholesky(C)
    Z = (rng.standard_normal((L, 4, M)) + 1j * rng.standard_normal((L, 4, M))) / np.sqrt(2)
    Y = Z @ A.T
    R = long_term_init(Y, np.zeros(L), NOISE)
    for k in range(4):
        assert np.linalg.norm(R[k] - C) < 0.05 * np.linalg.norm(C)


def test_identity_init_trace_matched(rng):
    Y = frames(rng, 10, 3, 2)
    R = identity_init(Y)
    tr = (np.abs(Y) ** 2).sum(-1).mean(0)
    np.testing.assert_allclose(np.trace(R, axis1=1, axis2=2).real, tr)
    np.testing.assert_allclose(R[0], np.eye(2) * tr[0] / 2)


def test_vad_file_round_trip(tmp_path, rng):
    v = rng.integers(0, 2, 50).astype(np.int8)
    write_vad(tmp_path / "vad.txt", v)
    assert (tmp_path / "vad.txt").read_text().splitlines()[1] == f"1 {v[1]}"
    np.testing.assert_array_equal(read_vad(tmp_path / "vad.txt"), v)


def test_tracker_on_real_stft(rng):
    Y = analyze(rng.standard_normal((2, 4000)), CFG)
    t = CovarianceTracker(identity_init(Y), 0.9, NOISE)
    for l in range(Y.shape[0]):
        t.update(Y[l], 0)
    assert t.bins == 257 and t.dim == 2
