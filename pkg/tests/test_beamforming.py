import numpy as np
import pytest

from rtfkit.beamforming import apply, batch_mvdr, load_diagonal, mvdr_weights, shadow_apply
from rtfkit.errors import ShapeError

from conftest import random_pd, random_rtf


def test_white_noise_closed_form(rng):
    h = random_rtf(rng, 4)
    w = mvdr_weights(2.5 * np.eye(4), h)
    np.testing.assert_allclose(w, h / np.vdot(h, h).real, atol=1e-14)


def test_scalar_case():
    np.testing.assert_allclose(mvdr_weights(np.array([[3.0]]), np.array([1.0])), [1.0])


def test_distortionless(rng):
    for _ in range(20):
        h = random_rtf(rng, 4)
        w = mvdr_weights(random_pd(rng, 4), h)
        assert abs(np.vdot(w, h) - 1) < 1e-12


@pytest.mark.parametrize("loading", [0.0, 1e-6])
def test_optimality_against_random_competitors(rng, loading):
    for _ in range(20):
        Rn = random_pd(rng, 4)
        h = random_rtf(rng, 4)
        w = mvdr_weights(Rn, h, loading)
        Rl = load_diagonal(Rn, loading)
        best = np.vdot(w, Rl @ w).real
        U = rng.standard_normal((1000, 4)) + 1j * rng.standard_normal((1000, 4))
        U = U / (U.conj() @ h)[:, None].conj()
        assert np.allclose(U.conj() @ h, 1)
        power = np.einsum("ni,ij,nj->n", U.conj(), Rl, U).real
        assert power.min() >= best * (1 - 1e-9)


def test_loading_definition(rng):
    Rn = random_pd(rng, 3)
    np.testing.assert_allclose(load_diagonal(Rn, 0.1),
                               Rn + 0.1 * np.trace(Rn).real / 3 * np.eye(3))


def test_batch_matches_single(rng):
    Rn = np.stack([random_pd(rng, 4) for _ in range(6)])
    H = np.stack([random_rtf(rng, 4) for _ in range(6)])
    W, ok = batch_mvdr(Rn, H)
    assert ok.all()
    for k in range(6):
        np.testing.assert_allclose(W[k], mvdr_weights(Rn[k], H[k]), atol=1e-12)
    assert np.abs(np.einsum("ki,ki->k", W.conj(), H) - 1).max() < 1e-10


def test_batch_flags_failure(rng):
    Rn = np.stack([random_pd(rng, 3) for _ in range(3)])
    Rn[1] = -np.eye(3)
    H = np.ones((3, 3), complex)
    _, ok = batch_mvdr(Rn, H)
    assert ok.tolist() == [True, False, True]


def test_apply_passthrough_and_distortionless(rng):
    Y = rng.standard_normal((5, 4, 3)) + 1j * rng.standard_normal((5, 4, 3))
    e1 = np.zeros((4, 3), complex)
    e1[:, 0] = 1
    np.testing.assert_array_equal(apply(e1, Y)[:, :, 0], Y[:, :, 0])
    h = np.stack([random_rtf(rng, 3) for _ in range(4)])
    X1 = rng.standard_normal((5, 4)) + 1j * rng.standard_normal((5, 4))
    W, _ = batch_mvdr(np.stack([random_pd(rng, 3) for _ in range(4)]), h)
    Z = apply(W, X1[:, :, None] * h[None])
    np.testing.assert_allclose(Z[:, :, 0], X1, atol=1e-12)


def test_apply_matches_naive(rng):
    Y = rng.standard_normal((5, 4, 3)) + 1j * rng.standard_normal((5, 4, 3))
    W = rng.standard_normal((5, 4, 3)) + 1j * rng.standard_normal((5, 4, 3))
    Z = apply(W, Y)
    for l in range(5):
        for k in range(4):
            assert abs(Z[l, k, 0] - np.vdot(W[l, k], Y[l, k])) < 1e-14


def test_apply_shape_errors(rng):
    with pytest.raises(ShapeError):
        apply(np.ones((4, 2)), np.ones((5, 4, 3)))
    with pytest.raises(ShapeError):
        shadow_apply(np.ones((4, 3)), np.ones((5, 4, 3)), np.ones((6, 4, 3)))


def test_shadow(rng):
    X = rng.standard_normal((5, 4, 3)) + 1j * rng.standard_normal((5, 4, 3))
    N = rng.standard_normal((5, 4, 3)) + 1j * rng.standard_normal((5, 4, 3))
    W = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
    xs, ns = shadow_apply(W, X, N)
    assert np.abs(apply(W, X + N) - (xs + ns)).max() < 1e-12
    _, n0 = shadow_apply(W, X, np.zeros_like(N))
    assert not n0.any()
    e1 = np.zeros((4, 3))
    e1[:, 0] = 1
    xs, ns = shadow_apply(e1, X, N)
    np.testing.assert_array_equal(xs[:, :, 0], X[:, :, 0])
