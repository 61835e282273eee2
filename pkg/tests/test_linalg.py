import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rtfkit.errors import DegenerateError, NotHermitianError, NotPositiveDefiniteError, SingularError
from rtfkit.linalg import (cholesky, fix_phase, hermitian_evd, power_iteration, solve_hermitian,
                           solve_triangular)
from rtfkit.metrics import hermitian_angle

from conftest import random_hermitian, random_pd


def test_cholesky_examples():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(cholesky(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 6))
def test_cholesky_reconstruction(seed, m):
    R = random_pd(np.random.default_rng(seed), m)
    S = cholesky(R)
    assert np.allclose(S, np.triu(S))
    assert np.linalg.norm(S.conj().T @ S - R) < 1e-10 * np.linalg.norm(R)


def test_cholesky_not_pd():
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.ones((3, 3)))


def test_solve_triangular_examples(rng):
    B = rng.standard_normal((3, 2)) + 1j
    np.testing.assert_allclose(solve_triangular(np.eye(3), B), B)
    np.testing.assert_allclose(solve_triangular(np.diag([2.0, 4.0]), np.array([2.0, 8.0])), [1, 2])


@pytest.mark.parametrize("lower", [False, True])
@pytest.mark.parametrize("trans", ["N", "T", "C"])
def test_solve_triangular_residual(rng, lower, trans):
    A = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5)) + 4 * np.eye(5)
    S = np.tril(A) if lower else np.triu(A)
    B = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    X = solve_triangular(S, B, lower=lower, trans=trans)
    op = {"N": S, "T": S.T, "C": S.conj().T}[trans]
    assert np.linalg.norm(op @ X - B) < 1e-10 * np.linalg.norm(B)


def test_solve_triangular_singular():
    with pytest.raises(SingularError):
        solve_triangular(np.diag([1.0, 0.0]), np.ones(2))


def test_evd_examples():
    vals, vecs = hermitian_evd(np.eye(3))
    np.testing.assert_allclose(vals, [1, 1, 1])
    vals, vecs = hermitian_evd(np.diag([1.0, 5.0, 2.0]))
    np.testing.assert_allclose(vals, [5, 2, 1])
    np.testing.assert_allclose(np.abs(vecs), np.eye(3)[:, [1, 2, 0]], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 8))
def test_evd_reconstruction(seed, m):
    R = random_hermitian(np.random.default_rng(seed), m)
    pairs = hermitian_evd(R)
    V, lam = pairs.eigenvectors, pairs.eigenvalues
    assert np.linalg.norm(V @ np.diag(lam) @ V.conj().T - R) < 1e-10 * np.linalg.norm(R)
    assert np.linalg.norm(V @ V.conj().T - np.eye(m)) < 1e-10
    assert np.all(np.diff(lam) <= 0)
    # oracle: LAPACK eigenvalues
    np.testing.assert_allclose(lam, np.linalg.eigvalsh(R)[::-1], atol=1e-10 * np.abs(lam).max())
    # phase convention: largest-magnitude entry is real positive
    for v in V.T:
        k = np.argmax(np.abs(v))
        assert v[k].real > 0 and abs(v[k].imag) < 1e-14


def test_evd_shift_invariance(rng):
    R = random_hermitian(rng, 5)
    a = hermitian_evd(R).eigenvalues
    b = hermitian_evd(R + 2.5 * np.eye(5)).eigenvalues
    np.testing.assert_allclose(b, a + 2.5, atol=1e-10)


def test_evd_symmetrizes_small_asymmetry_and_rejects_large(rng):
    R = random_hermitian(rng, 4)
    hermitian_evd(R + 1e-13 * rng.standard_normal((4, 4)))
    with pytest.raises(NotHermitianError):
        hermitian_evd(R + np.triu(np.ones((4, 4)), 1))


def test_evd_principal_property(rng):
    R = random_pd(rng, 4)
    assert np.allclose(hermitian_evd(R).principal, hermitian_evd(R).eigenvectors[:, 0])


def test_power_iteration_examples():
    v = power_iteration(np.diag([4.0, 1.0]), np.array([1, 1]) / np.sqrt(2))
    np.testing.assert_allclose(v, np.array([4, 1]) / np.sqrt(17), atol=1e-15)
    R = np.diag([3.0, 1.0]).astype(complex)
    u = np.array([1j, 0])
    assert hermitian_angle(power_iteration(R, u), u) < 1e-15


def test_power_iteration_convergence(rng):
    Q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    R = Q @ np.diag([8.0, 4.0, 1.0, 0.5]) @ Q.conj().T
    v = power_iteration(R, np.ones(4, complex), 50)
    assert hermitian_angle(v, hermitian_evd(R).principal) < 1e-6


def test_power_iteration_composition(rng):
    R = random_pd(rng, 4)
    v0 = rng.standard_normal(4) + 0j
    a = power_iteration(R, v0, 7)
    b = power_iteration(R, power_iteration(R, v0, 3), 4)
    assert abs(abs(np.vdot(a, b)) - 1) < 1e-12


def test_power_iteration_errors():
    with pytest.raises(ValueError):
        power_iteration(np.eye(2), np.zeros(2))
    with pytest.raises(DegenerateError):
        power_iteration(np.zeros((2, 2)), np.ones(2))


def test_solve_hermitian(rng):
    b = rng.standard_normal(3) + 1j
    np.testing.assert_allclose(solve_hermitian(np.eye(3), b), b)
    np.testing.assert_allclose(solve_hermitian(np.diag([2.0, 5.0]), np.array([4.0, 10.0])), [2, 2])
    R = random_pd(rng, 6)
    x = solve_hermitian(R, b := rng.standard_normal(6) + 1j * rng.standard_normal(6))
    assert np.linalg.norm(R @ x - b) < 1e-10 * np.linalg.norm(b)
    with pytest.raises(NotPositiveDefiniteError):
        solve_hermitian(-np.eye(2), np.ones(2))


def test_inputs_unmodified(rng):
    R = random_pd(rng, 4)
    v = rng.standard_normal(4) + 0j
    R0, v0 = R.copy(), v.copy()
    cholesky(R), hermitian_evd(R), power_iteration(R, v, 3), solve_hermitian(R, v)
    solve_triangular(np.triu(R), v)
    np.testing.assert_array_equal(R, R0)
    np.testing.assert_array_equal(v, v0)


def test_fix_phase():
    v = fix_phase(np.array([0.1, -2j, 0.3]))
    assert v[1] == pytest.approx(2.0)
