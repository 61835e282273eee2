import numpy as np
import pytest


def random_pd(rng, m, shift=1.0):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return A.conj().T @ A + shift * np.eye(m)


def random_hermitian(rng, m):
    A = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return (A + A.conj().T) / 2


def random_rtf(rng, m):
    h = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    h[0] = 1.0
    return h


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one pass/fail line per acceptance criterion, collected by test_acceptance
ACCEPTANCE = {}


def report_criterion(number, passed, detail):
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
