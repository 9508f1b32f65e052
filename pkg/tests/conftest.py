"""Shared model problems for the test suite."""

from __future__ import annotations

import cmath

import numpy as np
import pytest

from grushin_lab import PhasePolynomial, SpectralParameter, SymbolJet, build_system


def poly1(terms: dict) -> PhasePolynomial:
    """One-dimensional symbol from {(i, j): coef} meaning coef x^i xi^j."""
    return PhasePolynomial(1, terms)


def harmonic_plus(extra: dict | None = None) -> PhasePolynomial:
    terms = {(2, 0): 1.0, (0, 2): 1.0}
    terms.update(extra or {})
    return poly1(terms)


def rotated(theta: float, extra: dict | None = None) -> PhasePolynomial:
    terms = {(0, 2): 1.0, (2, 0): cmath.exp(1j * theta)}
    terms.update(extra or {})
    return poly1(terms)


def harmonic2d(extra: dict | None = None) -> PhasePolynomial:
    terms = {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0, (0, 0, 2, 0): 1.0, (0, 0, 0, 2): 1.0}
    terms.update(extra or {})
    return PhasePolynomial(2, terms)


def ladder(M: int):
    """Independent truncated ladder matrices: (a, X, D) of size M."""
    a = np.diag(np.sqrt(np.arange(1, M)), 1).astype(complex)
    X = (a + a.conj().T) / np.sqrt(2)
    D = (a - a.conj().T) / (1j * np.sqrt(2))
    return a, X, D


def system_for(p0: PhasePolynomial, N0: int, z0: complex, N_cut: int = 30, guard=None,
               tail=(), expected_d=None):
    jet = SymbolJet.from_polynomials(N0, p0)
    zp = SpectralParameter(N0, (z0, *tail))
    return jet, zp, build_system(jet, zp, N_cut, guard, expected_d=expected_d)


@pytest.fixture(scope="session")
def cubic_system():
    """p0 = x^2 + xi^2 + x^3 at the bottom z0 = 1, N0 = 2."""
    return system_for(harmonic_plus({(3, 0): 1.0}), 2, 1.0, N_cut=40)


@pytest.fixture(scope="session")
def quartic_system():
    return system_for(harmonic_plus({(4, 0): 1.0}), 2, 1.0, N_cut=40)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
