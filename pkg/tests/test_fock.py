import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grushin_lab import (
    FockBasis,
    FockOperator,
    FockVector,
    GaussianProjectionError,
    PhasePolynomial,
    TrustExhausted,
    apply_chain,
    project_gaussian,
    quantize,
    star,
)

from conftest import harmonic2d, harmonic_plus, ladder


def _poly(dim, max_deg):
    exps = [e for e in itertools.product(range(max_deg + 1), repeat=2 * dim)
            if sum(e) <= max_deg]
    c = st.complex_numbers(max_magnitude=1.0, allow_nan=False, allow_infinity=False)
    return st.dictionaries(st.sampled_from(exps), c, min_size=1, max_size=4).map(
        lambda t: PhasePolynomial(dim, t))


@pytest.mark.parametrize("n, N, G", [(1, 10, 0), (2, 5, 3), (3, 4, 2)])
def test_basis_size(n, N, G):
    b = FockBasis(n, N, G)
    assert b.size == math.comb(N + G + n, n)
    assert b.block_size(N) == math.comb(N + n, n)
    assert np.all(np.diff(b.degrees) >= 0)


def test_basis_limit():
    with pytest.raises(ValueError):
        FockBasis(4, 60, 10)


def test_ladder_matches_independent_build():
    b = FockBasis(1, 12, 0)
    a, X, D = ladder(b.size)
    np.testing.assert_allclose(b.lowering[0].toarray(), a)
    np.testing.assert_allclose(b.position[0].toarray(), X)
    np.testing.assert_allclose(b.momentum[0].toarray(), D)


def test_canonical_commutator_on_trusted_block():
    b = FockBasis(2, 8, 2)
    for j in range(2):
        X = b.position[j].toarray()
        D = b.momentum[j].toarray()
        comm = (X @ D - D @ X)[: b.block_size(b.L - 1), : b.block_size(b.L - 1)]
        np.testing.assert_allclose(comm, 1j * np.eye(comm.shape[0]), atol=1e-13)


def test_harmonic_spectrum():
    b = FockBasis(1, 40, 2)
    w = np.sort(np.linalg.eigvals(quantize(harmonic_plus(), b).trusted_block()).real)
    np.testing.assert_allclose(w[:6], [1, 3, 5, 7, 9, 11], atol=1e-10)


def test_x_cubed_on_vacuum():
    b = FockBasis(1, 6, 3)
    op = quantize(PhasePolynomial(1, {(3, 0): 1.0}), b)
    v = op @ FockVector.basis_state(b, (0,))
    expected = np.zeros(b.size, complex)
    expected[1] = 3 / (2 * math.sqrt(2))
    expected[3] = math.sqrt(6) / (2 * math.sqrt(2))
    np.testing.assert_allclose(v.data, expected, atol=1e-14)
    assert v.trusted_degree == b.L - 3


def test_weyl_ordering_of_mixed_monomial():
    # Op(x xi) = (X D + D X)/2
    b = FockBasis(1, 10, 2)
    X, D = b.position[0].toarray(), b.momentum[0].toarray()
    op = quantize(PhasePolynomial(1, {(1, 1): 1.0}), b)
    np.testing.assert_allclose(op.matrix, 0.5 * (X @ D + D @ X), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(_poly(1, 3), _poly(1, 3))
def test_homomorphism(a, b_sym):
    b = FockBasis(1, 12, 6)
    A, B = quantize(a, b), quantize(b_sym, b)
    prod = A @ B
    C = quantize(star(a, b_sym), b)
    k = b.block_size(prod.trusted_degree)
    err = np.abs(C.matrix[:k, :k] - prod.matrix[:k, :k]).max()
    assert err < 1e-10


@settings(max_examples=20, deadline=None)
@given(_poly(2, 3))
def test_adjoint_is_conjugate_symbol(a):
    b = FockBasis(2, 5, 3)
    A = quantize(a, b)
    np.testing.assert_allclose(A.adjoint().matrix, quantize(a.conj(), b).matrix, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(_poly(2, 4))
def test_recursion_order_independent(a):
    b = FockBasis(2, 4, 4)
    k = b.block_size(b.L - a.degree)
    A1 = quantize(a, b, order="x-first").matrix[:k, :k]
    A2 = quantize(a, b, order="xi-first").matrix[:k, :k]
    np.testing.assert_allclose(A1, A2, atol=1e-12)


def test_parity_preserved_by_even_symbol():
    b = FockBasis(2, 6, 2)
    A = quantize(harmonic2d({(1, 1, 0, 0): 0.5, (0, 0, 1, 1): 1j}), b).matrix
    odd = b.parity_mask(1)
    assert np.abs(A[np.ix_(odd, ~odd)]).max() == 0
    assert np.abs(A[np.ix_(~odd, odd)]).max() == 0


def test_degree_above_guard_refused():
    b = FockBasis(1, 10, 2)
    with pytest.raises(TrustExhausted):
        quantize(PhasePolynomial(1, {(3, 0): 1.0}), b)


def test_product_trust_bookkeeping():
    b = FockBasis(1, 10, 6)
    A = quantize(PhasePolynomial(1, {(3, 0): 1.0}), b)
    B = quantize(PhasePolynomial(1, {(0, 2): 1.0}), b)
    P = A @ B
    assert P.degree == 5
    assert P.trusted_degree == min(A.trusted_degree - 2, B.trusted_degree - 3)


def test_apply_chain_order_and_trust():
    b = FockBasis(1, 6, 4)
    raise_op = FockOperator(b, b.raising[0].toarray(), b.L - 1, 1)
    lower_op = FockOperator(b, b.lowering[0].toarray(), b.L - 1, 1)
    v = FockVector.basis_state(b, (0,))
    # lower first annihilates the vacuum, raise first gives a^ a^+ |0> = |0>
    assert apply_chain([lower_op, raise_op], v).norm() == 0
    out = apply_chain([raise_op, lower_op], v)
    np.testing.assert_allclose(out.data[0], 1.0)
    assert out.trusted_degree == b.L - 2
    with pytest.raises(TrustExhausted):
        apply_chain([raise_op] * 5, v, min_trust=b.N_cut)


def test_vector_inner_convention():
    b = FockBasis(1, 3, 0)
    u = FockVector(b, np.array([1j, 0, 0, 0]), b.L)
    v = FockVector(b, np.array([1, 0, 0, 0]), b.L)
    assert u.inner(v) == 1j


def test_gaussian_vacuum():
    b = FockBasis(1, 8, 0)
    v = project_gaussian(np.array([[1j]]), b)
    np.testing.assert_allclose(np.abs(v.data), np.eye(b.size)[0], atol=1e-15)


def test_gaussian_rejects_bad_b():
    b = FockBasis(1, 8, 0)
    with pytest.raises(GaussianProjectionError):
        project_gaussian(np.array([[-1j]]), b)


def test_gaussian_squeezed_annihilated():
    # exp(i B x^2 / 2) with B = 2i is annihilated by (D - B X) as a function;
    # coefficients must decay and satisfy the ladder recursion exactly
    b = FockBasis(1, 40, 0)
    v = project_gaussian(np.array([[2j]]), b)
    X, D = b.position[0].toarray(), b.momentum[0].toarray()
    r = (D - 2j * X) @ v.data
    assert np.linalg.norm(r[: b.block_size(b.L - 1)]) < 1e-10
