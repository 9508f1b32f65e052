import math
from dataclasses import replace

import numpy as np
import pytest

from grushin_lab import (
    FockVector,
    PhasePolynomial,
    SpectralParameter,
    SymbolJet,
    build_system,
    criterion_over_omega,
    effective_direct,
    effective_family,
    grushin_residuals,
    localization_N0_1,
    omega_samples,
    parity_audit,
    ztilde_sequence,
)
from grushin_lab.grushin import (
    KernelMismatch,
    build_correctors,
    compositions,
    default_guard,
)
from grushin_lab.symbols import build_ak_family

from conftest import harmonic2d, harmonic_plus, ladder, poly1, rotated, system_for


def rs_oracle(V: np.ndarray, levels: np.ndarray, order: int) -> list[float]:
    """Rayleigh-Schroedinger ground-state series for diag(levels) + g V.

    Intermediate normalization; returns E_1..E_order (coefficients of g^k).
    """
    M = len(levels)
    R = np.zeros(M)
    R[1:] = 1.0 / (levels[0] - levels[1:])
    psi = [np.eye(M)[0]]
    E = [levels[0]]
    for k in range(1, order + 1):
        Ek = V[0] @ psi[k - 1]
        E.append(Ek)
        rhs = V @ psi[k - 1] - sum(E[j] * psi[k - j] for j in range(1, k + 1))
        psi.append(R * rhs)
    return [float(np.real(e)) for e in E[1:]]


# frozen from rs_oracle at M = 120 (x^3 and x^4 perturbations of x^2 + xi^2)
CUBIC_SERIES = [0.0, -0.6875, 0.0, -1.81640625, 0.0, -9.694580078125]
QUARTIC_SERIES = [0.0, 0.75]


def test_rs_oracle_frozen_values():
    _, X, _ = ladder(120)
    levels = 2 * np.arange(120) + 1.0
    np.testing.assert_allclose(rs_oracle(X @ X @ X, levels, 6), CUBIC_SERIES, atol=1e-10)
    np.testing.assert_allclose(rs_oracle(X @ X @ X @ X, levels, 1), [0.75], atol=1e-10)
    assert CUBIC_SERIES[1] == -11 / 16 and CUBIC_SERIES[3] == -465 / 256


def test_compositions():
    assert len(list(compositions(4))) == 8
    assert sorted(compositions(3)) == [(1, 1, 1), (1, 2), (2, 1), (3,)]
    assert list(compositions(0)) == [()]


def test_default_guard():
    assert default_guard(1) == 16
    assert default_guard(2) == 30


def test_harmonic_kernel_and_inverse():
    _, _, sys_ = system_for(harmonic_plus(), 1, 1.0, N_cut=20)
    assert sys_.d == 1
    np.testing.assert_allclose(np.abs(sys_.Phi[0].data[0]), 1.0)
    np.testing.assert_allclose(sys_.Phi[0].data, sys_.Psi[0].data)
    diag = np.diag(sys_.Smat.matrix).real
    k = np.arange(1, 20)
    np.testing.assert_allclose(diag[1:20], 1 / (2 * k), atol=1e-12)
    assert abs(diag[0]) < 1e-12


def test_penrose_conditions():
    _, _, sys_ = system_for(rotated(math.pi / 4, {(3, 0): 1.0}), 1, np.exp(1j * math.pi / 8),
                            N_cut=20)
    Q, S = sys_.Q.matrix, sys_.Smat.matrix
    scale = np.linalg.norm(S, 2)
    assert np.linalg.norm(Q @ S @ Q - Q) < 1e-8 * np.linalg.norm(Q, 2)
    assert np.linalg.norm(S @ Q @ S - S) < 1e-8 * scale
    assert np.linalg.norm((Q @ S).conj().T - Q @ S) < 1e-8
    assert np.linalg.norm((S @ Q).conj().T - S @ Q) < 1e-8


def test_rotated_kernels_differ():
    theta = math.pi / 4
    _, _, sys_ = system_for(rotated(theta), 1, np.exp(1j * theta / 2), N_cut=40)
    phi, psi = sys_.Phi[0].data, sys_.Psi[0].data
    assert np.linalg.norm(phi - psi) > 1e-3
    # the adjoint kernel of q^w is the conjugate of the kernel of q^w
    np.testing.assert_allclose(abs(np.vdot(psi, phi.conj())), 1.0, atol=1e-8)


def test_two_dimensional_kernel():
    _, _, sys_ = system_for(harmonic2d(), 1, 4.0, N_cut=12, expected_d=2)
    assert sys_.d == 2
    np.testing.assert_allclose(sys_.pairing(), np.eye(2), atol=1e-12)


def test_kernel_mismatch():
    with pytest.raises(KernelMismatch) as info:
        system_for(harmonic2d(), 1, 4.0, N_cut=12, expected_d=1)
    assert info.value.found == 2


def test_first_corrector_cubic(cubic_system):
    _, _, sys_ = cubic_system
    phi1 = sys_.correctors_plus[1][0].data
    sign = np.sign(sys_.Phi[0].data[0].real)
    expected = np.zeros_like(phi1)
    expected[1] = -3 / (4 * math.sqrt(2))
    expected[3] = -math.sqrt(3) / 12
    np.testing.assert_allclose(phi1 * sign, expected, atol=1e-12)


def test_linear_term_second_order():
    p1 = poly1({(1, 0): 1.0})
    jet = SymbolJet.from_polynomials(1, harmonic_plus(), p1)
    sys_ = build_system(jet, SpectralParameter(1, (1.0,)), 20)
    np.testing.assert_allclose(sys_.A_j(1), [[0.0]], atol=1e-14)
    np.testing.assert_allclose(sys_.A_j(2), [[0.25]], atol=1e-12)


@pytest.mark.parametrize("name", ["cubic", "quartic", "rotated"])
def test_direct_matches_recursive(name, cubic_system, quartic_system):
    if name == "cubic":
        sys_ = cubic_system[2]
    elif name == "quartic":
        sys_ = quartic_system[2]
    else:
        sys_ = system_for(rotated(math.pi / 4, {(3, 0): 1.0}), 2,
                          np.exp(1j * math.pi / 8), N_cut=40)[2]
    for j in range(1, 7):
        np.testing.assert_allclose(effective_direct(sys_, sys_.family, j), sys_.A_j(j),
                                   atol=1e-8)


def test_direct_matches_recursive_many_terms():
    # several nonzero a_k, so compositions with mixed parts contribute
    p0 = harmonic_plus({(3, 0): 1.0, (4, 0): 0.5, (2, 1): 0.3j})
    p1 = poly1({(1, 0): 0.7, (0, 2): 0.2})
    jet = SymbolJet.from_polynomials(2, p0, p1)
    sys_ = build_system(jet, SpectralParameter(2, (1.0, 0.0, 0.4, 0.0, 0.1)), 40)
    assert abs(sys_.A_j(4)[0, 0]) > 0.1
    for j in range(1, 7):
        np.testing.assert_allclose(effective_direct(sys_, sys_.family, j), sys_.A_j(j),
                                   atol=1e-10)


def test_adjoint_side_gives_same_matrices():
    sys_ = system_for(rotated(math.pi / 3, {(3, 0): 0.5}), 2, np.exp(1j * math.pi / 6),
                      N_cut=40)[2]
    fam = sys_.family
    Phi = sys_.Phi_matrix
    for j in range(1, sys_.J + 1):
        acc = np.zeros((1, 1), complex)
        for m in range(1, j + 1):
            psim = np.column_stack([v.data for v in sys_.correctors_minus[j - m]])
            acc -= psim.conj().T @ fam.a[m].matrix @ Phi
        np.testing.assert_allclose(acc, sys_.A_j(j), atol=1e-8)


def test_trust_check_demands_guard():
    from grushin_lab import TrustExhausted

    jet = SymbolJet.from_polynomials(2, harmonic_plus({(3, 0): 1.0}))
    with pytest.raises(TrustExhausted):
        build_system(jet, SpectralParameter(2, (1.0,)), 20, guard=6)


@pytest.mark.parametrize("system, series", [("cubic", CUBIC_SERIES), ("quartic", QUARTIC_SERIES)])
def test_ztilde_against_oracle(system, series, cubic_system, quartic_system):
    sys_ = (cubic_system if system == "cubic" else quartic_system)[2]
    ex = ztilde_sequence(sys_)
    assert ex.parity_even
    np.testing.assert_allclose(np.array(ex.ztilde[: len(series)]), series, atol=1e-8)
    assert ex.lambda_kj(1) == ex.coefficient(2)


def test_ztilde_scales_with_coupling():
    base = ztilde_sequence(system_for(harmonic_plus({(3, 0): 1.0}), 2, 1.0, N_cut=40)[2])
    lam = 0.3
    scaled = ztilde_sequence(system_for(harmonic_plus({(3, 0): lam}), 2, 1.0, N_cut=40)[2])
    for j in range(1, 7):
        assert abs(scaled.coefficient(j) - lam ** j * base.coefficient(j)) < 1e-9


def test_ztilde_needs_simple_kernel():
    sys_ = system_for(harmonic2d(), 1, 4.0, N_cut=12)[2]
    with pytest.raises(NotImplementedError):
        ztilde_sequence(sys_)


def test_margin_invariant_under_kernel_rotation():
    p0 = harmonic2d({(3, 0, 0, 0): 1.0, (1, 2, 0, 0): 1.0})
    _, _, sys_ = system_for(p0, 1, 4.0, N_cut=12, tail=(0.1,))
    U = np.array([[1, 1j], [1j, 1]]) / math.sqrt(2)
    V = np.array([[math.cos(0.4), -math.sin(0.4)], [math.sin(0.4), math.cos(0.4)]])
    Phi = sys_.Phi_matrix @ U
    Psi = sys_.Psi_matrix @ V
    b = sys_.basis
    rot = replace(sys_, Phi=tuple(FockVector(b, Phi[:, i], b.L, True) for i in range(2)),
                  Psi=tuple(FockVector(b, Psi[:, i], b.L, True) for i in range(2)))
    rot = build_correctors(rot, sys_.family)
    for h in (1e-3, 1e-4):
        assert effective_family(rot, 1).margin(h) == pytest.approx(
            effective_family(sys_, 1).margin(h), rel=1e-10)


def test_localization_same_parity():
    p0 = harmonic2d({(3, 0, 0, 0): 1.0, (1, 2, 0, 0): 1.0})
    _, _, sys_ = system_for(p0, 1, 4.0, N_cut=12)
    loc = localization_N0_1(sys_)
    assert loc.d0 == 2 and not loc.identically_singular
    np.testing.assert_allclose(loc.Lambda, [0, 0], atol=1e-12)
    assert loc.holds_at(0.1) and not loc.holds_at(0.0)


def test_localization_opposite_parity():
    # frequencies 1 and 2 make |2,0> and |0,1> degenerate at z0 = 7;
    # the coupling x1^2 x2 gives A_1(0) = [[0, 1/2], [1/2, 0]] by hand
    p0 = PhasePolynomial(2, {(2, 0, 0, 0): 1.0, (0, 0, 2, 0): 1.0, (0, 2, 0, 0): 2.0,
                             (0, 0, 0, 2): 2.0, (2, 1, 0, 0): 1.0})
    _, _, sys_ = system_for(p0, 1, 7.0, N_cut=12, expected_d=2)
    loc = localization_N0_1(sys_)
    np.testing.assert_allclose(loc.Lambda, [-0.5, 0.5], atol=1e-12)
    audit = parity_audit(sys_, build_ak_family(SymbolJet.from_polynomials(1, p0),
                                               SpectralParameter(1, (7.0,))))
    assert audit.performed and audit.same_parity is False
    assert audit.vanishing_indices == (2, 4)


def test_criterion_on_and_off_lambda():
    p0 = harmonic2d({(3, 0, 0, 0): 1.0, (1, 2, 0, 0): 1.0})
    _, _, sys_ = system_for(p0, 1, 4.0, N_cut=12)
    hs = (1e-4, 1e-5, 1e-6)
    off = omega_samples([0.2, 0, 0, 0], 4, interior=0)
    on = omega_samples([0.0, 0, 0, 0], 4, interior=0)
    assert criterion_over_omega(sys_, 1, hs, off).satisfied
    assert not criterion_over_omega(sys_, 1, hs, on).satisfied


def test_omega_samples_shape():
    box = [((-1.0, 1.0), (0.0, 0.0)), 0.5, ((0.0, 0.0), (-1.0, 1.0))] + [0.0] * 3
    pts = omega_samples(box, 6, per_axis=5, interior=10, seed=3)
    assert pts.shape == (35, 6)
    assert np.all(pts[:, 1] == 0.5)
    assert np.all(np.abs(pts[:, 0].real) <= 1) and np.all(pts[:, 0].imag == 0)
    again = omega_samples(box, 6, per_axis=5, interior=10, seed=3)
    np.testing.assert_array_equal(pts, again)


def test_parity_audit_cubic(cubic_system):
    jet, zp, sys_ = cubic_system
    audit = parity_audit(sys_, build_ak_family(jet, zp))
    assert audit.passed
    assert audit.vanishing_indices == (1, 3, 5)


def test_parity_audit_skipped_for_odd_spectral_term():
    jet, zp, _ = system_for(harmonic_plus({(3, 0): 1.0}), 2, 1.0, N_cut=40)
    zp2 = SpectralParameter(2, (1.0, 0.3))
    sys_ = build_system(jet, zp2, 40)
    audit = parity_audit(sys_, build_ak_family(jet, zp2))
    assert not audit.performed


def test_residuals_small_and_decaying(cubic_system):
    sys_ = cubic_system[2]
    r1, r2 = grushin_residuals(sys_, 0.02), grushin_residuals(sys_, 0.01)
    assert r1.normalization < 1e-12 and r2.normalization < 1e-12
    assert r2.right_inverse < r1.right_inverse / 2 ** 4
    assert r2.left_inverse < r1.left_inverse
    assert r1.reduced_identity < 0.5


def test_doubling_cutoff_is_converged():
    p0 = rotated(math.pi / 4, {(3, 0): 1.0})
    z0 = np.exp(1j * math.pi / 8)
    coarse = system_for(p0, 2, z0, N_cut=40)[2]
    fine = system_for(p0, 2, z0, N_cut=80)[2]
    a, b = ztilde_sequence(coarse), ztilde_sequence(fine)
    for j in range(1, 7):
        assert abs(a.coefficient(j) - b.coefficient(j)) <= 1e-6 * max(1.0, abs(b.coefficient(j)))
    for h in (0.02, 0.005):
        assert effective_family(coarse, 2).margin(h) == pytest.approx(
            effective_family(fine, 2).margin(h), rel=1e-6)
