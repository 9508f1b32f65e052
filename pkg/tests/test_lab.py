import numpy as np
import pytest

from grushin_lab import QuadraticForm, SymbolJet, analyze_quadratic, ztilde_sequence
from grushin_lab.fock import FockBasis
from grushin_lab.lab import (
    PseudospectrumGrid,
    assemble_scaled,
    check_estimate_regions,
    eigen_near,
    pseudospectrum_scan,
    region_stability,
    sigma_min,
    validate_expansion,
)

from conftest import harmonic_plus, poly1


def test_scaled_harmonic_is_h_times_oscillator():
    jet = SymbolJet.from_polynomials(1, harmonic_plus())
    op = assemble_scaled(jet, 0.01, FockBasis(1, 20, 3))
    w = np.sort(np.linalg.eigvals(op.trusted_matrix()).real)
    np.testing.assert_allclose(w[:5], 0.01 * np.array([1, 3, 5, 7, 9]), atol=1e-14)


def test_assemble_rejects_nonpositive_h():
    jet = SymbolJet.from_polynomials(1, harmonic_plus())
    with pytest.raises(ValueError):
        assemble_scaled(jet, 0.0, FockBasis(1, 5, 2))


def test_eigen_near_filters_by_disk():
    jet = SymbolJet.from_polynomials(1, harmonic_plus())
    op = assemble_scaled(jet, 1.0, FockBasis(1, 20, 10))
    assert eigen_near(op, 3.0, 0.5) == [pytest.approx(3.0)]
    assert eigen_near(op, 2.0, 0.5) == []


def test_validate_cubic_expansion(cubic_system):
    jet, _, sys_ = cubic_system
    fit = validate_expansion(jet, ztilde_sequence(sys_), [0.02, 0.01, 0.005], 60)
    assert fit.expected_slope == 3.0
    assert 2.7 <= fit.fitted_slope <= 3.3
    assert fit.passes()
    assert len(fit.rows()) == 3


def test_sigma_min_methods_agree():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    z = 0.3 + 0.1j
    assert sigma_min(A, z, "lu", rtol=1e-10) == pytest.approx(sigma_min(A, z, "svd"), rel=1e-6)


def _rotated_quartic_op(h, N=40):
    p0 = poly1({(0, 2): 1.0, (2, 0): 1j, (4, 0): 0.1})
    jet = SymbolJet.from_polynomials(2, p0)
    return jet, assemble_scaled(jet, h, FockBasis(1, N, 4))


def test_pseudospectrum_deterministic_across_workers():
    _, op = _rotated_quartic_op(0.05, N=20)
    g1 = pseudospectrum_scan(op, (-0.2, 0.2, -0.2, 0.2), 9, workers=1)
    g4 = pseudospectrum_scan(op, (-0.2, 0.2, -0.2, 0.2), 9, workers=4)
    np.testing.assert_array_equal(g1.sigma, g4.sigma)


def test_pseudospectrum_conjugation_symmetry():
    # x^2 + xi^2 with a real quartic is self-adjoint: sigma_min(A - z) = sigma_min(A - conj z)
    jet = SymbolJet.from_polynomials(2, harmonic_plus({(4, 0): 0.1}))
    op = assemble_scaled(jet, 0.05, FockBasis(1, 20, 4))
    g = pseudospectrum_scan(op, (-0.1, 0.3, -0.2, 0.2), (7, 9))
    np.testing.assert_allclose(g.sigma, g.sigma[::-1], atol=1e-13)


def test_pseudospectrum_vanishes_at_eigenvalue():
    jet = SymbolJet.from_polynomials(1, harmonic_plus())
    op = assemble_scaled(jet, 0.1, FockBasis(1, 10, 3))
    g = pseudospectrum_scan(op, (0.0, 0.2, -0.1, 0.1), (3, 3))
    assert g.sigma[1, 1] < 1e-14  # the point 0.1 + 0i
    assert g.sigma.min() == g.sigma[1, 1]


def test_csv_format(tmp_path):
    g = PseudospectrumGrid(0.1, np.array([0.0, 1.0]), np.array([-1.0, 1.0]),
                           np.array([[1.0, 2.0], [3.0, 1 / 3]]))
    path = g.to_csv(tmp_path / "g.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "re_z,im_z,sigma_min"
    assert len(lines) == 5
    assert lines[-1] == "1,1,0.33333333333333331"


def test_regions_harmonic_counts():
    rep = analyze_quadratic(QuadraticForm.from_polynomial(harmonic_plus()))
    jet = SymbolJet.from_polynomials(1, harmonic_plus())
    op = assemble_scaled(jet, 0.01, FockBasis(1, 30, 3))
    g = pseudospectrum_scan(op, (-0.1, 0.1, -0.1, 0.1), 41)
    r = check_estimate_regions(g, rep)
    assert r.k0 == 0
    assert r.omega_points > 0 and r.disk_points > 0
    # self-adjoint: sigma_min is the distance to the spectrum, at least rho h off it
    assert r.disk_inf >= 0.3 - 1e-12


def test_regions_need_trivial_singular_space():
    rep = analyze_quadratic(QuadraticForm.from_polynomial(poly1({(2, 0): 1j, (0, 2): 1j})))
    g = PseudospectrumGrid(0.1, np.zeros(2), np.zeros(2), np.ones((2, 2)))
    with pytest.raises(ValueError):
        check_estimate_regions(g, rep)


def test_region_stability():
    assert region_stability([1.0, 1.5]) == (True, 1.5)
    assert region_stability([1.0, 3.0])[0] is False
    assert region_stability([1.0, None])[0] is False
