"""Numerical validation against the rescaled model operator.

The operator studied is the truncated Taylor model
sum_{j, gamma} c_{j,gamma} h^{j + |gamma|/2} Op(X^gamma), i.e. the jet of p
composed with the dilation X -> h^{1/2} X. Its spectrum near h z0 is compared
with the predicted expansion, and its pseudospectrum with the resolvent
regions around the characteristic point.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .fock import FockBasis, FockOperator, quantize
from .grushin import EigenExpansion
from .quadratic import QuadraticReport, lattice_points
from .symbols import PhasePolynomial, SymbolJet

__all__ = [
    "ScaledOperator",
    "ExpansionFit",
    "TrackingAmbiguity",
    "PseudospectrumGrid",
    "RegionReport",
    "assemble_scaled",
    "eigen_near",
    "validate_expansion",
    "pseudospectrum_scan",
    "sigma_min",
    "check_estimate_regions",
    "region_stability",
]

SPURIOUS_MASS = 0.01
DENSE_SVD_LIMIT = 2000


class TrackingAmbiguity(RuntimeError):
    def __init__(self, h: float, candidates: Sequence[complex]):
        listed = ", ".join(f"{c:.12g}" for c in candidates)
        super().__init__(f"two or more eigenvalues in the tracking disk at h={h}: {listed}")
        self.h = h
        self.candidates = tuple(candidates)


@dataclass(frozen=True)
class ScaledOperator:
    h: float
    op: FockOperator

    @property
    def basis(self) -> FockBasis:
        return self.op.basis

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def trusted_matrix(self) -> np.ndarray:
        return self.op.trusted_block()


def assemble_scaled(jet: SymbolJet, h: float, basis: FockBasis) -> ScaledOperator:
    """Weighted sum of quantized monomials over the retained Taylor range."""
    if h <= 0:
        raise ValueError("h must be positive")
    terms: dict[tuple[int, ...], complex] = {}
    for (j, alpha), c in jet.taylor().items():
        terms[alpha] = terms.get(alpha, 0) + c * h ** (j + sum(alpha) / 2)
    sym = PhasePolynomial(jet.dim, terms)
    return ScaledOperator(h, quantize(sym, basis))


def eigen_near(op: ScaledOperator, center: complex, radius: float,
               mass_tol: float = SPURIOUS_MASS) -> list[complex]:
    """Eigenvalues of the trusted block inside the disk, spurious modes removed.

    A mode is spurious when more than ``mass_tol`` of its squared norm sits on
    states above the cutoff N_cut (the guard band of the trusted block).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    A = op.trusted_matrix()
    w, V = np.linalg.eig(A)
    basis = op.basis
    cut = basis.block_size(basis.N_cut)
    out = []
    for lam, v in zip(w, V.T):
        if abs(lam - center) > radius:
            continue
        tot = float(np.vdot(v, v).real)
        band = float(np.vdot(v[cut:], v[cut:]).real)
        if tot > 0 and band / tot >= mass_tol:
            continue
        out.append(complex(lam))
    out.sort(key=lambda z: abs(z - center))
    return out


@dataclass(frozen=True)
class ExpansionFit:
    h: tuple[float, ...]
    z_num: tuple[complex, ...]
    predicted: tuple[complex, ...]
    residuals: tuple[float, ...]
    fitted_slope: float
    expected_slope: float
    order: int

    def passes(self, tol: float = 0.3) -> bool:
        return self.fitted_slope >= self.expected_slope - tol

    def rows(self) -> list[dict]:
        return [
            {"h": h, "z_num_re": z.real, "z_num_im": z.imag, "residual": r,
             "fitted_slope": self.fitted_slope}
            for h, z, r in zip(self.h, self.z_num, self.residuals)
        ]


def _next_nonzero(zt: Sequence[complex], order: int, tol: float) -> int:
    scale = max([1.0] + [abs(z) for z in zt])
    for j in range(order + 1, len(zt) + 1):
        if abs(zt[j - 1]) > tol * scale:
            return j
    return order + 1


def validate_expansion(jet: SymbolJet, expansion: EigenExpansion, hs: Sequence[float],
                       N_cut: int, guard: int | None = None, order: int = 2,
                       gap: float = 2.0, radius_fraction: float = 0.25,
                       zero_tol: float = 1e-9) -> ExpansionFit:
    """Compare diagonalization with h (z0 + sum_{j<=order} z~_j h^(j/2)).

    Eigenvalues are tracked from the largest h downward: each disk is
    centered at the previous eigenvalue rescaled to the new h and has radius
    ``radius_fraction * gap * h``, where ``gap`` is the spacing of the
    unperturbed levels around z0.
    """
    # a wide guard band makes the spurious-mode filter effective
    G = guard if guard is not None else max(jet.max_degree, N_cut // 2)
    basis = FockBasis(jet.dim, N_cut, G)
    hs_sorted = sorted(hs, reverse=True)
    prev: tuple[float, complex] | None = None
    z_num, pred, res = [], [], []
    for h in hs_sorted:
        op = assemble_scaled(jet, h, basis)
        center = expansion.predict(h, order) if prev is None else prev[1] * (h / prev[0])
        radius = radius_fraction * gap * h
        cands = eigen_near(op, center, radius)
        if not cands:
            raise TrackingAmbiguity(h, [])
        if len(cands) > 1:
            raise TrackingAmbiguity(h, cands)
        z = cands[0]
        p = expansion.predict(h, order)
        z_num.append(z)
        pred.append(p)
        res.append(abs(z - p))
        prev = (h, z)
    nxt = _next_nonzero(expansion.ztilde, order, zero_tol)
    expected = 1 + nxt / 2
    rr = np.array(res)
    if np.all(rr > 0) and len(rr) >= 2:
        slope = float(np.polyfit(np.log(hs_sorted), np.log(rr), 1)[0])
    else:
        slope = float("inf")
    return ExpansionFit(tuple(hs_sorted), tuple(z_num), tuple(pred), tuple(res), slope,
                        expected, order)


def sigma_min(A: np.ndarray, z: complex, method: str = "auto", rtol: float = 1e-3) -> float:
    """Smallest singular value of A - z I."""
    m = A.shape[0]
    B = A - z * np.eye(m)
    if method == "svd" or (method == "auto" and m < DENSE_SVD_LIMIT):
        return float(sla.svdvals(B)[-1])
    try:
        lu = sla.lu_factor(B)
    except (ValueError, sla.LinAlgError):
        return 0.0
    rng = np.random.default_rng(0)
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(200):
        w = sla.lu_solve(lu, v)
        w = sla.lu_solve(lu, w, trans=2)
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm == 0:
            return 0.0
        new = 1.0 / math.sqrt(nrm)
        v = w / nrm
        if est and abs(new - est) <= rtol * est:
            return new
        est = new
    return est


@dataclass(frozen=True)
class PseudospectrumGrid:
    h: float
    re: np.ndarray
    im: np.ndarray
    sigma: np.ndarray  # shape (len(im), len(re)); row index = imaginary part

    def points(self) -> np.ndarray:
        return self.re[None, :] + 1j * self.im[:, None]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["re_z", "im_z", "sigma_min"])
            for i, y in enumerate(self.im):
                for k, x in enumerate(self.re):
                    wr.writerow([f"{x:.17g}", f"{y:.17g}", f"{self.sigma[i, k]:.17g}"])
        return path


def pseudospectrum_scan(op: ScaledOperator, rect: Sequence[float], res, workers: int = 1,
                        method: str = "auto") -> PseudospectrumGrid:
    """sigma_min(A - z) on a rectangle (re_min, re_max, im_min, im_max).

    ``res`` is one count for both axes or a pair (n_re, n_im). Rows of
    constant imaginary part are independent work items; results do not
    depend on ``workers``.
    """
    x0, x1, y0, y1 = rect
    nx, ny = (res, res) if np.isscalar(res) else res
    re = np.linspace(x0, x1, int(nx))
    im = np.linspace(y0, y1, int(ny))
    A = op.trusted_matrix()

    def row(i):
        return np.array([sigma_min(A, complex(x, im[i]), method) for x in re])

    if workers <= 1:
        rows = [row(i) for i in range(len(im))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(row, range(len(im))))
    return PseudospectrumGrid(op.h, re, im, np.vstack(rows))


@dataclass(frozen=True)
class RegionReport:
    h: float
    k0: int
    omega_inf: float | None  # inf sigma_min / (h^(2k0/(2k0+1)) |z|^(1/(2k0+1)))
    omega_points: int
    disk_inf: float | None  # inf sigma_min / h
    disk_points: int
    constants: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()


def check_estimate_regions(grid: PseudospectrumGrid, report: QuadraticReport, *,
                           C: float = 2.0, c0: float = 0.1, disk_C: float = 5.0,
                           rho: float = 0.3, p1_0: complex = 0.0,
                           lattice_cap: int = 40) -> RegionReport:
    """Infima of the normalized smallest singular value over both regions.

    The parabolic region is Re z <= h^(2k0/(2k0+1)) |z|^(1/(2k0+1)) / C with
    C h <= |z| <= c0; the disk is |z| <= disk_C h with rho h neighbourhoods of
    the points h (lattice + p1(0)) removed. Empty regions are reported as
    None.
    """
    if report.k0 is None:
        raise ValueError("the singular space is nontrivial, so k0 is undefined")
    h, k0 = grid.h, report.k0
    z = grid.points()
    az = np.abs(z)
    e1 = 2 * k0 / (2 * k0 + 1)
    e2 = 1 / (2 * k0 + 1)
    weight = h ** e1 * az ** e2
    omega = (z.real <= weight / C) & (az >= C * h) & (az <= c0)
    lattice = [h * (v + p1_0) for v, _ in lattice_points(report.spectrum_modes, lattice_cap)]
    disk = az <= disk_C * h
    for lam in lattice:
        disk &= np.abs(z - lam) > rho * h
    notes = []
    o_inf = d_inf = None
    if omega.any():
        o_inf = float(np.min(grid.sigma[omega] / weight[omega]))
    else:
        notes.append("parabolic region contains no grid points")
    if disk.any():
        d_inf = float(np.min(grid.sigma[disk]) / h)
    else:
        notes.append("disk region contains no grid points")
    consts = {"C": C, "c0": c0, "disk_C": disk_C, "rho": rho}
    return RegionReport(h, k0, o_inf, int(omega.sum()), d_inf, int(disk.sum()), consts,
                        tuple(notes))


def region_stability(values: Sequence[float | None], factor: float = 2.0) -> tuple[bool, float]:
    """Whether positive infima agree within ``factor``; returns (ok, max/min)."""
    vals = [v for v in values if v is not None]
    if len(vals) != len(values) or not vals or min(vals) <= 0:
        return False, float("inf")
    ratio = max(vals) / min(vals)
    return bool(ratio <= factor), float(ratio)
