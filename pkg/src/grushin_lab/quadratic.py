"""Linear algebra of the quadratic approximation q at the characteristic point.

Conventions: phase-space vectors are ordered (x_1..x_n, xi_1..xi_n), the
symplectic form is sigma(X, Z) = X^T J Z with J = [[0, -I], [I, 0]] (that is
xi.y - x.eta), and q(X) = X^T M X with M complex symmetric. The Hamilton map
F is defined by q(X; Y) = sigma(X, F Y), so J F = M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.stats import qmc

from .symbols import AssumptionViolation, PhasePolynomial, SymbolJet, _to_complex, symbol_eval

__all__ = [
    "QuadraticForm",
    "HamiltonMap",
    "Sector",
    "SpectralMode",
    "QuadraticReport",
    "GroundStateData",
    "EllipticityResult",
    "SelectionError",
    "UnsupportedCase",
    "symplectic_matrix",
    "hamilton_map",
    "check_elliptic",
    "sigma_q_sector",
    "spectrum_lattice",
    "lattice_points",
    "singular_space_k0",
    "ground_state_Bplus",
    "check_remainder_sector",
    "analyze_quadratic",
    "real_null_space",
]

EPS_RANK = 1e-9
EPS_ELL = 1e-6
ANGLE_SLACK = 1e-8


class SelectionError(RuntimeError):
    """Eigenvalue selection against Sigma(q) is ambiguous or inconsistent."""


class UnsupportedCase(RuntimeError):
    """The input is outside the range the numerical procedures support."""


def symplectic_matrix(n: int) -> np.ndarray:
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


@dataclass(frozen=True)
class QuadraticForm:
    dim: int
    M: np.ndarray

    def __post_init__(self):
        M = np.asarray(self.M, dtype=complex)
        if M.shape != (2 * self.dim, 2 * self.dim):
            raise ValueError(f"M must be {2 * self.dim}x{2 * self.dim}, got {M.shape}")
        object.__setattr__(self, "M", 0.5 * (M + M.T))

    @classmethod
    def from_polynomial(cls, q: PhasePolynomial) -> "QuadraticForm":
        """Quadratic part of ``q``; lower and higher degrees are ignored."""
        n = q.dim
        M = np.zeros((2 * n, 2 * n), dtype=complex)
        for alpha, c in q.homogeneous_part(2).items():
            c = _to_complex(c)
            idx = [i for i, e in enumerate(alpha) for _ in range(e)]
            i, j = idx
            if i == j:
                M[i, i] += c
            else:
                M[i, j] += c / 2
                M[j, i] += c / 2
        return cls(n, M)

    def to_polynomial(self) -> PhasePolynomial:
        n2 = 2 * self.dim
        terms = {}
        for i in range(n2):
            for j in range(i, n2):
                alpha = [0] * n2
                alpha[i] += 1
                alpha[j] += 1
                c = self.M[i, i] if i == j else 2 * self.M[i, j]
                terms[tuple(alpha)] = terms.get(tuple(alpha), 0) + c
        return PhasePolynomial(self.dim, terms)

    def __call__(self, X):
        X = np.asarray(X)
        if X.ndim == 1:
            return complex(X @ self.M @ X)
        return np.einsum("ki,ij,kj->k", X, self.M, X)

    @property
    def real_part(self) -> "QuadraticForm":
        return QuadraticForm(self.dim, self.M.real.astype(complex))

    @property
    def imag_part(self) -> "QuadraticForm":
        return QuadraticForm(self.dim, self.M.imag.astype(complex))

    def conj(self) -> "QuadraticForm":
        return QuadraticForm(self.dim, self.M.conj())

    def check_nonnegative(self, tol: float = 1e-12) -> tuple[bool, np.ndarray | None]:
        """Re q >= 0, decided from the smallest eigenvalue of Re M."""
        w, v = np.linalg.eigh(self.M.real)
        scale = max(1.0, float(np.max(np.abs(w))))
        if w[0] >= -tol * scale:
            return True, None
        return False, v[:, 0]


@dataclass(frozen=True)
class HamiltonMap:
    F: np.ndarray
    J: np.ndarray

    @property
    def dim(self) -> int:
        return self.F.shape[0] // 2

    @property
    def real(self) -> np.ndarray:
        return 0.5 * (self.F + self.F.conj()).real

    @property
    def imag(self) -> np.ndarray:
        return (0.5 * (self.F - self.F.conj()) / 1j).real

    def sigma(self, X, Z):
        return X @ self.J @ Z


def hamilton_map(q: QuadraticForm) -> HamiltonMap:
    J = symplectic_matrix(q.dim)
    # J^{-1} = -J
    return HamiltonMap(-J @ q.M, J)


@dataclass(frozen=True)
class EllipticityResult:
    elliptic: bool
    min_abs: float
    witness: np.ndarray

    def __bool__(self):
        return self.elliptic


def _sphere_samples(dim2: int, count: int, seed: int = 0) -> np.ndarray:
    # Scrambled Sobol points mapped to Gaussians, then normalized.
    sampler = qmc.Sobol(d=dim2, scramble=True, seed=seed)
    m = int(math.ceil(math.log2(max(count, 2))))
    u = sampler.random_base2(m)[:count]
    u = np.clip(u, 1e-12, 1 - 1e-12)
    from scipy.special import ndtri

    g = ndtri(u)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def check_elliptic(q: QuadraticForm, eps: float = EPS_ELL, samples: int | None = None,
                   seed: int = 0) -> EllipticityResult:
    """Minimize |q| over the real unit sphere; elliptic iff the minimum exceeds eps."""
    n2 = 2 * q.dim
    count = samples or 10_000 * q.dim
    pts = _sphere_samples(n2, count, seed)
    vals = np.abs(q(pts))

    def objective(y):
        r = np.linalg.norm(y)
        x = y / r
        return float(abs(x @ q.M @ x) ** 2)

    best_val, best_x = math.inf, None
    for idx in np.argsort(vals)[:5]:
        res = minimize(objective, pts[idx], method="BFGS", options={"gtol": 1e-14})
        x = res.x / np.linalg.norm(res.x)
        v = abs(x @ q.M @ x)
        if v < best_val:
            best_val, best_x = v, x
    if vals.min() < best_val:
        best_val, best_x = float(vals.min()), pts[int(np.argmin(vals))]
    scale = max(1.0, float(np.max(np.abs(q.M))))
    # |q|^2 is flat near a real zero, so tiny components are noise; snap them
    # when that does not increase |q| beyond the acceptance threshold.
    snapped = np.where(np.abs(best_x) < 1e-4, 0.0, best_x)
    snapped = snapped / np.linalg.norm(snapped)
    if abs(snapped @ q.M @ snapped) <= max(best_val, 0.1 * eps * scale):
        best_x, best_val = snapped, abs(snapped @ q.M @ snapped)
    best_x = _canonical_sign(best_x)
    return EllipticityResult(bool(best_val > eps * scale), float(best_val), best_x)


@dataclass(frozen=True)
class Sector:
    """Closed angular sector {r e^{i t}: lo <= t <= hi} with hi - lo < pi."""

    lo: float
    hi: float

    @property
    def axis(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_aperture(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def aperture(self) -> float:
        return self.hi - self.lo

    def offset(self, z: complex) -> float:
        """Signed angular distance of arg z outside the sector (<= 0 inside)."""
        t = math.atan2(z.imag, z.real)
        d = (t - self.axis + math.pi) % (2 * math.pi) - math.pi
        return abs(d) - self.half_aperture

    def contains(self, z: complex, slack: float = ANGLE_SLACK) -> bool:
        return abs(z) > 0 and self.offset(z) <= slack


def sigma_q_sector(q: QuadraticForm, grid: int = 4096) -> Sector:
    """Smallest closed sector containing q(R^{2n}).

    The image of a real quadratic form is a convex cone, so it is cut out by
    the half-planes Re(e^{-i phi} w) >= 0 for which cos(phi) Re M + sin(phi)
    Im M is positive semidefinite. That arc of phi is located on a grid and
    its endpoints refined by root finding; the sector is the arc rotated back
    by pi/2 on each side.
    """
    A, B = q.M.real, q.M.imag
    scale = max(np.max(np.abs(A)), np.max(np.abs(B)), 1e-300)

    def lam(phi):
        return np.linalg.eigvalsh((math.cos(phi) * A + math.sin(phi) * B) / scale)[0]

    phis = np.linspace(-math.pi, math.pi, grid, endpoint=False)
    vals = np.array([lam(p) for p in phis])
    k = int(np.argmax(vals))
    tol = 1e-12
    if vals[k] <= tol:
        raise SelectionError(
            "values of q span an angle >= pi; q is not elliptic with nonnegative real part"
        )
    step = 2 * math.pi / grid

    def edge(direction: int) -> float:
        i = 0
        while vals[(k + direction * (i + 1)) % grid] > 0:
            i += 1
            if i >= grid:
                raise SelectionError("sector is degenerate (q identically zero?)")
        inside = phis[k] + direction * i * step
        outside = inside + direction * step
        if lam(outside) >= 0:
            return outside
        return brentq(lam, min(inside, outside), max(inside, outside), xtol=1e-15)

    d_lo, d_hi = edge(-1), edge(+1)
    lo = d_hi - math.pi / 2
    hi = d_lo + math.pi / 2
    if hi < lo:  # zero aperture up to round-off
        lo = hi = 0.5 * (lo + hi)
    shift = (0.5 * (lo + hi) + math.pi) % (2 * math.pi) - math.pi - 0.5 * (lo + hi)
    return Sector(lo + shift, hi + shift)


@dataclass(frozen=True)
class SpectralMode:
    lam: complex  # eigenvalue of F
    mult: int  # algebraic multiplicity r_lambda

    @property
    def mu(self) -> complex:
        return -1j * self.lam


def _cluster_eigenvalues(w: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    remaining = list(range(len(w)))
    clusters = []
    while remaining:
        i = remaining.pop(0)
        members = [i]
        changed = True
        while changed:
            changed = False
            for j in list(remaining):
                if min(abs(w[j] - w[m]) for m in members) < tol:
                    members.append(j)
                    remaining.remove(j)
                    changed = True
        clusters.append((complex(np.mean(w[members])), len(members)))
    return clusters


def _imaginary_range_on(q: QuadraticForm, basis: np.ndarray) -> tuple[bool, bool]:
    """Whether q|_S takes values in i[0, inf) and/or i(-inf, 0]."""
    MS = basis.T @ q.M @ basis
    if np.max(np.abs(MS.real), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(q.M))):
        raise UnsupportedCase("q restricted to the singular space is not purely imaginary")
    w = np.linalg.eigvalsh(MS.imag)
    scale = max(1.0, np.max(np.abs(q.M)))
    pos = bool(np.any(w > 1e-9 * scale))
    neg = bool(np.any(w < -1e-9 * scale))
    if np.any(np.abs(w) <= 1e-9 * scale):
        raise UnsupportedCase("q is not elliptic on its singular space")
    return pos, neg


def spectrum_lattice(F: HamiltonMap, sector: Sector | None = None, *,
                     q: QuadraticForm | None = None,
                     singular_basis: np.ndarray | None = None,
                     cluster_tol: float = 1e-6) -> list[SpectralMode]:
    """Select the eigenvalues of F that build the spectrum of q^w.

    Elliptic case: lambda with -i lambda in ``sector``. Partially elliptic case
    (``singular_basis`` given, ``q`` required): -i lambda in the open right
    half-plane or in Sigma(q|_S) minus 0.
    """
    w = np.linalg.eigvals(F.F)
    scale = max(1.0, float(np.max(np.abs(w))))
    clusters = _cluster_eigenvalues(w, cluster_tol * scale)
    modes = []
    if singular_basis is None:
        if sector is None:
            raise ValueError("sector is required in the elliptic case")
        for lam, r in clusters:
            mu = -1j * lam
            mu_opp = 1j * lam
            inside = sector.contains(mu)
            if inside and sector.contains(mu_opp):
                raise SelectionError(
                    f"both +/-{lam:.6g} give -i*lambda inside Sigma(q); selection is ambiguous"
                )
            if inside:
                modes.append(SpectralMode(lam, r))
        total = sum(m.mult for m in modes)
        if total != F.dim:
            raise SelectionError(
                f"selected modes have total multiplicity {total}, expected n={F.dim}"
            )
    else:
        if q is None:
            raise ValueError("q is required in the partially elliptic case")
        pos, neg = (False, False)
        if singular_basis.shape[1]:
            pos, neg = _imaginary_range_on(q, singular_basis)
        for lam, r in clusters:
            mu = -1j * lam
            if mu.real > cluster_tol * scale:
                modes.append(SpectralMode(lam, r))
            elif abs(mu.real) <= cluster_tol * scale and abs(mu) > cluster_tol * scale:
                if (mu.imag > 0 and pos) or (mu.imag < 0 and neg):
                    modes.append(SpectralMode(lam, r))
    modes.sort(key=lambda m: (abs(m.mu), math.atan2(m.mu.imag, m.mu.real)))
    return modes


def lattice_points(modes: Sequence[SpectralMode], cap: int, tol: float = 1e-9,
                   ) -> list[tuple[complex, int]]:
    """Points sum (r + 2k) mu with sum k <= cap, and their multiplicities.

    Multiplicity counts each mode of multiplicity r as r independent
    one-dimensional modes, i.e. the number of (k_{lambda,s}) tuples with
    sum_s (1 + 2 k_{lambda,s}) mu_lambda equal to the point. Points are
    sorted by modulus, then argument.
    """
    sub = [m.mu for m in modes for _ in range(m.mult)]
    values: list[complex] = []
    for ks in _bounded_tuples(len(sub), cap):
        values.append(sum((1 + 2 * k) * mu for k, mu in zip(ks, sub)))
    values.sort(key=lambda v: (abs(v), math.atan2(v.imag, v.real)))
    points: list[list] = []
    for v in values:
        for entry in points:
            if abs(entry[0] - v) <= tol * max(1.0, abs(v)):
                entry[1] += 1
                break
        else:
            points.append([v, 1])
    return [(complex(v), m) for v, m in points]


def _bounded_tuples(length: int, cap: int) -> Iterator[tuple[int, ...]]:
    if length == 0:
        yield ()
        return
    for k in range(cap + 1):
        for rest in _bounded_tuples(length - 1, cap - k):
            yield (k, *rest)


def real_null_space(A: np.ndarray, eps: float = EPS_RANK) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of a real matrix.

    Singular values below eps times the largest are treated as zero; an
    identically zero matrix has the whole space as kernel.
    """
    A = np.asarray(A, dtype=float)
    ncols = A.shape[1]
    if A.size == 0 or not np.any(A):
        return np.eye(ncols)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > eps * s[0]))
    return vh[rank:].T.copy()


def singular_space_k0(F: HamiltonMap, eps: float = EPS_RANK) -> tuple[np.ndarray, int | None]:
    """Singular space S and the index k0 (None when S is nontrivial)."""
    ReF, ImF = F.real, F.imag
    n2 = ReF.shape[0]
    norm_im = np.linalg.norm(ImF, 2)
    ImF_n = ImF / norm_im if norm_im > 0 else ImF
    norm_re = np.linalg.norm(ReF, 2)
    ReF_n = ReF / norm_re if norm_re > 0 else ReF
    blocks = []
    power = np.eye(n2)
    k0 = None
    basis = np.eye(n2)
    for j in range(n2):
        blocks.append(ReF_n @ power)
        basis = real_null_space(np.vstack(blocks), eps)
        if basis.shape[1] == 0 and k0 is None:
            k0 = j
            break
        power = power @ ImF_n
    return basis, k0


@dataclass(frozen=True)
class GroundStateData:
    Bplus: np.ndarray
    bottom_eigenvalue: complex
    condition: float  # condition number of the x-block U of the V+ basis
    asymmetry: float  # ||B - B^T|| before symmetrization
    invariance_residual: float


def _generalized_eigenspace(F: np.ndarray, lam: complex, r: int, eps: float) -> np.ndarray:
    """Ker (F - lam)^k grown along the Jordan chain until it has dimension r."""
    n2 = F.shape[0]
    A = F - lam * np.eye(n2)
    power = np.eye(n2, dtype=complex)
    basis = np.zeros((n2, 0), dtype=complex)
    for _ in range(r):
        power = power @ A
        _, s, vh = np.linalg.svd(power)
        ref = max(s[0], 1e-300)
        rank = int(np.sum(s > max(eps * ref, 1e-300)))
        basis = vh[rank:].conj().T
        if basis.shape[1] >= r:
            break
    if basis.shape[1] != r:
        # rank decision failed; fall back to the r smallest singular directions
        basis = vh[n2 - r:].conj().T
    return basis


def ground_state_Bplus(F: HamiltonMap, modes: Sequence[SpectralMode],
                       eps: float = EPS_RANK) -> GroundStateData:
    """Matrix B+ of the positive Lagrangian plane {(x, B+ x)} = sum of V_lambda."""
    n = F.dim
    cols = [
        _generalized_eigenspace(F.F, m.lam, m.mult, max(eps, 1e-9)) for m in modes
    ]
    V = np.hstack(cols)
    if V.shape[1] != n:
        raise SelectionError(f"V+ has dimension {V.shape[1]}, expected {n}")
    U, W = V[:n], V[n:]
    cond = float(np.linalg.cond(U))
    if not np.isfinite(cond) or cond > 1e12:
        raise np.linalg.LinAlgError(
            f"x-block of the V+ basis is singular (condition number {cond:.3g})"
        )
    B = np.linalg.solve(U.T, W.T).T  # W U^{-1}
    asym = float(np.linalg.norm(B - B.T))
    B = 0.5 * (B + B.T)
    w = np.linalg.eigvalsh(B.imag)
    if w[0] <= 1e-12:
        raise SelectionError(f"Im B+ is not positive definite (smallest eigenvalue {w[0]:.3g})")
    plane = np.vstack([np.eye(n), B])
    image = F.F @ plane
    resid = float(np.linalg.norm(image[n:] - B @ image[:n]) / max(1.0, np.linalg.norm(image)))
    bottom = complex(sum(m.mu * m.mult for m in modes))
    return GroundStateData(B, bottom, cond, asym, resid)


def check_remainder_sector(jet: SymbolJet, radius: float = 0.5, samples: int = 20_000,
                           seed: int = 0, margin: float = 1e-9) -> bool:
    """Whether r = p0 - q maps a ball into a closed sector inside Re z > 0.

    Uses the retained Taylor part of p0 on random points of the ball of the
    given radius. Vanishing values are ignored (r = 0 passes trivially).
    """
    r = jet.principal_taylor() - jet.quadratic_part
    if r.is_zero():
        return True
    rng = np.random.default_rng(seed)
    n2 = 2 * jet.dim
    g = rng.standard_normal((samples, n2))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    rad = radius * rng.random(samples) ** (1.0 / n2)
    pts = g * rad[:, None]
    vals = symbol_eval(r, pts)
    big = np.abs(vals)
    keep = big > 1e-13 * max(big.max(), 1e-300)
    if not np.any(keep):
        return True
    angles = np.angle(vals[keep])
    return bool(np.max(np.abs(angles)) < math.pi / 2 - margin)


@dataclass
class QuadraticReport:
    q: QuadraticForm
    hamilton: HamiltonMap
    elliptic: bool
    ellipticity_witness: np.ndarray
    ellipticity_min: float
    sector: Sector | None
    spectrum_modes: list[SpectralMode]
    singular_space_basis: np.ndarray
    k0: int | None
    ground_state: GroundStateData | None
    notes: list[str] = field(default_factory=list)

    @property
    def subelliptic_exponent(self) -> float | None:
        if self.k0 is None:
            return None
        return 2 * self.k0 / (2 * self.k0 + 1)

    def lattice(self, cap: int = 6) -> list[tuple[complex, int]]:
        return lattice_points(self.spectrum_modes, cap)


def analyze_quadratic(q: QuadraticForm, *, seed: int = 0) -> QuadraticReport:
    """Run every quadratic-level analysis; requires Re q >= 0."""
    ok, witness = q.check_nonnegative()
    if not ok:
        raise AssumptionViolation("nonnegative real part", "Re q takes negative values",
                                  witness)
    F = hamilton_map(q)
    ell = check_elliptic(q, seed=seed)
    basis, k0 = singular_space_k0(F)
    notes = []
    if ell.elliptic:
        sector = sigma_q_sector(q)
        modes = spectrum_lattice(F, sector)
        gs = ground_state_Bplus(F, modes)
    else:
        sector, gs = None, None
        try:
            modes = spectrum_lattice(F, q=q, singular_basis=basis)
            notes.append("partially elliptic: spectrum from the singular-space formula")
        except UnsupportedCase as exc:
            modes = []
            notes.append(f"spectrum unsupported: {exc}")
    return QuadraticReport(q, F, ell.elliptic, ell.witness, ell.min_abs, sector, modes,
                           basis, k0, gs, notes)
