"""Grushin reduction on the truncated Hermite model.

Inner products follow the L^2 convention (u, v) = v^H u, linear in the first
slot. Kernel bases are orthonormal with the phase of each vector fixed so its
largest-magnitude coefficient is real and positive.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import qmc

from .fock import FockBasis, FockOperator, FockVector, TrustExhausted, apply_chain, quantize
from .symbols import AkFamily, SpectralParameter, SymbolJet, build_ak_family, symbol_parity

__all__ = [
    "GrushinSystem",
    "EffectiveMatrixFamily",
    "EigenExpansion",
    "LocalizationResult",
    "ParityAudit",
    "GrushinResiduals",
    "KernelMismatch",
    "PairingDegenerate",
    "ConditioningWarning",
    "compositions",
    "default_guard",
    "quantize_family",
    "compute_kernels",
    "reduced_inverse",
    "build_correctors",
    "build_system",
    "effective_direct",
    "effective_family",
    "omega_samples",
    "criterion_over_omega",
    "localization_N0_1",
    "ztilde_sequence",
    "parity_audit",
    "grushin_residuals",
    "EPS_RANK",
]

EPS_RANK = 1e-8


class KernelMismatch(RuntimeError):
    def __init__(self, found: int, expected: int):
        super().__init__(
            f"kernel dimension {found} differs from the expected multiplicity {expected}; "
            "increase N_cut or check z0"
        )
        self.found = found
        self.expected = expected


class PairingDegenerate(RuntimeError):
    """(phi_1, psi_1) vanishes, so the scalar expansion is undefined."""


class ConditioningWarning(UserWarning):
    pass


def default_guard(N0: int) -> int:
    """Total symbol degree along the longest corrector chain."""
    return (2 * N0 + 2) * (N0 + 3)


def compositions(j: int) -> Iterable[tuple[int, ...]]:
    """All ordered tuples of positive integers summing to j (2^(j-1) of them)."""
    if j == 0:
        yield ()
        return
    for first in range(1, j + 1):
        for rest in compositions(j - first):
            yield (first, *rest)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


@dataclass(frozen=True)
class QuantizedFamily:
    """Operators for a_0..a_J and the z-free parts; index k is a_k."""

    a: tuple[FockOperator, ...]
    tilde: tuple[FockOperator, ...]
    z: tuple[complex, ...]

    @property
    def J(self) -> int:
        return len(self.a) - 1


def quantize_family(ak: AkFamily, basis: FockBasis) -> QuantizedFamily:
    tilde = tuple(quantize(t, basis) for t in ak.tilde)
    a = tuple(t - complex(z) for t, z in zip(tilde, ak.z))
    # a constant shift adds no leakage
    a = tuple(replace(op, degree=t.degree, trusted_degree=t.trusted_degree)
              for op, t in zip(a, tilde))
    return QuantizedFamily(a, tilde, tuple(complex(z) for z in ak.z))


@dataclass(frozen=True)
class GrushinSystem:
    basis: FockBasis
    Q: FockOperator
    Phi: tuple[FockVector, ...]
    Psi: tuple[FockVector, ...]
    Smat: FockOperator
    singular_values: np.ndarray
    correctors_plus: tuple[tuple[FockVector, ...], ...] = ()
    correctors_minus: tuple[tuple[FockVector, ...], ...] = ()
    A: tuple[np.ndarray, ...] = ()
    family: QuantizedFamily | None = None

    @property
    def d(self) -> int:
        return len(self.Phi)

    @property
    def J(self) -> int:
        return len(self.A)

    @property
    def Phi_matrix(self) -> np.ndarray:
        return np.column_stack([v.data for v in self.Phi])

    @property
    def Psi_matrix(self) -> np.ndarray:
        return np.column_stack([v.data for v in self.Psi])

    def A_j(self, j: int) -> np.ndarray:
        if not 1 <= j <= self.J:
            raise IndexError(f"A_j is defined for 1 <= j <= {self.J}")
        return self.A[j - 1]

    def pairing(self) -> np.ndarray:
        """Matrix ((phi_l, psi_k))_{k,l}."""
        return self.Psi_matrix.conj().T @ self.Phi_matrix


def compute_kernels(Qop: FockOperator, expected_d: int | None = None,
                    eps_rank: float = EPS_RANK):
    """Orthonormal bases of Ker Q and Ker Q^* from one SVD of the full matrix.

    Returns (Phi, Psi, d, svd) where svd = (U, s, Vh) is kept for the
    reduced inverse.
    """
    U, s, Vh = np.linalg.svd(Qop.matrix)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    small = s < eps_rank * smax
    d = int(np.sum(small))
    if expected_d is not None and d != expected_d:
        raise KernelMismatch(d, expected_d)
    basis = Qop.basis
    phi = [FockVector(basis, _fix_phase(Vh[i].conj()), basis.L, True)
           for i in np.nonzero(small)[0]]
    psi = [FockVector(basis, _fix_phase(U[:, i]), basis.L, True)
           for i in np.nonzero(small)[0]]
    return tuple(phi), tuple(psi), d, (U, s, Vh)


def reduced_inverse(Qop: FockOperator, svd=None, eps_rank: float = EPS_RANK) -> FockOperator:
    """Moore-Penrose pseudoinverse of the truncated Q.

    Its truncated matrix only approximates the true reduced inverse, so the
    result is marked inexact; it adds no degree leakage.
    """
    U, s, Vh = svd if svd is not None else np.linalg.svd(Qop.matrix)
    smax = s[0] if s.size and s[0] > 0 else 1.0
    keep = s >= eps_rank * smax
    if keep.any() and s[keep].min() < 10 * eps_rank * smax:
        warnings.warn(
            f"smallest retained singular value {s[keep].min():.3g} is within a factor 10 "
            "of the rank threshold", ConditioningWarning, stacklevel=2)
    S = (Vh[keep].conj().T / s[keep]) @ U[:, keep].conj().T
    return FockOperator(Qop.basis, S, Qop.basis.L, 0, exact=False)


def _chain_degrees(degrees: Sequence[int], J: int) -> list[int]:
    """Largest accumulated leakage over chains building the j-th corrector."""
    worst = [0] * (J + 1)
    for j in range(1, J + 1):
        worst[j] = max(degrees[k] + worst[j - k] for k in range(1, j + 1))
    return worst


def _check_trust(system: GrushinSystem, fam: QuantizedFamily) -> None:
    basis = system.basis
    worst = _chain_degrees([op.degree for op in fam.a], fam.J)
    needed = worst[-1]
    trust = basis.L - needed
    if trust < basis.N_cut:
        raise TrustExhausted(
            f"corrector chains leak up to degree {needed}, leaving trusted degree {trust} "
            f"< N_cut={basis.N_cut}; use a guard of at least {needed}"
        )


def _correctors(phi: np.ndarray, psi: np.ndarray, S: np.ndarray,
                a_mats: Sequence[np.ndarray], J: int):
    """Recursions for phi+, psi- and A_j on dense arrays (columns = l)."""
    plus = [phi]
    minus = [psi]
    A = []
    SH = S.conj().T
    for j in range(1, J + 1):
        r = sum(a_mats[k] @ plus[j - k] for k in range(1, j + 1))
        A.append(-(psi.conj().T @ r))
        plus.append(-(S @ r))
        rm = sum(a_mats[k].conj().T @ minus[j - k] for k in range(1, j + 1))
        minus.append(-(SH @ rm))
    return plus, minus, A


def build_correctors(system: GrushinSystem, fam: QuantizedFamily) -> GrushinSystem:
    """phi+_{j,l}, psi-_{j,l} and A_j for j = 1..J by the step-by-step recursion."""
    _check_trust(system, fam)
    basis = system.basis
    mats = [op.matrix for op in fam.a]
    plus, minus, A = _correctors(system.Phi_matrix, system.Psi_matrix, system.Smat.matrix,
                                 mats, fam.J)
    worst = _chain_degrees([op.degree for op in fam.a], fam.J)
    cp = tuple(tuple(FockVector(basis, plus[j][:, l], basis.L - worst[j])
                     for l in range(system.d)) for j in range(fam.J + 1))
    cm = tuple(tuple(FockVector(basis, minus[j][:, l], basis.L - worst[j])
                     for l in range(system.d)) for j in range(fam.J + 1))
    return replace(system, correctors_plus=cp, correctors_minus=cm, A=tuple(A), family=fam)


def build_system(jet: SymbolJet, zp: SpectralParameter, N_cut: int, guard: int | None = None,
                 expected_d: int | None = None, eps_rank: float = EPS_RANK) -> GrushinSystem:
    """Quantize the a_k family, find kernels, invert and run the recursions."""
    G = default_guard(jet.N0) if guard is None else guard
    basis = FockBasis(jet.dim, N_cut, G)
    ak = build_ak_family(jet, zp)
    fam = quantize_family(ak, basis)
    Q = fam.a[0]
    Phi, Psi, d, svd = compute_kernels(Q, expected_d, eps_rank)
    if d == 0:
        raise KernelMismatch(0, expected_d if expected_d is not None else 1)
    S = reduced_inverse(Q, svd, eps_rank)
    system = GrushinSystem(basis, Q, Phi, Psi, S, svd[1])
    return build_correctors(system, fam)


def effective_direct(system: GrushinSystem, fam: QuantizedFamily, j: int) -> np.ndarray:
    """A_j from the closed composition formula, chain by chain.

    For each composition (k_1..k_i) of j the vector a_{k_1} S a_{k_2} ... S
    a_{k_i} phi_l is built right to left through :func:`apply_chain`.
    """
    d = system.d
    out = np.zeros((d, d), dtype=complex)
    N = system.basis.N_cut
    for comp in compositions(j):
        ops: list[FockOperator] = []
        for idx, k in enumerate(reversed(comp)):
            if idx:
                ops.append(system.Smat)
            ops.append(fam.a[k])
        sign = (-1) ** len(comp)
        for l in range(d):
            v = apply_chain(ops, system.Phi[l], min_trust=N)
            for k in range(d):
                out[k, l] += sign * v.inner(system.Psi[k])
    return out


@dataclass(frozen=True)
class EffectiveMatrixFamily:
    N0: int
    A: tuple[np.ndarray, ...]

    def __call__(self, h: float) -> np.ndarray:
        return sum(Aj * h ** (1 + (j + 1) / 2) for j, Aj in enumerate(self.A))

    def margin(self, h: float) -> float:
        """sigma_min(E(h)) / h^(N0/2 + 1)."""
        E = self(h)
        return float(np.linalg.svd(E, compute_uv=False)[-1] / h ** (self.N0 / 2 + 1))

    def margins(self, hs: Sequence[float]) -> np.ndarray:
        return np.array([self.margin(h) for h in hs])


def effective_family(system: GrushinSystem, N0: int) -> EffectiveMatrixFamily:
    return EffectiveMatrixFamily(N0, system.A)


def _fit_slope(hs, vals) -> float:
    hs = np.asarray(hs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if len(hs) < 2 or np.any(vals <= 0):
        return float("inf") if np.any(vals <= 0) else 0.0
    return float(np.polyfit(np.log(hs), np.log(vals), 1)[0])


def omega_samples(box: Sequence, J: int, per_axis: int = 5, interior: int = 100,
                  cap: int = 4096, seed: int = 0) -> np.ndarray:
    """Sample points (z_1..z_J) of a compact box.

    ``box[k-1]`` is either a complex number (fixed coordinate) or a pair of
    intervals ``((re_lo, re_hi), (im_lo, im_hi))``. A tensor grid of
    ``per_axis`` points on every non-degenerate real axis is used when it has
    at most ``cap`` points, otherwise ``cap`` of its points are drawn at
    random; ``interior`` quasi-random points are appended.
    """
    if len(box) != J:
        raise ValueError(f"box has {len(box)} coordinates, expected {J}")
    axes = []  # (k, part, lo, hi)
    base = np.zeros(J, dtype=complex)
    for k, spec in enumerate(box):
        if isinstance(spec, (int, float, complex, np.number)):
            base[k] = complex(spec)
            continue
        (rl, rh), (il, ih) = spec
        base[k] = complex(rl, il)
        if rh > rl:
            axes.append((k, 0, rl, rh))
        if ih > il:
            axes.append((k, 1, il, ih))
    if not axes:
        return base[None, :]
    rng = np.random.default_rng(seed)
    D = len(axes)
    grids = [np.linspace(lo, hi, per_axis) for (_, _, lo, hi) in axes]
    total = per_axis ** D
    if total <= cap:
        coords = np.array(list(itertools.product(*grids)))
    else:
        flat = rng.choice(total, size=cap, replace=False)
        idx = np.array(np.unravel_index(flat, (per_axis,) * D)).T
        coords = np.array([[grids[a][i] for a, i in enumerate(row)] for row in idx])
    if interior:
        # draw a power-of-two block to keep Sobol balance, then truncate
        m = max(1, math.ceil(math.log2(interior)))
        sob = qmc.Sobol(D, scramble=True, seed=seed).random_base2(m)[:interior]
        lo = np.array([a[2] for a in axes])
        hi = np.array([a[3] for a in axes])
        coords = np.vstack([coords, lo + sob * (hi - lo)])
    pts = np.repeat(base[None, :], len(coords), axis=0)
    for a, (k, part, _, _) in enumerate(axes):
        if part == 0:
            pts[:, k] = coords[:, a] + 1j * pts[:, k].imag
        else:
            pts[:, k] = pts[:, k].real + 1j * coords[:, a]
    return pts


@dataclass(frozen=True)
class CriterionResult:
    satisfied: bool
    inf_margin: float
    worst_point: np.ndarray
    slope: float
    margins: np.ndarray  # shape (samples, len(hs))
    hs: tuple[float, ...]
    tol: float


def criterion_over_omega(system: GrushinSystem, N0: int, hs: Sequence[float],
                         samples: np.ndarray, tol: float = 1e-8,
                         slope_limit: float = 0.25) -> CriterionResult:
    """Evaluate sigma_min(E(h)) / h^(N0/2+1) over Omega samples and an h grid.

    The recursion is rerun per sample with a_k = a~_k - z_k. The criterion is
    declared satisfied when the infimum exceeds ``tol`` and the margin at the
    worst sample does not decay like a positive power of h (fitted log-log
    slope below ``slope_limit``).
    """
    fam = system.family
    if fam is None:
        raise ValueError("system has no quantized family; run build_correctors first")
    tilde = [op.matrix for op in fam.tilde]
    eye = np.eye(system.basis.size)
    phi, psi, S = system.Phi_matrix, system.Psi_matrix, system.Smat.matrix
    margins = np.zeros((len(samples), len(hs)))
    for s_idx, zs in enumerate(samples):
        mats = [tilde[0] - fam.z[0] * eye] + [tilde[k] - zs[k - 1] * eye
                                               for k in range(1, fam.J + 1)]
        _, _, A = _correctors(phi, psi, S, mats, fam.J)
        fam_e = EffectiveMatrixFamily(N0, tuple(A))
        margins[s_idx] = fam_e.margins(hs)
    inf_per_sample = margins.min(axis=1)
    worst = int(np.argmin(inf_per_sample))
    inf_margin = float(inf_per_sample[worst])
    slope = _fit_slope(hs, margins[worst]) if inf_margin > 0 else float("inf")
    ok = bool(inf_margin > tol and slope < slope_limit)
    return CriterionResult(ok, inf_margin, samples[worst], slope, margins, tuple(hs), tol)


@dataclass(frozen=True)
class LocalizationResult:
    d0: int
    Lambda: tuple[complex, ...]
    classification: str
    identically_singular: bool
    A0: np.ndarray
    A1_at_0: np.ndarray

    def A1(self, z1: complex) -> np.ndarray:
        """A_1(z_1) = A_1(0) - z_1 A_0, whose roots in z_1 form Lambda."""
        return self.A1_at_0 - z1 * self.A0

    def holds_at(self, z1: complex, tol: float = 1e-10) -> bool:
        s = np.linalg.svd(self.A1(z1), compute_uv=False)
        return bool(s[-1] > tol * max(1.0, s[0]))


def localization_N0_1(system: GrushinSystem, fam: QuantizedFamily | None = None,
                      tol: float = 1e-10) -> LocalizationResult:
    """Pencil z_1 -> A_1(0) - z_1 A_0 with A_0 = ((phi_l, psi_k)).

    A_1(0) uses the z-free symbol a~_1. Lambda lists the finite generalized
    eigenvalues of (A_1(0), A_0).
    """
    fam = fam or system.family
    if fam is None:
        raise ValueError("quantized family required")
    Phi, Psi = system.Phi_matrix, system.Psi_matrix
    A0 = Psi.conj().T @ Phi
    A1 = Psi.conj().T @ fam.tilde[1].matrix @ Phi
    s0 = np.linalg.svd(A0, compute_uv=False)
    d0 = int(np.sum(s0 > tol * max(1.0, float(np.max(np.abs(A1), initial=0.0)))))
    rng = np.random.default_rng(0)
    probes = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    scale = max(1.0, np.linalg.norm(A0), np.linalg.norm(A1))
    ident = all(np.linalg.svd(A1 - z * A0, compute_uv=False)[-1] < tol * scale * (1 + abs(z))
                for z in probes)
    Lam: tuple[complex, ...] = ()
    if not ident and d0 > 0:
        alpha, beta = sla.eig(A1, A0, right=False, homogeneous_eigvals=True)
        finite = np.abs(beta) > tol * np.maximum(np.abs(alpha), 1.0)
        Lam = tuple(sorted((complex(a / b) for a, b in zip(alpha[finite], beta[finite])),
                           key=lambda z: (round(z.real, 12), round(z.imag, 12))))
    if ident:
        cls = "identically singular: the estimate fails for every z1"
    elif d0 == 0:
        cls = ("zero pairing, A_1(0) invertible: estimate holds for every z1"
               if system.d and np.linalg.svd(A1, compute_uv=False)[-1] > tol * scale
               else "zero pairing, A_1(0) singular: estimate fails for every z1")
    else:
        cls = f"pairing of rank {d0}: estimate holds exactly for z1 outside Lambda"
    return LocalizationResult(d0, Lam, cls, bool(ident), A0, A1)


@dataclass(frozen=True)
class EigenExpansion:
    z0: complex
    ztilde: tuple[complex, ...]  # z~_1 .. z~_J
    pairing: complex
    d_ok: bool = True
    pairing_ok: bool = True
    parity_even: bool = False

    def coefficient(self, j: int) -> complex:
        return self.ztilde[j - 1]

    def lambda_kj(self, j: int) -> complex:
        """Coefficient of h^(1+j) in the eigenvalue, equal to z~_{2j}."""
        return self.ztilde[2 * j - 1]

    def predict(self, h: float, order: int | None = None) -> complex:
        """h (z0 + sum_{j<=order} z~_j h^(j/2))."""
        J = len(self.ztilde) if order is None else order
        return h * (self.z0 + sum(self.ztilde[j - 1] * h ** (j / 2) for j in range(1, J + 1)))


def ztilde_sequence(system: GrushinSystem, fam: QuantizedFamily | None = None,
                    pairing_tol: float = 1e-8) -> EigenExpansion:
    """Coefficients z~_1..z~_J of the eigenvalue expansion (d = 1).

    Every chain factor is a~_k - z~_k with the previously computed z~_k; the
    leading term uses a~_j alone.
    """
    fam = fam or system.family
    if fam is None:
        raise ValueError("quantized family required")
    if system.d != 1:
        raise NotImplementedError(f"scalar expansion needs d = 1, got d = {system.d}")
    phi, psi = system.Phi[0], system.Psi[0]
    pairing = phi.inner(psi)
    if abs(pairing) < pairing_tol:
        raise PairingDegenerate(f"pairing degenerate: |(phi, psi)| = {abs(pairing):.3g}")
    N = system.basis.N_cut
    zt: list[complex] = []
    shifted: dict[int, FockOperator] = {}
    for j in range(1, fam.J + 1):
        acc = apply_chain([fam.tilde[j]], phi, min_trust=N).inner(psi)
        for comp in compositions(j):
            if len(comp) < 2:
                continue
            ops: list[FockOperator] = []
            for idx, k in enumerate(reversed(comp)):
                if idx:
                    ops.append(system.Smat)
                ops.append(shifted[k])
            sign = (-1) ** (len(comp) + 1)
            acc += sign * apply_chain(ops, phi, min_trust=N).inner(psi)
        zj = complex(acc / pairing)
        zt.append(zj)
        op = fam.tilde[j] - zj
        shifted[j] = replace(op, degree=fam.tilde[j].degree,
                             trusted_degree=fam.tilde[j].trusted_degree)
    even = all(np.allclose(v.data[system.basis.parity_mask(1)], 0, atol=1e-10)
               for v in (phi, psi))
    return EigenExpansion(fam.z[0], tuple(zt), complex(pairing), True, True, bool(even))


@dataclass(frozen=True)
class ParityAudit:
    performed: bool
    reason: str
    kernel_parity: tuple[str, ...] = ()
    same_parity: bool | None = None
    vanishing_indices: tuple[int, ...] = ()
    max_vanishing_norm: float = 0.0
    smat_leakage: float = 0.0

    @property
    def passed(self) -> bool:
        return self.performed and self.max_vanishing_norm < 1e-10 and self.smat_leakage < 1e-10


def _vector_parity(v: FockVector, tol: float) -> str:
    odd = v.basis.parity_mask(1)
    n_odd = np.linalg.norm(v.data[odd])
    n_even = np.linalg.norm(v.data[~odd])
    if n_odd <= tol * max(n_even, 1e-300):
        return "even"
    if n_even <= tol * max(n_odd, 1e-300):
        return "odd"
    return "mixed"


def parity_audit(system: GrushinSystem, ak: AkFamily, tol: float = 1e-10,
                 probe_states: int = 8) -> ParityAudit:
    """Check the vanishing pattern of A_j predicted by kernel parities."""
    parities = tuple(_vector_parity(v, tol) for v in (*system.Phi, *system.Psi))
    if "mixed" in parities:
        return ParityAudit(False, "kernel vectors of mixed parity; audit skipped", parities)
    for k, a in enumerate(ak.a):
        want = "even" if k % 2 == 0 else "odd"
        got = symbol_parity(a)
        if got != want and not a.is_zero():
            return ParityAudit(False, f"a_{k} is {got}, expected {want} "
                               "(odd-index spectral terms must vanish)", parities)
    same = len(set(parities)) == 1
    start = 1 if same else 2
    idx = tuple(range(start, system.J + 1, 2))
    worst = max((float(np.linalg.norm(system.A_j(j))) for j in idx), default=0.0)
    basis = system.basis
    odd = basis.parity_mask(1)
    leak = 0.0
    S = system.Smat.matrix
    for i in range(min(probe_states, basis.block_size(basis.N_cut))):
        col = S[:, i]
        wrong = odd if basis.degrees[i] % 2 == 0 else ~odd
        nrm = np.linalg.norm(col)
        if nrm > 0:
            leak = max(leak, float(np.linalg.norm(col[wrong]) / nrm))
    reason = "same parity: odd-index A_j vanish" if same else \
        "opposite parity: even-index A_j vanish"
    return ParityAudit(True, reason, parities, same, idx, worst, leak)


@dataclass(frozen=True)
class GrushinResiduals:
    h: float
    normalization: float  # ||R+ E+ - I||
    right_inverse: float  # ||sum h^(1+k/2) a_k E+ + R- E||
    left_inverse: float  # adjoint side of the previous identity
    reduced_identity: float  # ||S a_0 + E+ R+ - I|| on the trusted block


def grushin_residuals(system: GrushinSystem, h: float) -> GrushinResiduals:
    """Residual norms of the four approximate Grushin identities at h."""
    fam = system.family
    if fam is None:
        raise ValueError("run build_correctors first")
    J = fam.J
    basis = system.basis
    k = basis.block_size(basis.N_cut)
    Phi, Psi = system.Phi_matrix, system.Psi_matrix
    plus = [np.column_stack([v.data for v in row]) for row in system.correctors_plus]
    minus = [np.column_stack([v.data for v in row]) for row in system.correctors_minus]
    Eplus = sum(plus[j] * h ** (j / 2) for j in range(J + 1))
    Eminus_vecs = sum(minus[j] * h ** (j / 2) for j in range(J + 1))
    E = sum(system.A[j - 1] * h ** (1 + j / 2) for j in range(1, J + 1))
    P = sum(fam.a[j].matrix * h ** (1 + j / 2) for j in range(J + 1))
    d = system.d
    norm_res = np.linalg.norm(Phi.conj().T @ Eplus - np.eye(d), 2)
    col = P @ Eplus + Psi @ E
    right = np.linalg.norm(col[:k], 2)
    # rows of E- P + E R+ as vectors: P^H psi-(h)_l + sum_k conj(E_lk) phi_k
    rows = P.conj().T @ Eminus_vecs + Phi @ E.conj().T
    left = np.linalg.norm(rows[:k], 2)
    S, Q = system.Smat.matrix, system.Q.matrix
    R = S[:k] @ Q[:, :k] + Eplus[:k] @ Phi[:k].conj().T - np.eye(k)
    reduced = np.linalg.norm(R, 2)
    return GrushinResiduals(h, float(norm_res), float(right), float(left), float(reduced))
