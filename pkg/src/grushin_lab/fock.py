"""Truncated Hermite (Fock) representation of Weyl-quantized symbols.

Ladder convention: [a, a^+] = 1, X = (a + a^+)/sqrt(2), D = (a - a^+)/(i sqrt(2)),
so Op(x^2 + xi^2) = 2N + 1.

Truncation bookkeeping: the basis holds all states with |nu| <= L = N_cut + G.
A product of g ladder matrices is exact on the block |nu| <= L - g, which is
what ``trusted_degree`` records. Since states are enumerated by total degree,
every trusted block is a leading block of the matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .symbols import PhasePolynomial, _to_complex

__all__ = [
    "FockBasis",
    "FockOperator",
    "FockVector",
    "TrustExhausted",
    "GaussianProjectionError",
    "build_basis",
    "quantize",
    "apply_chain",
    "project_gaussian",
    "MAX_BASIS_SIZE",
]

MAX_BASIS_SIZE = 200_000


class TrustExhausted(RuntimeError):
    """A computation would read matrix entries corrupted by truncation."""


class GaussianProjectionError(RuntimeError):
    """The Gaussian coefficient recurrence does not define a normalizable state."""


def _states(n: int, L: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(L + 1):
        layer = []
        _compositions(n, deg, (), layer)
        layer.sort()
        out.extend(layer)
    return out


def _compositions(parts: int, total: int, prefix: tuple, sink: list) -> None:
    if parts == 1:
        sink.append(prefix + (total,))
        return
    for first in range(total + 1):
        _compositions(parts - 1, total - first, prefix + (first,), sink)


class FockBasis:
    """All multi-indices nu in N^n with |nu| <= N_cut + G, graded-lex ordered."""

    def __init__(self, n: int, N_cut: int, G: int = 0):
        if n < 1:
            raise ValueError("dimension must be positive")
        if N_cut < 1:
            raise ValueError("N_cut must be at least 1")
        if G < 0:
            raise ValueError("guard must be nonnegative")
        L = N_cut + G
        size = math.comb(L + n, n)
        if size > MAX_BASIS_SIZE:
            raise ValueError(
                f"basis size {size} exceeds the limit {MAX_BASIS_SIZE} (n={n}, N_cut+G={L})"
            )
        self.n = n
        self.N_cut = N_cut
        self.G = G
        self.states = tuple(_states(n, L))
        self.index = {s: i for i, s in enumerate(self.states)}
        self.degrees = np.array([sum(s) for s in self.states])
        self._mono_cache: dict[tuple[tuple[int, ...], str], sp.csr_matrix] = {}

    @property
    def L(self) -> int:
        return self.N_cut + self.G

    @property
    def size(self) -> int:
        return len(self.states)

    M = size

    def block_size(self, degree: int) -> int:
        """Number of states with |nu| <= degree (a leading block)."""
        if degree < 0:
            return 0
        return math.comb(min(degree, self.L) + self.n, self.n)

    def parity_mask(self, parity: int) -> np.ndarray:
        return (self.degrees % 2) == parity

    def __repr__(self):
        return f"FockBasis(n={self.n}, N_cut={self.N_cut}, G={self.G}, M={self.size})"

    # -- ladder matrices ---------------------------------------------------

    @cached_property
    def lowering(self) -> tuple[sp.csr_matrix, ...]:
        mats = []
        for j in range(self.n):
            rows, cols, vals = [], [], []
            for col, s in enumerate(self.states):
                if s[j]:
                    t = s[:j] + (s[j] - 1,) + s[j + 1:]
                    rows.append(self.index[t])
                    cols.append(col)
                    vals.append(math.sqrt(s[j]))
            mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size),
                                      dtype=complex))
        return tuple(mats)

    @cached_property
    def raising(self) -> tuple[sp.csr_matrix, ...]:
        return tuple(a.T.tocsr() for a in self.lowering)

    @cached_property
    def position(self) -> tuple[sp.csr_matrix, ...]:
        return tuple(((a + ad) / math.sqrt(2)).tocsr()
                     for a, ad in zip(self.lowering, self.raising))

    @cached_property
    def momentum(self) -> tuple[sp.csr_matrix, ...]:
        return tuple(((a - ad) / (1j * math.sqrt(2))).tocsr()
                     for a, ad in zip(self.lowering, self.raising))

    def variable(self, v: int) -> sp.csr_matrix:
        """Matrix of the v-th phase-space coordinate (x_1..x_n, xi_1..xi_n)."""
        return self.position[v] if v < self.n else self.momentum[v - self.n]

    def monomial(self, alpha: tuple[int, ...], order: str = "x-first") -> sp.csr_matrix:
        """Sparse Op(X^alpha) via Op(v s) = (V Op(s) + Op(s) V)/2."""
        key = (alpha, order)
        cached = self._mono_cache.get(key)
        if cached is not None:
            return cached
        if not any(alpha):
            out = sp.identity(self.size, dtype=complex, format="csr")
        else:
            nz = [v for v, e in enumerate(alpha) if e]
            v = nz[0] if order == "x-first" else nz[-1]
            rest = alpha[:v] + (alpha[v] - 1,) + alpha[v + 1:]
            inner = self.monomial(rest, order)
            V = self.variable(v)
            out = ((V @ inner + inner @ V) * 0.5).tocsr()
        self._mono_cache[key] = out
        return out


def build_basis(n: int, N_cut: int, G: int = 0) -> FockBasis:
    return FockBasis(n, N_cut, G)


@dataclass(eq=False)
class FockOperator:
    """Dense matrix on a :class:`FockBasis` with truncation metadata.

    ``degree`` is the number of basis levels by which the operator can shift
    a state (its leakage); ``exact`` is False for operators such as the
    reduced inverse whose truncated matrix only approximates the true one.
    """

    basis: FockBasis
    matrix: np.ndarray
    trusted_degree: int
    degree: int = 0
    exact: bool = True

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        m = self.basis.size
        if self.matrix.shape != (m, m):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match basis size {m}")

    @classmethod
    def identity(cls, basis: FockBasis) -> "FockOperator":
        return cls(basis, np.eye(basis.size, dtype=complex), basis.L, 0)

    def trusted_block(self, degree: int | None = None) -> np.ndarray:
        T = self.trusted_degree if degree is None else degree
        k = self.basis.block_size(T)
        return self.matrix[:k, :k]

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.basis, self.matrix.conj().T, self.trusted_degree,
                            self.degree, self.exact)

    @property
    def H(self) -> "FockOperator":
        return self.adjoint()

    def _check(self, other):
        if other.basis is not self.basis:
            raise ValueError("operands live on different bases")

    def __matmul__(self, other):
        if isinstance(other, FockVector):
            return apply_chain([self], other)
        if isinstance(other, FockOperator):
            self._check(other)
            trust = min(self.trusted_degree - other.degree, other.trusted_degree - self.degree)
            return FockOperator(self.basis, self.matrix @ other.matrix, trust,
                                self.degree + other.degree, self.exact and other.exact)
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, FockOperator):
            self._check(other)
            return FockOperator(self.basis, self.matrix + other.matrix,
                                min(self.trusted_degree, other.trusted_degree),
                                max(self.degree, other.degree), self.exact and other.exact)
        if np.isscalar(other):
            return self + FockOperator.identity(self.basis) * other
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1) * other

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return FockOperator(self.basis, self.matrix * scalar, self.trusted_degree,
                            self.degree, self.exact)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1


@dataclass(eq=False)
class FockVector:
    basis: FockBasis
    data: np.ndarray
    trusted_degree: int
    normalized: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.shape != (self.basis.size,):
            raise ValueError(f"vector length {self.data.shape} does not match basis size")

    @classmethod
    def basis_state(cls, basis: FockBasis, nu: Sequence[int]) -> "FockVector":
        data = np.zeros(basis.size, dtype=complex)
        data[basis.index[tuple(nu)]] = 1.0
        return cls(basis, data, basis.L, True)

    @property
    def trusted(self) -> bool:
        return self.trusted_degree >= 0

    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def normalize(self) -> "FockVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.basis, self.data / nrm, self.trusted_degree, True)

    def inner(self, other: "FockVector") -> complex:
        """(self, other) = sum self_i conj(other_i), linear in the first slot."""
        return complex(np.vdot(other.data, self.data))

    def tail_mass(self, degree: int) -> float:
        """Fraction of the squared norm on states with |nu| > degree."""
        k = self.basis.block_size(degree)
        total = float(np.vdot(self.data, self.data).real)
        if total == 0:
            return 0.0
        return float(np.vdot(self.data[k:], self.data[k:]).real) / total

    def __add__(self, other: "FockVector") -> "FockVector":
        return FockVector(self.basis, self.data + other.data,
                          min(self.trusted_degree, other.trusted_degree))

    def __sub__(self, other: "FockVector") -> "FockVector":
        return self + (-1) * other

    def __mul__(self, scalar):
        return FockVector(self.basis, self.data * scalar, self.trusted_degree)

    __rmul__ = __mul__


def quantize(a: PhasePolynomial, basis: FockBasis, order: str = "x-first") -> FockOperator:
    """Weyl quantization of a polynomial symbol on the extended grid.

    The result is exact on states with |nu| <= N_cut + G - deg(a). Symbols of
    degree above the guard are refused since their trusted block would not
    cover the cutoff.
    """
    if a.dim != basis.n:
        raise ValueError(f"symbol dimension {a.dim} does not match basis dimension {basis.n}")
    if order not in ("x-first", "xi-first"):
        raise ValueError(f"unknown recursion order {order!r}")
    deg = max(a.degree, 0)
    if deg > basis.G:
        raise TrustExhausted(
            f"symbol degree {deg} exceeds the guard G={basis.G}; enlarge the guard"
        )
    acc = sp.csr_matrix((basis.size, basis.size), dtype=complex)
    for alpha, c in a.items():
        acc = acc + _to_complex(c) * basis.monomial(alpha, order)
    return FockOperator(basis, acc.toarray(), basis.L - deg, deg)


def apply_chain(ops: Sequence[FockOperator], v: FockVector, min_trust: int = 0) -> FockVector:
    """Apply ``ops[0]`` first, then ``ops[1]``, and so on.

    Each factor lowers the vector's trusted degree by its leakage and caps it
    at the factor's own trusted degree. Raises :class:`TrustExhausted` if the
    trust would fall below ``min_trust``.
    """
    data = v.data
    trust = v.trusted_degree
    for i, op in enumerate(ops):
        if op.basis is not v.basis:
            raise ValueError("operator and vector live on different bases")
        trust = min(trust - op.degree, op.trusted_degree)
        if trust < min_trust:
            raise TrustExhausted(
                f"trusted degree fell to {trust} < {min_trust} after factor {i}; "
                "enlarge the guard"
            )
        data = op.matrix @ data
    return FockVector(v.basis, data, trust)


def project_gaussian(Bplus: np.ndarray, basis: FockBasis) -> FockVector:
    """Normalized Hermite coefficients of exp((i/2) <x, B x>), Im B > 0.

    The state equals exp(-1/2 a^+ . C a^+)|0> with C = (B - i)(B + i)^{-1},
    so (a_j + sum_k C_jk a_k^+) u = 0, which gives for nu = mu + e_j

        sqrt(nu_j) c_nu = - sum_k C_jk sqrt(mu_k) c_{mu - e_k}.
    """
    B = np.atleast_2d(np.asarray(Bplus, dtype=complex))
    n = basis.n
    if B.shape != (n, n):
        raise ValueError(f"B must be {n}x{n}")
    if np.linalg.eigvalsh(0.5 * (B.imag + B.imag.T))[0] <= 0:
        raise GaussianProjectionError("Im B is not positive definite")
    eye = np.eye(n)
    cond = np.linalg.cond(B + 1j * eye)
    C = np.linalg.solve((B + 1j * eye).T, (B - 1j * eye).T).T
    C = 0.5 * (C + C.T)
    cnorm = np.linalg.norm(C, 2)
    if cnorm >= 1 - 1e-12:
        raise GaussianProjectionError(
            f"recurrence diverges: ||C|| = {cnorm:.6g} >= 1 (cond(B + i) = {cond:.3g})"
        )
    c = np.zeros(basis.size, dtype=complex)
    c[0] = 1.0
    for idx, nu in enumerate(basis.states[1:], start=1):
        j = next(i for i, e in enumerate(nu) if e)
        mu = nu[:j] + (nu[j] - 1,) + nu[j + 1:]
        acc = 0j
        for k in range(n):
            if mu[k]:
                lower = mu[:k] + (mu[k] - 1,) + mu[k + 1:]
                acc += C[j, k] * math.sqrt(mu[k]) * c[basis.index[lower]]
        c[idx] = -acc / math.sqrt(nu[j])
    if not np.all(np.isfinite(c)):
        raise GaussianProjectionError(f"non-finite coefficients (cond(B + i) = {cond:.3g})")
    return FockVector(basis, c / np.linalg.norm(c), basis.L, True)
