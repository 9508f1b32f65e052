"""Polynomial phase-space symbols and their Weyl calculus.

A symbol on R^{2n} is stored as a finite map from exponent tuples
``(x_1..x_n, xi_1..xi_n)`` to coefficients. Coefficients are Python complex
numbers by default; ``exact=True`` switches to Gaussian rationals (sympy's
``QQ_I``) so that star-product identities can be checked without round-off.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Number
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from sympy.polys.domains import QQ, QQ_I

__all__ = [
    "MultiIndex",
    "PhasePolynomial",
    "SymbolJet",
    "SpectralParameter",
    "AkFamily",
    "star",
    "commutator",
    "poisson_bracket",
    "build_ak_family",
    "symbol_parity",
    "symbol_eval",
    "AssumptionViolation",
]

# Coefficients below this magnitude are dropped from float polynomials.
_FLOAT_FLOOR = 1e-300


class AssumptionViolation(ValueError):
    """A standing hypothesis on the symbol does not hold.

    ``role`` names the hypothesis (e.g. ``"double characteristic"``).
    """

    def __init__(self, role: str, message: str, witness=None):
        super().__init__(f"{role}: {message}")
        self.role = role
        self.witness = witness


@dataclass(frozen=True, order=True)
class MultiIndex:
    exponents: tuple[int, ...]

    def __post_init__(self):
        if any(e < 0 for e in self.exponents):
            raise ValueError(f"negative exponent in {self.exponents}")
        if len(self.exponents) % 2:
            raise ValueError("multi-index length must be even (2n)")

    @property
    def dim(self) -> int:
        return len(self.exponents) // 2

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(e) for e in self.exponents)


def _is_exact_scalar(c) -> bool:
    return isinstance(c, (int, Fraction)) or type(c) is type(QQ_I.one)


def _to_exact(c):
    if type(c) is type(QQ_I.one):
        return c
    if isinstance(c, (bool, int)):
        return QQ_I(int(c), 0)
    if isinstance(c, Fraction):
        return QQ_I(QQ(c.numerator, c.denominator), 0)
    if isinstance(c, complex):
        re, im = Fraction(c.real), Fraction(c.imag)
        return QQ_I(QQ(re.numerator, re.denominator), QQ(im.numerator, im.denominator))
    if isinstance(c, (float, np.floating)):
        f = Fraction(float(c))
        return QQ_I(QQ(f.numerator, f.denominator), 0)
    if isinstance(c, np.complexfloating):
        return _to_exact(complex(c))
    raise TypeError(f"cannot convert {c!r} to an exact coefficient")


def _to_complex(c) -> complex:
    if type(c) is type(QQ_I.one):
        return complex(float(c.x), float(c.y))
    return complex(c)


def _graded_lex_key(alpha: tuple[int, ...]):
    return (sum(alpha), alpha)


class PhasePolynomial:
    """Complex polynomial in the 2n phase-space variables (x, xi).

    Instances are immutable values. Arithmetic with Python numbers is
    supported; ``a * b`` is the pointwise product, use :func:`star` for the
    composition product.
    """

    __slots__ = ("_dim", "_terms", "_exact")

    def __init__(self, dim: int, terms: Mapping[tuple[int, ...], object] | None = None,
                 exact: bool = False):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self._dim = int(dim)
        self._exact = bool(exact)
        clean: dict[tuple[int, ...], object] = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != 2 * dim:
                raise ValueError(f"exponent {alpha} does not match dimension n={dim}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = _to_exact(c) if exact else complex(_to_complex(c))
            if alpha in clean:
                c = clean[alpha] + c
            clean[alpha] = c
        if exact:
            self._terms = {a: c for a, c in clean.items() if c != QQ_I.zero}
        else:
            self._terms = {a: c for a, c in clean.items() if abs(c) >= _FLOAT_FLOOR}

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, exact: bool = False) -> "PhasePolynomial":
        return cls(dim, {}, exact)

    @classmethod
    def constant(cls, dim: int, value, exact: bool = False) -> "PhasePolynomial":
        return cls(dim, {(0,) * (2 * dim): value}, exact)

    @classmethod
    def monomial(cls, alpha: Sequence[int], coef=1, exact: bool = False) -> "PhasePolynomial":
        return cls(len(alpha) // 2, {tuple(alpha): coef}, exact)

    @classmethod
    def x(cls, j: int, dim: int = 1, exact: bool = False) -> "PhasePolynomial":
        alpha = [0] * (2 * dim)
        alpha[j] = 1
        return cls.monomial(alpha, 1, exact)

    @classmethod
    def xi(cls, j: int, dim: int = 1, exact: bool = False) -> "PhasePolynomial":
        alpha = [0] * (2 * dim)
        alpha[dim + j] = 1
        return cls.monomial(alpha, 1, exact)

    @classmethod
    def from_literal(cls, dim: int, literal: Iterable[Mapping], exact: bool = False):
        """Parse the config format ``[{"alpha": [...], "re": .., "im": ..}, ...]``."""
        terms: dict[tuple[int, ...], complex] = {}
        for entry in literal:
            alpha = tuple(int(a) for a in entry["alpha"])
            c = complex(float(entry.get("re", 0.0)), float(entry.get("im", 0.0)))
            terms[alpha] = terms.get(alpha, 0) + c
        return cls(dim, terms, exact)

    def to_literal(self) -> list[dict]:
        return [
            {"alpha": list(alpha), "re": _to_complex(c).real, "im": _to_complex(c).imag}
            for alpha, c in self.items()
        ]

    # -- basic accessors ----------------------------------------------------

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def terms(self) -> dict[tuple[int, ...], object]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[tuple[int, ...], object]]:
        """Terms in graded lexicographic order."""
        for alpha in sorted(self._terms, key=_graded_lex_key):
            yield alpha, self._terms[alpha]

    def coefficient(self, alpha: Sequence[int]):
        zero = QQ_I.zero if self._exact else 0j
        return self._terms.get(tuple(alpha), zero)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(a) for a in self._terms), default=-1)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def homogeneous_part(self, degree: int) -> "PhasePolynomial":
        return self._new({a: c for a, c in self._terms.items() if sum(a) == degree})

    def truncate(self, max_degree: int) -> "PhasePolynomial":
        return self._new({a: c for a, c in self._terms.items() if sum(a) <= max_degree})

    def constant_term(self):
        return self.coefficient((0,) * (2 * self._dim))

    def to_float(self) -> "PhasePolynomial":
        return PhasePolynomial(self._dim, {a: _to_complex(c) for a, c in self._terms.items()})

    def to_exact(self) -> "PhasePolynomial":
        return PhasePolynomial(self._dim, self._terms, exact=True)

    def conj(self) -> "PhasePolynomial":
        if self._exact:
            return self._new({a: QQ_I(c.x, -c.y) for a, c in self._terms.items()})
        return self._new({a: c.conjugate() for a, c in self._terms.items()})

    def _new(self, terms) -> "PhasePolynomial":
        return PhasePolynomial._trusted(self._dim, terms, self._exact)

    @classmethod
    def _trusted(cls, dim: int, terms: dict, exact: bool) -> "PhasePolynomial":
        # keys already valid and coefficients already in the right field
        obj = cls.__new__(cls)
        obj._dim = dim
        obj._exact = exact
        if exact:
            obj._terms = {a: c for a, c in terms.items() if c != QQ_I.zero}
        else:
            obj._terms = {a: c for a, c in terms.items() if abs(c) >= _FLOAT_FLOOR}
        return obj

    def _coerce(self, other) -> "PhasePolynomial":
        if isinstance(other, PhasePolynomial):
            if other.dim != self._dim:
                raise ValueError(f"dimension mismatch: n={self._dim} vs n={other.dim}")
            if other.exact != self._exact:
                raise TypeError("cannot mix exact and floating symbols; convert explicitly")
            return other
        if isinstance(other, Number) or _is_exact_scalar(other):
            return PhasePolynomial.constant(self._dim, other, self._exact)
        return NotImplemented

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self._terms)
        for a, c in other._terms.items():
            terms[a] = terms[a] + c if a in terms else c
        return self._new(terms)

    __radd__ = __add__

    def __neg__(self):
        return self._new({a: -c for a, c in self._terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number) or _is_exact_scalar(other):
            c = _to_exact(other) if self._exact else complex(other)
            return self._new({a: v * c for a, v in self._terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms: dict[tuple[int, ...], object] = {}
        for a, ca in self._terms.items():
            for b, cb in other._terms.items():
                g = tuple(i + j for i, j in zip(a, b))
                terms[g] = terms[g] + ca * cb if g in terms else ca * cb
        return self._new(terms)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        """Pointwise power."""
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = PhasePolynomial.constant(self._dim, 1, self._exact)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        return (self._dim == other._dim and self._exact == other._exact
                and self._terms == other._terms)

    def __hash__(self):
        return hash((self._dim, self._exact, frozenset(self._terms.items())))

    def coeff_distance(self, other: "PhasePolynomial") -> float:
        """Max-norm of the coefficient difference (floating)."""
        a, b = self._terms, other._terms
        return max((abs(_to_complex(a.get(k, 0)) - _to_complex(b.get(k, 0)))
                    for k in a.keys() | b.keys()), default=0.0)

    def derivative(self, var: int) -> "PhasePolynomial":
        terms = {}
        for a, c in self._terms.items():
            if a[var]:
                b = list(a)
                b[var] -= 1
                terms[tuple(b)] = c * a[var]
        return self._new(terms)

    def __call__(self, X):
        return symbol_eval(self, X)

    def __repr__(self):
        if not self._terms:
            return f"PhasePolynomial(n={self._dim}, 0)"
        names = [f"x{j + 1}" for j in range(self._dim)] + [f"xi{j + 1}" for j in range(self._dim)]
        if self._dim == 1:
            names = ["x", "xi"]
        parts = []
        for alpha, c in self.items():
            mono = "*".join(
                n if e == 1 else f"{n}^{e}" for n, e in zip(names, alpha) if e
            )
            parts.append(f"({c})" + (f"*{mono}" if mono else ""))
        mode = ", exact" if self._exact else ""
        return f"PhasePolynomial(n={self._dim}{mode}: {' + '.join(parts)})"


def _star_factor(p: int, exact: bool):
    # (1/(2i))^p
    if exact:
        return QQ_I(0, QQ(-1, 2)) ** p
    return (1 / 2j) ** p


@lru_cache(maxsize=None)
def _star_1d(ax: int, axi: int, bx: int, bxi: int, exact: bool) -> tuple:
    """Star product of x^ax xi^axi with x^bx xi^bxi in one coordinate pair.

    The bidifferential operator splits into g derivatives (d_xi1 d_x2) and e
    derivatives (-d_x1 d_xi2); the weight of each pair (g, e) is an integer
    times (1/2i)^(g+e).
    """
    out: dict[tuple[int, int], object] = {}
    for g in range(min(axi, bx) + 1):
        wg = math.comb(axi, g) * math.perm(bx, g)
        for e in range(min(ax, bxi) + 1):
            w = wg * math.comb(ax, e) * math.perm(bxi, e) * (-1) ** e
            c = _star_factor(g + e, exact) * (QQ_I(w, 0) if exact else w)
            key = (ax - e + bx - g, axi - g + bxi - e)
            out[key] = out[key] + c if key in out else c
    return tuple(out.items())


@lru_cache(maxsize=1 << 16)
def _star_monomials(ka: tuple, kb: tuple, exact: bool) -> tuple:
    """Star product of two monomials as ((exponent, weight), ...)."""
    n = len(ka) // 2
    tables = [_star_1d(ka[j], ka[n + j], kb[j], kb[n + j], exact) for j in range(n)]
    if n == 1:
        return tables[0]
    if n == 2:
        return tuple(((x1, x2, y1, y2), w1 * w2)
                     for (x1, y1), w1 in tables[0] for (x2, y2), w2 in tables[1])
    out = []
    for combo in itertools.product(*tables):
        w = combo[0][1]
        for _, v in combo[1:]:
            w = w * v
        out.append((tuple(k[0] for k, _ in combo) + tuple(k[1] for k, _ in combo), w))
    return tuple(out)


def star(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """Weyl symbol of Op(a) Op(b).

    Finite Moyal expansion sum_p (1/p!) ((1/2i) sigma(d_X1, d_X2))^p a(X1) b(X2)
    restricted to X1 = X2, with sigma((x, xi), (y, eta)) = xi.y - x.eta. The
    operator factorizes over coordinate pairs, so each monomial product is a
    product of one-dimensional tables.
    """
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: n={a.dim} vs n={b.dim}")
    if a.exact != b.exact:
        raise TypeError("cannot mix exact and floating symbols")
    n = a.dim
    exact = a.exact
    result: dict = {}
    get = result.get
    zero = QQ_I.zero if exact else 0
    for ka, ca in a._terms.items():
        for kb, cb in b._terms.items():
            c0 = ca * cb
            for g, w in _star_monomials(ka, kb, exact):
                result[g] = get(g, zero) + c0 * w
    return PhasePolynomial._trusted(n, result, exact)


def commutator(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    return star(a, b) - star(b, a)


def poisson_bracket(a: PhasePolynomial, b: PhasePolynomial) -> PhasePolynomial:
    """{a, b} = sum_j d_xi a d_x b - d_x a d_xi b."""
    n = a.dim
    out = PhasePolynomial.zero(n, a.exact)
    for j in range(n):
        out = out + a.derivative(n + j) * b.derivative(j) - a.derivative(j) * b.derivative(n + j)
    return out


def symbol_parity(a: PhasePolynomial) -> str:
    """'even', 'odd' or 'mixed' under X -> -X. The zero symbol counts as even."""
    parities = {sum(alpha) % 2 for alpha in a._terms}
    if parities <= {0}:
        return "even"
    if parities == {1}:
        return "odd"
    return "mixed"


def symbol_eval(a: PhasePolynomial, X) -> complex | np.ndarray:
    """Evaluate at one point (shape (2n,)) or many points (shape (m, 2n))."""
    X = np.asarray(X)
    single = X.ndim == 1
    pts = np.atleast_2d(X).astype(complex)
    if pts.shape[1] != 2 * a.dim:
        raise ValueError(f"expected points of length {2 * a.dim}, got {pts.shape[1]}")
    if a.is_zero():
        out = np.zeros(len(pts), dtype=complex)
        return complex(out[0]) if single else out
    deg = max(a.degree, 0)
    # powers[v, k] = X_v^k, built by repeated multiplication per variable
    powers = np.ones((pts.shape[1], deg + 1, len(pts)), dtype=complex)
    for k in range(1, deg + 1):
        powers[:, k] = powers[:, k - 1] * pts.T
    out = np.zeros(len(pts), dtype=complex)
    for alpha, c in a.items():
        term = np.full(len(pts), _to_complex(c))
        for v, e in enumerate(alpha):
            if e:
                term = term * powers[v, e]
        out += term
    return complex(out[0]) if single else out


@dataclass(frozen=True)
class SymbolJet:
    """Taylor data at the doubly characteristic point.

    ``p[j]`` is the Taylor polynomial of the j-th term of the semiclassical
    expansion, i.e. its coefficients are p_j^{(gamma)}(0) / gamma!.
    """

    dim: int
    N0: int
    p: tuple[PhasePolynomial, ...]

    def __post_init__(self):
        if self.N0 < 1:
            raise ValueError("N0 must be a positive integer")
        if not self.p:
            raise ValueError("a jet needs at least the principal symbol p_0")
        for j, pj in enumerate(self.p):
            if pj.dim != self.dim:
                raise ValueError(f"p_{j} has dimension {pj.dim}, expected {self.dim}")
        low = self.p[0].truncate(1)
        if not low.is_zero():
            raise AssumptionViolation(
                "double characteristic",
                f"p_0 has nonzero Taylor coefficients of order <= 1: {low.terms}",
            )

    @classmethod
    def from_polynomials(cls, N0: int, *p: PhasePolynomial) -> "SymbolJet":
        return cls(p[0].dim, N0, tuple(q.to_float() for q in p))

    @property
    def max_order(self) -> int:
        """Largest j kept in the expansion: 1 + floor(N0/2)."""
        return 1 + self.N0 // 2

    @property
    def max_degree(self) -> int:
        return self.N0 + 2

    def term(self, j: int) -> PhasePolynomial:
        if j < len(self.p):
            return self.p[j]
        return PhasePolynomial.zero(self.dim)

    def taylor(self) -> dict[tuple[int, tuple[int, ...]], complex]:
        """Map (j, gamma) -> p_j^{(gamma)}(0)/gamma! over the retained range."""
        out = {}
        for j in range(min(len(self.p), self.max_order + 1)):
            for alpha, c in self.p[j].items():
                if sum(alpha) <= self.max_degree:
                    out[(j, alpha)] = _to_complex(c)
        return out

    def dropped_terms(self) -> dict[tuple[int, tuple[int, ...]], complex]:
        """Supplied coefficients that lie outside the retained Taylor range."""
        kept = self.taylor()
        out = {}
        for j, pj in enumerate(self.p):
            for alpha, c in pj.items():
                if (j, alpha) not in kept:
                    out[(j, alpha)] = _to_complex(c)
        return out

    @property
    def quadratic_part(self) -> PhasePolynomial:
        return self.p[0].homogeneous_part(2)

    @property
    def subprincipal_at_0(self) -> complex:
        return _to_complex(self.term(1).constant_term())

    def principal_taylor(self) -> PhasePolynomial:
        return self.p[0].truncate(self.max_degree)


@dataclass(frozen=True)
class SpectralParameter:
    """Coefficients z_0 .. z_{2 N0 + 2} of z(h) = sum_k z_k h^{k/2}."""

    N0: int
    z: tuple[complex, ...]

    def __post_init__(self):
        expected = 2 * self.N0 + 3
        z = tuple(complex(v) for v in self.z)
        if len(z) < expected:
            z = z + (0j,) * (expected - len(z))
        if len(z) != expected:
            raise ValueError(f"expected {expected} coefficients z_0..z_{expected - 1}, got {len(z)}")
        object.__setattr__(self, "z", z)

    @property
    def z0(self) -> complex:
        return self.z[0]

    def with_tail(self, tail: Sequence[complex]) -> "SpectralParameter":
        return SpectralParameter(self.N0, (self.z[0], *tail))

    def odd_terms_vanish(self, tol: float = 0.0) -> bool:
        return all(abs(self.z[k]) <= tol for k in range(1, len(self.z), 2))

    def __call__(self, h: float) -> complex:
        return sum(zk * h ** (k / 2) for k, zk in enumerate(self.z))


@dataclass(frozen=True)
class AkFamily:
    """The symbols a_k (with spectral shift) and their z-free parts."""

    N0: int
    a: tuple[PhasePolynomial, ...]
    tilde: tuple[PhasePolynomial, ...]
    z: tuple[complex, ...] = field(default=())

    @property
    def J(self) -> int:
        return 2 * self.N0 + 2


def build_ak_family(jet: SymbolJet, zp: SpectralParameter) -> AkFamily:
    """Sort the jet by weight j + |gamma|/2 = 1 + k/2 into a_0 .. a_{2N0+2}.

    Only 0 <= j <= 1 + floor(N0/2) and |gamma| <= N0 + 2 contribute; when
    both bounds exclude every term the symbol is the constant -z_k.
    """
    if jet.N0 != zp.N0:
        raise ValueError(f"jet has N0={jet.N0} but spectral parameter has N0={zp.N0}")
    n, N0 = jet.dim, jet.N0
    tilde = []
    for k in range(2 * N0 + 3):
        terms = {}
        for j in range(jet.max_order + 1):
            deg = 2 + k - 2 * j
            if deg < 0 or deg > jet.max_degree:
                continue
            part = jet.term(j).homogeneous_part(deg)
            terms.update(part.terms)
        tilde.append(PhasePolynomial(n, terms))
    a = tuple(t - zp.z[k] for k, t in enumerate(tilde))
    return AkFamily(N0, a, tuple(tilde), zp.z)
