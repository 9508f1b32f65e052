"""Problem specification: a single JSON document describing one run."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .symbols import PhasePolynomial, SymbolJet

__all__ = ["ConfigError", "ProblemSpec", "ScanSpec", "parse_complex", "load_spec"]


class ConfigError(ValueError):
    """The configuration document is malformed."""


def parse_complex(value: Any, where: str) -> complex:
    """Accept a number, a pair [re, im], or an object {"re": .., "im": ..}."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(_num(value[0], where), _num(value[1], where))
    if isinstance(value, dict) and set(value) <= {"re", "im"} and value:
        return complex(_num(value.get("re", 0.0), where), _num(value.get("im", 0.0), where))
    raise ConfigError(f"{where}: cannot read {value!r} as a complex number")


def _num(v: Any, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _int(d: dict, key: str, default=None, minimum: int | None = None) -> int:
    if key not in d:
        if default is None:
            raise ConfigError(f"missing required field {key!r}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {v}")
    return v


def _interval(v: Any, where: str) -> tuple[float, float]:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return float(v), float(v)
    if isinstance(v, (list, tuple)) and len(v) == 2:
        lo, hi = _num(v[0], where), _num(v[1], where)
        if hi < lo:
            raise ConfigError(f"{where}: empty interval [{lo}, {hi}]")
        return lo, hi
    raise ConfigError(f"{where}: expected a number or [lo, hi], got {v!r}")


@dataclass(frozen=True)
class ScanSpec:
    rect: tuple[float, float, float, float] | None = None
    res: tuple[int, int] = (100, 100)
    C: float = 2.0
    c0: float = 0.1
    disk_C: float = 5.0
    rho: float = 0.3
    N_cut: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "ScanSpec":
        if not isinstance(d, dict):
            raise ConfigError("scan: expected an object")
        rect = d.get("rect")
        if rect is not None:
            if not (isinstance(rect, list) and len(rect) == 4):
                raise ConfigError("scan.rect: expected [re_min, re_max, im_min, im_max]")
            rect = tuple(_num(v, "scan.rect") for v in rect)
            if rect[1] <= rect[0] or rect[3] <= rect[2]:
                raise ConfigError("scan.rect: empty rectangle")
        res = d.get("res", 100)
        if isinstance(res, int) and not isinstance(res, bool):
            res = (res, res)
        elif isinstance(res, list) and len(res) == 2 and all(isinstance(r, int) for r in res):
            res = tuple(res)
        else:
            raise ConfigError("scan.res: expected an integer or [n_re, n_im]")
        if min(res) < 2:
            raise ConfigError("scan.res: need at least 2 points per axis")
        return cls(rect, res, _num(d.get("C", 2.0), "scan.C"), _num(d.get("c0", 0.1), "scan.c0"),
                   _num(d.get("disk_C", 5.0), "scan.disk_C"), _num(d.get("rho", 0.3), "scan.rho"),
                   d.get("N_cut"))


@dataclass(frozen=True)
class ProblemSpec:
    """Validated run configuration.

    ``z0`` is ``"bottom"``, ``("lattice", k)`` or a complex number. ``omega``
    holds one entry per z_k, k >= 1, each a complex number or a pair of real
    intervals.
    """

    n: int
    N0: int
    p: tuple[PhasePolynomial, ...]
    z0: Any
    z_tail: tuple[complex, ...]
    omega: tuple | None
    N_cut: int
    guard: int | None
    h: tuple[float, ...]
    eps_rank: float = 1e-8
    margin_tol: float = 1e-8
    slope_tol: float = 0.3
    validate_N_cut: int | None = None
    order: int = 2
    scan: ScanSpec = field(default_factory=ScanSpec)
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False)

    def jet(self) -> SymbolJet:
        return SymbolJet(self.n, self.N0, self.p)

    @classmethod
    def from_dict(cls, d: Any) -> "ProblemSpec":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        n = _int(d, "n", minimum=1)
        N0 = _int(d, "N0", minimum=1)
        p_raw = d.get("p")
        if not isinstance(p_raw, list) or not p_raw:
            raise ConfigError("p: expected a non-empty list of symbol literals (p_0, p_1, ...)")
        polys = []
        for j, lit in enumerate(p_raw):
            if not isinstance(lit, list):
                raise ConfigError(f"p[{j}]: expected a list of terms")
            try:
                polys.append(PhasePolynomial.from_literal(n, lit))
            except (AttributeError, KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"p[{j}]: {exc}") from exc
        z0 = d.get("z0", "bottom")
        if z0 == "bottom":
            pass
        elif isinstance(z0, dict) and "lattice_index" in z0:
            k = z0["lattice_index"]
            if isinstance(k, bool) or not isinstance(k, int) or k < 0:
                raise ConfigError("z0.lattice_index: expected a nonnegative integer")
            z0 = ("lattice", k)
        else:
            z0 = parse_complex(z0, "z0")
        J = 2 * N0 + 2
        tail_raw = d.get("z_tail", [])
        if not isinstance(tail_raw, list) or len(tail_raw) > J:
            raise ConfigError(f"z_tail: expected a list of at most {J} complex numbers")
        tail = tuple(parse_complex(v, f"z_tail[{i}]") for i, v in enumerate(tail_raw))
        tail = tail + (0j,) * (J - len(tail))
        omega = None
        if "omega" in d:
            om = d["omega"]
            if not isinstance(om, list) or len(om) != J:
                raise ConfigError(f"omega: expected {J} entries (one per z_1..z_{J})")
            boxes = []
            for i, entry in enumerate(om):
                where = f"omega[{i}]"
                if isinstance(entry, dict) and ("re" in entry or "im" in entry):
                    re = _interval(entry.get("re", 0.0), where + ".re")
                    im = _interval(entry.get("im", 0.0), where + ".im")
                    boxes.append(complex(re[0], im[0]) if re[0] == re[1] and im[0] == im[1]
                                 else (re, im))
                else:
                    boxes.append(parse_complex(entry, where))
            omega = tuple(boxes)
        N_cut = _int(d, "N_cut", minimum=1)
        guard = d.get("guard", "auto")
        if guard == "auto":
            guard = None
        elif isinstance(guard, bool) or not isinstance(guard, int) or guard < 0:
            raise ConfigError("guard: expected \"auto\" or a nonnegative integer")
        h = d.get("h", [])
        if not isinstance(h, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0 for v in h):
            raise ConfigError("h: expected a list of positive numbers")
        tol = d.get("tolerances", {})
        if not isinstance(tol, dict):
            raise ConfigError("tolerances: expected an object")
        unknown = set(tol) - {"eps_rank", "margin_tol", "slope_tol"}
        if unknown:
            raise ConfigError(f"tolerances: unknown keys {sorted(unknown)}")
        val = d.get("validate", {})
        if not isinstance(val, dict):
            raise ConfigError("validate: expected an object")
        seed = _int(d, "seed", default=0) if "seed" in d else 0
        return cls(
            n=n, N0=N0, p=tuple(polys), z0=z0, z_tail=tail, omega=omega, N_cut=N_cut,
            guard=guard, h=tuple(float(v) for v in h),
            eps_rank=_num(tol.get("eps_rank", 1e-8), "tolerances.eps_rank"),
            margin_tol=_num(tol.get("margin_tol", 1e-8), "tolerances.margin_tol"),
            slope_tol=_num(tol.get("slope_tol", 0.3), "tolerances.slope_tol"),
            validate_N_cut=val.get("N_cut"), order=_int(val, "order", default=2, minimum=0)
            if "order" in val else 2,
            scan=ScanSpec.from_dict(d.get("scan", {})), seed=seed, raw=d,
        )


def load_spec(path) -> ProblemSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return ProblemSpec.from_dict(data)
