"""Command-line front end: ``grushin-lab <command> --config spec.json --out DIR``.

Exit codes: 0 success, 2 invalid config, 3 assumption violated, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy.linalg as sla

from .config import ConfigError, ProblemSpec, load_spec
from .fock import FockBasis, GaussianProjectionError, TrustExhausted
from .grushin import (
    KernelMismatch,
    PairingDegenerate,
    build_system,
    criterion_over_omega,
    default_guard,
    effective_family,
    grushin_residuals,
    localization_N0_1,
    omega_samples,
    parity_audit,
    ztilde_sequence,
)
from .lab import (
    TrackingAmbiguity,
    assemble_scaled,
    check_estimate_regions,
    pseudospectrum_scan,
    region_stability,
    validate_expansion,
)
from .quadratic import (
    EPS_ELL,
    QuadraticForm,
    SelectionError,
    UnsupportedCase,
    analyze_quadratic,
    check_remainder_sector,
)
from .symbols import AssumptionViolation, SpectralParameter, build_ak_family

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_ASSUMPTION", "EXIT_NUMERIC"]

log = logging.getLogger("grushin_lab")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NUMERIC = 4

CAVEATS = (
    "ellipticity at infinity is not decidable from a jet and was not checked",
    "the characteristic set reducing to a single point is not decidable from a jet "
    "and was not checked",
)

NUMERICAL_ERRORS = (KernelMismatch, TrustExhausted, SelectionError, UnsupportedCase,
                    GaussianProjectionError, TrackingAmbiguity, np.linalg.LinAlgError)


def _c(z: complex) -> dict:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def _mat(A) -> dict:
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def _finite(x: float) -> float | None:
    return float(x) if x is not None and math.isfinite(x) else None


class _Abort(Exception):
    def __init__(self, code: int, message: str, details: dict | None = None):
        super().__init__(message)
        self.code = code
        self.details = details or {}


def _jet(spec: ProblemSpec):
    try:
        return spec.jet()
    except AssumptionViolation as exc:
        raise _Abort(EXIT_ASSUMPTION, str(exc), {"role": exc.role}) from exc


def _analyze(spec: ProblemSpec) -> tuple[dict, Any, Any]:
    jet = _jet(spec)
    q = QuadraticForm.from_polynomial(jet.quadratic_part)
    try:
        rep = analyze_quadratic(q, seed=spec.seed)
    except AssumptionViolation as exc:
        w = exc.witness
        raise _Abort(EXIT_ASSUMPTION, str(exc),
                     {"role": "nonnegativity",
                      "witness": None if w is None else [float(v) for v in w]}) from exc
    if not rep.elliptic:
        raise _Abort(EXIT_ASSUMPTION,
                     "full ellipticity: the quadratic part vanishes on the unit sphere",
                     {"role": "full ellipticity",
                      "witness": [float(v) for v in rep.ellipticity_witness],
                      "min_abs_q": rep.ellipticity_min})
    caveats = list(CAVEATS)
    if not check_remainder_sector(jet, samples=4000, seed=spec.seed):
        caveats.append("the Taylor remainder p0 - q does not stay in a sector inside Re z > 0; "
                       "results describe the truncated Taylor model operator only")
    dropped = jet.dropped_terms()
    if dropped:
        caveats.append(f"{len(dropped)} supplied Taylor coefficients lie outside the retained "
                       "range and were ignored")
    p1 = jet.subprincipal_at_0
    lattice = rep.lattice(cap=6)
    gs = rep.ground_state
    out = {
        "computed_with": {"eps_rank": 1e-9, "eps_ell": EPS_ELL, "sector_slack_rad": 1e-8},
        "quadratic_form": _mat(q.M),
        "hamilton_map": _mat(rep.hamilton.F),
        "elliptic": rep.elliptic,
        "ellipticity_min_abs": rep.ellipticity_min,
        "sector": {"lo": rep.sector.lo, "hi": rep.sector.hi, "axis": rep.sector.axis,
                   "half_aperture": rep.sector.half_aperture},
        "spectrum_modes": [{"mu": _c(m.mu), "multiplicity": m.mult}
                           for m in rep.spectrum_modes],
        "lattice": [{"value": _c(v), "shifted_by_p1": _c(v + p1), "multiplicity": m}
                    for v, m in lattice[:12]],
        "p1_at_0": _c(p1),
        "singular_space_basis": rep.singular_space_basis.T.tolist(),
        "k0": rep.k0 if rep.k0 is not None else "undefined",
        "subelliptic_exponent": rep.subelliptic_exponent,
        "ground_state": None if gs is None else {
            "Bplus": _mat(gs.Bplus),
            "bottom_eigenvalue": _c(gs.bottom_eigenvalue),
            "x_block_condition": gs.condition,
            "invariance_residual": gs.invariance_residual,
        },
        "notes": rep.notes,
    }
    return out, rep, caveats


def _resolve_z0(spec: ProblemSpec, rep, p1: complex) -> tuple[complex, int]:
    lattice = rep.lattice(cap=12)
    if spec.z0 == "bottom":
        v, m = lattice[0]
        return v + p1, m
    if isinstance(spec.z0, tuple):
        k = spec.z0[1]
        if k >= len(lattice):
            raise _Abort(EXIT_CONFIG, f"lattice_index {k} beyond the enumerated lattice")
        v, m = lattice[k]
        return v + p1, m
    z0 = complex(spec.z0)
    for v, m in lattice:
        if abs(v + p1 - z0) <= 1e-8 * max(1.0, abs(z0)):
            return z0, m
    raise _Abort(EXIT_ASSUMPTION,
                 f"spectral parameter: z0 - p1(0) = {z0 - p1:.6g} is not a point of the "
                 "spectrum of the quadratic operator",
                 {"role": "spectral parameter on the lattice"})


def _grushin(spec: ProblemSpec, report: dict, rep) -> tuple[dict, Any]:
    jet = _jet(spec)
    p1 = jet.subprincipal_at_0
    z0, mult = _resolve_z0(spec, rep, p1)
    zp = SpectralParameter(spec.N0, (z0, *spec.z_tail))
    guard = spec.guard if spec.guard is not None else default_guard(spec.N0)
    system = build_system(jet, zp, spec.N_cut, guard, expected_d=mult, eps_rank=spec.eps_rank)
    fam_e = effective_family(system, spec.N0)
    hs = spec.h or (0.02, 0.01, 0.005)
    out: dict[str, Any] = {
        "computed_with": {"N_cut": spec.N_cut, "guard": guard, "eps_rank": spec.eps_rank,
                          "basis_size": system.basis.size},
        "z0": _c(z0),
        "z_tail": [_c(z) for z in spec.z_tail],
        "d": system.d,
        "pairing_matrix": _mat(system.pairing()),
        "A": [_mat(A) for A in system.A],
        "margins": [{"h": h, "margin": fam_e.margin(h)} for h in hs],
    }
    if spec.omega is not None:
        samples = omega_samples(spec.omega, 2 * spec.N0 + 2, seed=spec.seed)
        crit = criterion_over_omega(system, spec.N0, hs, samples, tol=spec.margin_tol)
        out["criterion"] = {
            "satisfied": crit.satisfied, "inf_margin": crit.inf_margin,
            "worst_point": [_c(z) for z in crit.worst_point],
            "fitted_slope_at_worst": _finite(crit.slope), "samples": len(samples),
            "rule": "inf margin > margin_tol and log-log slope of the worst margin < 0.25",
        }
    else:
        m = [fam_e.margin(h) for h in hs]
        slope = float(np.polyfit(np.log(hs), np.log(m), 1)[0]) if min(m) > 0 and len(hs) > 1 \
            else float("inf")
        out["criterion"] = {"satisfied": bool(min(m) > spec.margin_tol and slope < 0.25),
                            "inf_margin": min(m), "fitted_slope_at_worst": _finite(slope),
                            "samples": 1,
                            "rule": "inf margin > margin_tol and log-log slope < 0.25"}
    if spec.N0 == 1:
        loc = localization_N0_1(system)
        out["localization"] = {"d0": loc.d0, "Lambda": [_c(z) for z in loc.Lambda],
                               "classification": loc.classification,
                               "identically_singular": loc.identically_singular}
    if system.d == 1:
        try:
            ex = ztilde_sequence(system)
            out["expansion"] = {"ztilde": [_c(z) for z in ex.ztilde],
                                "pairing": _c(ex.pairing),
                                "even_kernel": ex.parity_even}
        except PairingDegenerate as exc:
            out["expansion"] = {"status": "pairing degenerate", "detail": str(exc)}
    else:
        A0 = system.pairing()
        A1 = system.Psi_matrix.conj().T @ system.family.tilde[1].matrix @ system.Phi_matrix
        vals = sla.eigvals(A1, A0) if np.linalg.matrix_rank(A0) == system.d else []
        out["expansion"] = {
            "status": "experimental: d > 1 has no scalar expansion; first-order branch "
                      "shifts from the pencil ((a1 phi_l, psi_k)) - w ((phi_l, psi_k))",
            "first_order_shifts": [_c(v) for v in vals if np.isfinite(v)],
        }
    audit = parity_audit(system, build_ak_family(jet, zp))
    out["parity_audit"] = {"performed": audit.performed, "reason": audit.reason,
                           "kernel_parity": list(audit.kernel_parity),
                           "vanishing_indices": list(audit.vanishing_indices),
                           "max_vanishing_norm": audit.max_vanishing_norm,
                           "smat_parity_leakage": audit.smat_leakage}
    out["residuals"] = [vars(grushin_residuals(system, h)) for h in hs]
    return out, system


def _validate(spec: ProblemSpec, system) -> dict:
    jet = _jet(spec)
    if system.d != 1:
        raise _Abort(EXIT_ASSUMPTION, f"validation needs a one-dimensional kernel, got d={system.d}",
                     {"role": "simple eigenvalue"})
    ex = ztilde_sequence(system)
    N = spec.validate_N_cut or 2 * spec.N_cut
    hs = spec.h or (0.02, 0.01, 0.005)
    fit = validate_expansion(jet, ex, hs, N, order=spec.order)
    exact = max(fit.residuals) <= 1e-12 * max(fit.h)
    ok = exact or fit.passes(spec.slope_tol)
    rows = fit.rows()
    for r in rows:
        r["fitted_slope"] = _finite(r["fitted_slope"])
    return {"computed_with": {"N_cut": N, "order": spec.order, "slope_tol": spec.slope_tol},
            "fit": rows, "fitted_slope": _finite(fit.fitted_slope),
            "expected_slope": fit.expected_slope, "roundoff_exact": bool(exact),
            "passed": bool(ok)}


def _pseudospectrum(spec: ProblemSpec, rep, out_dir: Path, workers: int) -> dict:
    jet = _jet(spec)
    sc = spec.scan
    N = sc.N_cut or spec.N_cut
    basis = FockBasis(spec.n, N, jet.max_degree)
    hs = spec.h or (0.02, 0.01)
    rect = sc.rect or (-sc.c0, sc.c0, -sc.c0, sc.c0)
    p1 = jet.subprincipal_at_0
    files, regions = [], []
    for h in hs:
        op = assemble_scaled(jet, h, basis)
        grid = pseudospectrum_scan(op, rect, sc.res, workers=workers)
        path = grid.to_csv(out_dir / f"grid_{h:g}.csv")
        files.append(path.name)
        if rep.k0 is not None:
            r = check_estimate_regions(grid, rep, C=sc.C, c0=sc.c0, disk_C=sc.disk_C,
                                       rho=sc.rho, p1_0=p1)
            regions.append({"h": h, "omega_inf": r.omega_inf, "omega_points": r.omega_points,
                            "disk_inf": r.disk_inf, "disk_points": r.disk_points,
                            "notes": list(r.notes)})
    out = {"computed_with": {"N_cut": N, "guard": basis.G, "rect": list(rect),
                             "res": list(sc.res), "C": sc.C, "c0": sc.c0,
                             "disk_C": sc.disk_C, "rho": sc.rho},
           "files": files, "regions": regions,
           "note": "region constants are user-supplied; only stability of the infima "
                   "under changes of h is tested"}
    if len(regions) > 1:
        ok_o, ratio_o = region_stability([r["omega_inf"] for r in regions])
        ok_d, ratio_d = region_stability([r["disk_inf"] for r in regions])
        out["stability"] = {"omega_ok": ok_o, "omega_ratio": _finite(ratio_o),
                            "disk_ok": ok_d, "disk_ratio": _finite(ratio_d)}
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="grushin-lab",
                                 description="Grushin reduction at a doubly characteristic point")
    ap.add_argument("command", choices=["analyze", "grushin", "validate", "pseudospectrum"])
    ap.add_argument("--config", required=True, help="JSON problem specification")
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--workers", type=int, default=1, help="threads for grid scans")
    return ap


def _write(out_dir: Path, report: dict) -> None:
    report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    (out_dir / "report.json").write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    report: dict[str, Any] = {"command": args.command, "status": "ok"}
    code = EXIT_OK
    try:
        spec = load_spec(args.config)
        report["config"] = spec.raw
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        out_dir.mkdir(parents=True, exist_ok=True)
        quad, rep, caveats = _analyze(spec)
        report["quadratic"] = quad
        report["caveats"] = caveats
        if args.command in ("grushin", "validate"):
            report["grushin"], system = _grushin(spec, report, rep)
            if args.command == "validate":
                report["validation"] = _validate(spec, system)
                if not report["validation"]["passed"]:
                    report["status"] = "validation failed"
        elif args.command == "pseudospectrum":
            report["pseudospectrum"] = _pseudospectrum(spec, rep, out_dir, args.workers)
    except ConfigError as exc:
        code, report["status"] = EXIT_CONFIG, f"invalid config: {exc}"
    except _Abort as exc:
        code, report["status"] = exc.code, str(exc)
        report["abort"] = exc.details
    except AssumptionViolation as exc:
        code, report["status"] = EXIT_ASSUMPTION, str(exc)
        report["abort"] = {"role": exc.role}
    except NUMERICAL_ERRORS as exc:
        code, report["status"] = EXIT_NUMERIC, f"numerical failure: {exc}"
        if isinstance(exc, KernelMismatch):
            report["abort"] = {"found_d": exc.found, "expected_d": exc.expected}
    if code != EXIT_OK:
        log.error(report["status"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        _write(out_dir, report)
    except OSError as exc:
        log.error("cannot write report: %s", exc)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
