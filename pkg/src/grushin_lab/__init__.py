"""Grushin reduction toolkit for doubly characteristic semiclassical operators."""

from .fock import (
    FockBasis,
    FockOperator,
    FockVector,
    GaussianProjectionError,
    TrustExhausted,
    apply_chain,
    project_gaussian,
    quantize,
)
from .grushin import (
    EigenExpansion,
    GrushinSystem,
    KernelMismatch,
    PairingDegenerate,
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
from .quadratic import (
    QuadraticForm,
    QuadraticReport,
    analyze_quadratic,
    check_elliptic,
    hamilton_map,
    lattice_points,
    sigma_q_sector,
    singular_space_k0,
    spectrum_lattice,
)
from .symbols import (
    AkFamily,
    AssumptionViolation,
    MultiIndex,
    PhasePolynomial,
    SpectralParameter,
    SymbolJet,
    build_ak_family,
    commutator,
    poisson_bracket,
    star,
    symbol_eval,
    symbol_parity,
)

__version__ = "0.1.0"

__all__ = [
    "AkFamily",
    "AssumptionViolation",
    "EigenExpansion",
    "FockBasis",
    "FockOperator",
    "FockVector",
    "GaussianProjectionError",
    "GrushinSystem",
    "KernelMismatch",
    "MultiIndex",
    "PairingDegenerate",
    "PhasePolynomial",
    "QuadraticForm",
    "QuadraticReport",
    "SpectralParameter",
    "SymbolJet",
    "TrustExhausted",
    "analyze_quadratic",
    "apply_chain",
    "build_ak_family",
    "build_system",
    "check_elliptic",
    "commutator",
    "criterion_over_omega",
    "effective_direct",
    "effective_family",
    "grushin_residuals",
    "hamilton_map",
    "lattice_points",
    "localization_N0_1",
    "omega_samples",
    "parity_audit",
    "poisson_bracket",
    "project_gaussian",
    "quantize",
    "sigma_q_sector",
    "singular_space_k0",
    "spectrum_lattice",
    "star",
    "symbol_eval",
    "symbol_parity",
    "ztilde_sequence",
]
