"""Numerical verification toolkit for twisted-torus symbol calculus.

Subpackages by theme: torus (twisted group algebra), sphere (polynomial
calculus and quadrature on S^{d-1}), symbols (represented words and certified
compactness tails), dixmier (log-divergence trace estimation), su2 (irrep
matrix models), moyal (symplectic normal forms, grid CCR, decay profiles),
verify (batch CLI).
"""

from .dixmier import (
    LatticeDiagonal,
    LogFit,
    connes_trace_torus,
    doubling_grid,
    fit_summary_json,
    lattice_partial_sum,
    log_fit,
    model_diagonal,
    normalised_trace_estimate,
    partial_sum_quotient,
    radial_integral_check,
)
from .moyal import (
    NormalForm,
    ShellProfile,
    SymplecticForm,
    UniformGrid,
    antisymmetric_normal_form,
    ccr_phase,
    ccr_phase_residual,
    grid_unitary_apply,
    h_decay_profile,
    multiplier_identity_residual,
    riesz_difference_decay,
    sp_invariant_functional_check,
    sp_theta_conjugate,
)
from .sphere import (
    MomentFunctional,
    QuadratureRule,
    SphereFunction,
    SpherePoly,
    invariance_residual,
    lie_action,
    moment_recursion_check,
    quadrature_integrate,
    quadrature_rule,
    semantic_gap,
    sphere_integrate,
    sphere_moment,
    sphere_volume,
    vg_action,
)
from .su2 import (
    GenPoly,
    HalfInteger,
    IrrepBlock,
    beta_formula_residual,
    block_commutator_norm,
    block_conditional_expectation,
    block_norm_vs_symbol,
    build_block,
    conjugation_covariance_check,
    su2_dixmier_ratio,
    su2_symbol,
    su2_to_so3,
)
from .symbols import (
    OperatorWord,
    SphereLetter,
    Symbol,
    TorusLetter,
    build_pi1_matrix,
    build_pi2_matrix,
    commutator_tail_norm,
    residual_compactness_report,
    sym,
)
from .torus import (
    ThetaMatrix,
    TorusElement,
    torus_adjoint,
    torus_derivation,
    torus_mul,
    torus_trace,
    torus_translate,
    torus_translate_average,
    twist_phase,
    unitary_generator,
)
from .verify import VerifyConfig, VerifyReport, emit_report, run_suite

__version__ = "0.1.0"

__all__ = [
    "GenPoly",
    "HalfInteger",
    "IrrepBlock",
    "LatticeDiagonal",
    "LogFit",
    "MomentFunctional",
    "NormalForm",
    "OperatorWord",
    "QuadratureRule",
    "ShellProfile",
    "SphereFunction",
    "SphereLetter",
    "SpherePoly",
    "Symbol",
    "SymplecticForm",
    "ThetaMatrix",
    "TorusElement",
    "TorusLetter",
    "UniformGrid",
    "VerifyConfig",
    "VerifyReport",
    "antisymmetric_normal_form",
    "beta_formula_residual",
    "block_commutator_norm",
    "block_conditional_expectation",
    "block_norm_vs_symbol",
    "build_block",
    "build_pi1_matrix",
    "build_pi2_matrix",
    "ccr_phase",
    "ccr_phase_residual",
    "commutator_tail_norm",
    "conjugation_covariance_check",
    "connes_trace_torus",
    "doubling_grid",
    "emit_report",
    "fit_summary_json",
    "grid_unitary_apply",
    "h_decay_profile",
    "invariance_residual",
    "lattice_partial_sum",
    "lie_action",
    "log_fit",
    "model_diagonal",
    "moment_recursion_check",
    "multiplier_identity_residual",
    "normalised_trace_estimate",
    "partial_sum_quotient",
    "quadrature_integrate",
    "quadrature_rule",
    "radial_integral_check",
    "residual_compactness_report",
    "riesz_difference_decay",
    "run_suite",
    "semantic_gap",
    "sp_invariant_functional_check",
    "sp_theta_conjugate",
    "sphere_integrate",
    "sphere_moment",
    "sphere_volume",
    "su2_dixmier_ratio",
    "su2_symbol",
    "su2_to_so3",
    "sym",
    "torus_adjoint",
    "torus_derivation",
    "torus_mul",
    "torus_trace",
    "torus_translate",
    "torus_translate_average",
    "twist_phase",
    "unitary_generator",
    "vg_action",
]
