"""Desk-scale numerics for variable-exponent Picone identities and their
consequences: sub-Laplacian principal eigenvalues, Hardy-type inequalities,
and Caccioppoli estimates on grid-discretized domains with Euclidean,
Grushin, and Heisenberg frames."""

__version__ = "0.1.0"

from .errors import HypothesisError, InvalidInputError, NumericError
from .grid import (BOUNDARY, EXTERIOR, INTERIOR, DomainMask, Grid, ScalarField,
                   build_grid, full_mask, integrate, is_strictly_nested, rect_mask)
from .frames import (ExponentField, Frame, HorizontalField, discrete_adjoint,
                     euclidean_frame, frame_by_name, frame_from_tables,
                     grushin_frame, heisenberg_frame, horizontal_gradient,
                     orthogonality_defect, p_sub_laplacian)
from .lebesgue import (HolderReport, ModularReport, holder_check, luxemburg_norm,
                       modular, norm_modular_relations)
from .picone import (AdmissibilityReport, EqualityCaseReport, Nonlinearity,
                     PiconeBreakdown, YoungCheck, admissibility_check,
                     canonical_nonlinearity, equality_case_detect,
                     picone_evaluate, power_sum_nonlinearity,
                     tabulated_nonlinearity, young_classical, young_modified)
from .eigen import (EigenResult, MonotonicityReport, P2OracleResult,
                    SimplicityReport, SolverOptions,
                    domain_monotonicity_experiment, linear_oracle_p2,
                    minimize_principal, p2_dirichlet_solve, quotient_gradient,
                    rayleigh_quotient, sign_change_check, simplicity_experiment)
from .inequalities import (InequalityReport, caccioppoli_constants,
                           caccioppoli_verify, hardy_verify,
                           log_caccioppoli_verify, weak_form_residual)

__all__ = [
    "__version__",
    "InvalidInputError", "NumericError", "HypothesisError",
    "Grid", "DomainMask", "ScalarField", "INTERIOR", "BOUNDARY", "EXTERIOR",
    "build_grid", "rect_mask", "full_mask", "integrate", "is_strictly_nested",
    "Frame", "HorizontalField", "ExponentField",
    "euclidean_frame", "grushin_frame", "heisenberg_frame", "frame_by_name",
    "frame_from_tables", "horizontal_gradient", "discrete_adjoint",
    "p_sub_laplacian", "orthogonality_defect",
    "ModularReport", "HolderReport", "modular", "luxemburg_norm",
    "holder_check", "norm_modular_relations",
    "Nonlinearity", "PiconeBreakdown", "YoungCheck", "AdmissibilityReport",
    "EqualityCaseReport", "young_classical", "young_modified",
    "admissibility_check", "picone_evaluate", "equality_case_detect",
    "canonical_nonlinearity", "power_sum_nonlinearity", "tabulated_nonlinearity",
    "EigenResult", "SolverOptions", "P2OracleResult", "MonotonicityReport",
    "SimplicityReport", "rayleigh_quotient", "quotient_gradient",
    "minimize_principal", "linear_oracle_p2", "p2_dirichlet_solve",
    "domain_monotonicity_experiment", "simplicity_experiment",
    "sign_change_check",
    "InequalityReport", "hardy_verify", "caccioppoli_constants",
    "caccioppoli_verify", "log_caccioppoli_verify", "weak_form_residual",
]
