"""Numerical laboratory for critical-growth double phase Dirichlet problems.

Computable objects: the compactness threshold beta*(mu, b_inf) and its
asymptotics, cut-off extremal-profile scaling laws, mountain-pass ray
maxima and strictness margins, radial double phase boundary-value solutions,
and the Pohozaev-type identity with its nonexistence corollaries.
"""

from .constants import ConstantsTable, best_sobolev_constant, first_eigenvalue_p, invert_flux
from .fields import CoefficientField, PowerNonlinearity, PowerTerm
from .params import (
    CaseTag,
    ExistenceCase,
    ProblemParams,
    check_ar_condition,
    classify_existence_case,
    sobolev_conjugate,
    superlinearity_threshold,
    validate_structure,
)
from .threshold import (
    ThresholdPoint,
    ThresholdReport,
    beta_lower_bound_b,
    beta_lower_bound_mu,
    compute_beta_star,
    feasible,
    objective_I,
)

__version__ = "0.1.0"

__all__ = [
    "CaseTag",
    "CoefficientField",
    "ConstantsTable",
    "ExistenceCase",
    "PowerNonlinearity",
    "PowerTerm",
    "ProblemParams",
    "ThresholdPoint",
    "ThresholdReport",
    "best_sobolev_constant",
    "beta_lower_bound_b",
    "beta_lower_bound_mu",
    "check_ar_condition",
    "classify_existence_case",
    "compute_beta_star",
    "feasible",
    "first_eigenvalue_p",
    "invert_flux",
    "objective_I",
    "sobolev_conjugate",
    "superlinearity_threshold",
    "validate_structure",
]
