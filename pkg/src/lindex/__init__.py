"""Numerical toolkit for entire functions of bounded L-index in joint variables."""
from .derivatives import (
    cauchy_derivatives,
    derivative_cauchy,
    log_normalized_derivatives,
    normalized_derivative,
    symbolic_derivative,
)
from .expr import ExpressionError, evaluate, parse_expression, symbolic_partial, unparse
from .functions import (
    FUNCTION_CATALOG,
    WEIGHT_CATALOG,
    EntireFunction,
    PositivityError,
    WeightVector,
    catalog_function,
    catalog_weight,
)
from .growth import (
    Thm2Config,
    convexity_check,
    growth_verdict,
    r0_sensitivity,
    sheremeta_gap,
    suplinf_C,
    thm2_integral,
    thm2_ratio_scan,
    thm3_rhs,
)
from .index import estimate_joint_index, local_behavior_ratio
from .modulus import log_max_modulus, max_modulus
from .polydisc import GridSpec, MultiIndex, multi_indices, polydisc_samples, skeleton_samples
from .weights import kn_scan, lambda_bounds, prop1_check, qn_growth_probe, qn_scan

__version__ = "0.1.0"

__all__ = [
    "EntireFunction",
    "ExpressionError",
    "FUNCTION_CATALOG",
    "GridSpec",
    "MultiIndex",
    "PositivityError",
    "Thm2Config",
    "WEIGHT_CATALOG",
    "WeightVector",
    "catalog_function",
    "catalog_weight",
    "cauchy_derivatives",
    "convexity_check",
    "derivative_cauchy",
    "estimate_joint_index",
    "evaluate",
    "growth_verdict",
    "kn_scan",
    "lambda_bounds",
    "local_behavior_ratio",
    "log_max_modulus",
    "log_normalized_derivatives",
    "max_modulus",
    "multi_indices",
    "normalized_derivative",
    "parse_expression",
    "polydisc_samples",
    "prop1_check",
    "qn_growth_probe",
    "qn_scan",
    "r0_sensitivity",
    "sheremeta_gap",
    "skeleton_samples",
    "suplinf_C",
    "symbolic_derivative",
    "symbolic_partial",
    "thm2_integral",
    "thm2_ratio_scan",
    "thm3_rhs",
    "unparse",
]
