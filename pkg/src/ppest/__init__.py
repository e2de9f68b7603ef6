"""Piecewise min-max-polynomial estimators for additive properties of discrete distributions."""

from .base import FunctionEstimator, PropertyEstimator
from .estimator import (
    PropertyEstimate,
    SplitHistogram,
    bias_bound,
    build_piece_table,
    build_property_model,
    estimate_function,
    estimate_function_many,
    estimate_property,
    tail_bound,
    variance_bound,
)
from .exceptions import BadParam, CapExceeded, DomainError, NonConvergence, NoSolution, PPEstError, SpecMismatch
from .harness import lower_bound_gap, plug_in, run_trials, sample_split
from .minimax import Interval, minimax_approx, remez_minmax
from .partition import PartitionConfig
from .privacy import exhaustive_sensitivity, private_estimate, private_sample_complexity, privatize, sensitivity_bound
from .properties import BUILTIN_PROPERTIES, PropertySpec, builtin_spec
from .smoothness import effective_derivative, local_profile

__version__ = "0.1.0"

__all__ = [
    "FunctionEstimator",
    "PropertyEstimator",
    "PropertyEstimate",
    "SplitHistogram",
    "PartitionConfig",
    "PropertySpec",
    "Interval",
    "BUILTIN_PROPERTIES",
    "builtin_spec",
    "build_piece_table",
    "build_property_model",
    "estimate_function",
    "estimate_function_many",
    "estimate_property",
    "bias_bound",
    "variance_bound",
    "tail_bound",
    "minimax_approx",
    "remez_minmax",
    "effective_derivative",
    "local_profile",
    "sensitivity_bound",
    "exhaustive_sensitivity",
    "privatize",
    "private_estimate",
    "private_sample_complexity",
    "sample_split",
    "plug_in",
    "run_trials",
    "lower_bound_gap",
    "PPEstError",
    "NonConvergence",
    "DomainError",
    "BadParam",
    "SpecMismatch",
    "CapExceeded",
    "NoSolution",
]
