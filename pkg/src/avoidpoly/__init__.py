"""Polynomial approximation on compact sets whose values avoid a countable set."""

from __future__ import annotations

__version__ = "0.1.0"

from .approx import (
    ApproximationFailure,
    FitError,
    PolynomialMap,
    approximate_to_tolerance,
    evaluate,
    fit_polynomial,
    lipschitz_bound,
    sup_error,
)
from .avoidance import (
    AvoidanceReport,
    LedgerRow,
    ProbePolicy,
    ShiftCertificate,
    ShiftSearchFailure,
    shift_search_deterministic,
    shift_search_randomized,
    verify_avoidance,
)
from .dimension import (
    CoverageProfile,
    DimensionEstimate,
    box_count,
    check_avoidance_condition,
    check_sum_dim_bound,
    coverage_profile,
    estimate_box_dimension,
)
from .geometry import CountableEnumeration, SampledCompactSet, dist_point_to_set, minkowski_sum, translate
from .pipeline import RunConfig, RunRecord, avoid_approximate, run_demo, run_from_specs

__all__ = [
    "approximate_to_tolerance",
    "ApproximationFailure",
    "avoid_approximate",
    "AvoidanceReport",
    "box_count",
    "check_avoidance_condition",
    "check_sum_dim_bound",
    "CountableEnumeration",
    "coverage_profile",
    "CoverageProfile",
    "DimensionEstimate",
    "dist_point_to_set",
    "estimate_box_dimension",
    "evaluate",
    "fit_polynomial",
    "FitError",
    "LedgerRow",
    "lipschitz_bound",
    "minkowski_sum",
    "PolynomialMap",
    "ProbePolicy",
    "run_demo",
    "run_from_specs",
    "RunConfig",
    "RunRecord",
    "SampledCompactSet",
    "shift_search_deterministic",
    "shift_search_randomized",
    "ShiftCertificate",
    "ShiftSearchFailure",
    "sup_error",
    "translate",
    "verify_avoidance",
]
