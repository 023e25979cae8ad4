"""Minimum sum-rate(-distortion) surfaces for two-terminal interactive
function computation, computed by alternating concave-envelope iteration
on discretized pmf families, with closed-form oracles, an optimality
verifier, and an achievable-scheme calculator."""

__version__ = "0.1.0"

from .core import (
    BOTTOM,
    FunctionSpec,
    ProductPmfGrid,
    RateField,
    binary_entropy,
    conditional_entropy_sum,
    is_bottom,
    rho0_field,
    zero_message_feasible,
)
from .envelope import (
    PointCloud2D,
    Profile1D,
    upper_concave_envelope_1d,
    upper_concave_envelope_2d,
)
from .iteration import (
    IterationConfig,
    IterationResult,
    IterationTrace,
    half_step_A,
    half_step_B,
    iterate,
    sum_rate_field,
)
from .oracles import (
    ClosedForm,
    MembershipReport,
    landmark_values,
    r_star_and_at_b,
    r_star_and_both,
    rho_star_field,
    verify_family_membership,
)

__all__ = [
    "BOTTOM",
    "ClosedForm",
    "FunctionSpec",
    "IterationConfig",
    "IterationResult",
    "IterationTrace",
    "MembershipReport",
    "PointCloud2D",
    "Profile1D",
    "ProductPmfGrid",
    "RateField",
    "binary_entropy",
    "conditional_entropy_sum",
    "half_step_A",
    "half_step_B",
    "is_bottom",
    "iterate",
    "landmark_values",
    "r_star_and_at_b",
    "r_star_and_both",
    "rho0_field",
    "rho_star_field",
    "sum_rate_field",
    "upper_concave_envelope_1d",
    "upper_concave_envelope_2d",
    "verify_family_membership",
    "zero_message_feasible",
]
