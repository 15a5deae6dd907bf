"""Finite-dimensional approximation tools for quantum channels.

Extended entropies, a generalized Choi-Jamiolkowski correspondence, convex
roofs of output entropies, chi-functions and constrained chi-capacities.
"""

__version__ = "0.1.0"

from .linops import (  # noqa: F401
    InvalidOperatorError,
    entropy_H,
    entropy_S,
    eta,
    h2,
    partial_trace,
    relative_entropy,
    tensor,
    trace_distance,
    truncated_entropy,
)
from .channels import (  # noqa: F401
    QuantumOperation,
    Validity,
    apply,
    complementary,
    compose,
    stinespring,
    strong_distance,
    tensor_op,
    truncate_output,
    validate,
)
from .choi import (  # noqa: F401
    ChoiOperator,
    ReferenceState,
    choi_of,
    kraus_from_choi,
    t_sigma_membership,
    truncation_tail_bound,
)
from .roof import (  # noqa: F401
    Ensemble,
    OptimizerConfig,
    RoofResult,
    barycenter,
    chi_function,
    co_output_entropy,
    convex_roof,
    ensemble_from_params,
    entanglement_of_formation,
    holevo_chi,
    truncated_roof,
    wootters_eof,
)
from .capacity import (  # noqa: F401
    ConstraintSet,
    additivity_gap,
    amplification_factor,
    chi_capacity,
    energy_ball,
    is_entanglement_breaking,
    pinsker_certificate,
)
