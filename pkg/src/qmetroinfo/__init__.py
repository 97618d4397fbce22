"""Information analysis of quantum parameter estimation.

Evaluate and maximize the mutual information between measurement outcomes
and unknown channel parameters, certify optima through stationarity
residuals, simulate the grouped adaptive parity strategy whose information
grows like ln N, and check the bounds connecting estimator variance to
extractable information.  Angles are radians; information is in nats.
"""

__version__ = "0.1.0"

from .channel import (
    ParamChannel,
    equal_ladder,
    identity_channel,
    parallel_unitary,
    qubit_phase,
    spectrum_width,
    unitary_at,
)
from .exceptions import (
    DimensionCapError,
    ResourceLimitError,
    UnsupportedConfigurationError,
    ValidationError,
)
from .infomeasure import (
    DiscretePrior,
    Quadrature,
    Strategy,
    TabulatedPrior,
    UniformPrior,
    build_quadrature,
    cond_prob,
    marginal_prob,
    mutual_information,
    prior_entropy,
)
from .optimal_extraction import (
    OptimizeOptions,
    OptimumReport,
    dilate_povm,
    mi_gradient,
    optimize_strategy,
    orthogonality_check,
    povm_condition_residual,
    state_condition_residual,
)
from .qcore import Povm, eigh, ghz_state, pure_state, tensor, validate_povm
from .qcp_strategy import (
    QcpConfig,
    QcpOutcome,
    feedback_angle,
    group_bit_prob,
    qcp_dist_adaptive,
    qcp_dist_closed,
    qcp_mutual_information,
    qcp_sample,
)
from .tolerances import TOL, Tolerances
from .variance_bridge import (
    EstimatorRun,
    GaussianEstimator,
    ScalingFit,
    bound_check,
    empirical_mi,
    fit_scaling,
    gaussian_conditional_entropy,
    mi_upper_bound,
    simulate_estimates,
)

__all__ = [
    "TOL",
    "Tolerances",
    "ParamChannel",
    "Povm",
    "QcpConfig",
    "QcpOutcome",
    "Quadrature",
    "Strategy",
    "UniformPrior",
    "TabulatedPrior",
    "DiscretePrior",
    "OptimizeOptions",
    "OptimumReport",
    "EstimatorRun",
    "GaussianEstimator",
    "ScalingFit",
    "ValidationError",
    "DimensionCapError",
    "UnsupportedConfigurationError",
    "ResourceLimitError",
    "build_quadrature",
    "bound_check",
    "cond_prob",
    "dilate_povm",
    "eigh",
    "empirical_mi",
    "equal_ladder",
    "feedback_angle",
    "fit_scaling",
    "gaussian_conditional_entropy",
    "ghz_state",
    "group_bit_prob",
    "identity_channel",
    "marginal_prob",
    "mi_gradient",
    "mi_upper_bound",
    "mutual_information",
    "optimize_strategy",
    "orthogonality_check",
    "parallel_unitary",
    "povm_condition_residual",
    "prior_entropy",
    "pure_state",
    "qcp_dist_adaptive",
    "qcp_dist_closed",
    "qcp_mutual_information",
    "qcp_sample",
    "qubit_phase",
    "simulate_estimates",
    "spectrum_width",
    "state_condition_residual",
    "tensor",
    "unitary_at",
    "validate_povm",
]
