"""Numerical laboratory for error-disturbance relations in indirect measurement models."""

from edrlab.hilbert import (
    KronDiagonalUnitary,
    Operator,
    SpectralDecomposition,
    StateVector,
    commutator_expectation,
    function_of_operator,
    heisenberg_evolve,
    partial_inner_product_probe,
    spectral_decomposition,
    tensor_product,
)
from edrlab.models import (
    GridConfig,
    MeasurementModel,
    build_cnot_model,
    build_identity_model,
    build_random_model,
    build_von_neumann_model,
    gaussian_state,
    load_model,
    validate_model,
)
from edrlab.measurement import (
    ConditionalEnsemble,
    Estimator,
    conditional_states,
    measurement_value_operator,
    optimal_estimator,
    perturb_estimator,
    readout_distribution,
)
from edrlab.metrics import (
    MetricsBundle,
    compute_metrics,
    disturbance,
    informativeness,
    per_readout_error,
    precision,
    resolution,
    state_deviations,
    unbiasedness_residual,
)
from edrlab.inequalities import EDRReport, InequalityResult, evaluate_report

__version__ = "0.1.0"

__all__ = [
    "KronDiagonalUnitary",
    "Operator",
    "SpectralDecomposition",
    "StateVector",
    "commutator_expectation",
    "function_of_operator",
    "heisenberg_evolve",
    "partial_inner_product_probe",
    "spectral_decomposition",
    "tensor_product",
    "GridConfig",
    "MeasurementModel",
    "build_cnot_model",
    "build_identity_model",
    "build_random_model",
    "build_von_neumann_model",
    "gaussian_state",
    "load_model",
    "validate_model",
    "ConditionalEnsemble",
    "Estimator",
    "conditional_states",
    "measurement_value_operator",
    "optimal_estimator",
    "perturb_estimator",
    "readout_distribution",
    "MetricsBundle",
    "compute_metrics",
    "disturbance",
    "informativeness",
    "per_readout_error",
    "precision",
    "resolution",
    "state_deviations",
    "unbiasedness_residual",
    "EDRReport",
    "InequalityResult",
    "evaluate_report",
]
