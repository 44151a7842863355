"""Sparse optimization toolkit: a globally convergent regularized block
Newton method for l0-penalized smooth minimization, objective oracles
for compressed sensing and sparse linear complementarity, a
hard-thresholding baseline, and a reproducible benchmark harness."""

from .core import (
    DimensionMismatchError,
    IndexSet,
    InvalidInputError,
    ThresholdParams,
    hard_threshold,
    is_tau_stationary,
    stationarity_residual,
    support,
    threshold_set,
)
from .oracles import (
    LeastSquaresOracle,
    NcpLcpOracle,
    ObjectiveOracle,
    RestrictedHessian,
    estimate_lipschitz,
    ncp_phi,
    ncp_phi_derivs,
)
from .solver import (
    ConfigurationError,
    SolveReport,
    SolverConfig,
    TheoryConstants,
    iht_baseline,
    lambda_bounds,
    solve,
    theory_constants,
)
from .bench import (
    ExperimentRecord,
    ProblemInstance,
    emit_csv,
    emit_json,
    gen_gaussian,
    gen_signal,
    make_instance,
    run_trials,
)

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatchError",
    "IndexSet",
    "InvalidInputError",
    "ThresholdParams",
    "hard_threshold",
    "is_tau_stationary",
    "stationarity_residual",
    "support",
    "threshold_set",
    "LeastSquaresOracle",
    "NcpLcpOracle",
    "ObjectiveOracle",
    "RestrictedHessian",
    "estimate_lipschitz",
    "ncp_phi",
    "ncp_phi_derivs",
    "ConfigurationError",
    "SolveReport",
    "SolverConfig",
    "TheoryConstants",
    "iht_baseline",
    "lambda_bounds",
    "solve",
    "theory_constants",
    "ExperimentRecord",
    "ProblemInstance",
    "emit_csv",
    "emit_json",
    "gen_gaussian",
    "gen_signal",
    "make_instance",
    "run_trials",
    "__version__",
]
