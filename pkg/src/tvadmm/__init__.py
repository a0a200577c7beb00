"""Online perturbed proximal ADMM for time-varying two-block convex programs."""

from .atoms import (BoxIndicator, FunctionAtom, NonnegIndicator, Quadratic, SeparableFunction,
                    WeightedL1, Zero, evaluate, grad, prox)
from .oracles import (OracleError, OracleSolution, akkt_residual, gamma_sweep, measure_drifts,
                      oracle_trajectory, solve_akkt, tracking_bound, tracking_errors)
from .solver import (BoundsProfile, DivergenceError, GMetric, InadmissibleParams, ProblemSnapshot,
                     SolverParams, SolverState, Trajectory, bounds_from_snapshots,
                     check_step_conditions, run_online, select_params, step)

__version__ = "0.1.0"

__all__ = [
    "BoxIndicator", "FunctionAtom", "NonnegIndicator", "Quadratic", "SeparableFunction", "WeightedL1",
    "Zero", "evaluate", "grad", "prox", "OracleError", "OracleSolution", "akkt_residual",
    "gamma_sweep", "measure_drifts", "oracle_trajectory", "solve_akkt", "tracking_bound",
    "tracking_errors", "BoundsProfile", "DivergenceError", "GMetric", "InadmissibleParams",
    "ProblemSnapshot", "SolverParams", "SolverState", "Trajectory", "bounds_from_snapshots",
    "check_step_conditions", "run_online", "select_params", "step",
]
