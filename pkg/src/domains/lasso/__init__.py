"""LASSO solver domain: coordinate descent with KKT certificates."""

from .models import LassoEstimate, LassoProblem, RegressionSample, SolverConfig
from .service import kkt_residual, lasso_objective, soft_threshold, solve_lasso

__all__ = [
    "LassoEstimate",
    "LassoProblem",
    "RegressionSample",
    "SolverConfig",
    "kkt_residual",
    "lasso_objective",
    "soft_threshold",
    "solve_lasso",
]
