"""
Cyclic coordinate descent for the LASSO objective

    ||y - X beta||^2 / n + lam * ||beta||_1

No intercept and no standardization: covariates are used on their raw scale.
With the 1/n loss the univariate minimizer thresholds at lam / 2, scaled by
the column energy ||X_j||^2 / n.
"""

import logging
from typing import Callable, Optional

import numpy as np

from core.errors import DimensionMismatchError, NonFiniteInputError

from .models import LassoEstimate, LassoProblem, SolverConfig

logger = logging.getLogger(__name__)

SweepCallback = Callable[[int, np.ndarray], None]


def soft_threshold(z: float, gamma: float) -> float:
    """
    Apply the scalar soft-thresholding operator sign(z) * max(|z| - gamma, 0).

    Examples:
        >>> soft_threshold(3.0, 1.0)
        2.0
        >>> soft_threshold(-0.5, 1.0)
        0.0
    """
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _as_beta(problem: LassoProblem, beta: np.ndarray) -> np.ndarray:
    b = np.asarray(beta, dtype=np.float64)
    if b.shape != (problem.d,):
        raise DimensionMismatchError(f"beta must have shape ({problem.d},), got {b.shape}")
    if not np.all(np.isfinite(b)):
        raise NonFiniteInputError("beta must be finite")
    return b


def lasso_objective(problem: LassoProblem, beta: np.ndarray) -> float:
    """Evaluate the objective on the raw samples, or on the statistics when there are none."""
    b = _as_beta(problem, beta)
    penalty = problem.lam * np.abs(b).sum()
    if problem.design is not None and problem.response is not None:
        residual = problem.response - problem.design @ b
        return float(residual @ residual / problem.n + penalty)
    assert problem.gram is not None and problem.xty is not None and problem.yty is not None
    loss = problem.yty - 2.0 * float(b @ problem.xty) + float(b @ problem.gram @ b)
    return float(max(loss, 0.0) + penalty)


def kkt_residual(problem: LassoProblem, beta: np.ndarray) -> float:
    """
    Largest violation of the LASSO stationarity conditions.

    With g = (2/n) X^T (y - X beta): |g_j| <= lam where beta_j = 0 and
    g_j = lam * sign(beta_j) elsewhere.
    """
    b = _as_beta(problem, beta)
    assert problem.xty is not None and problem.gram is not None
    grad = 2.0 * (problem.xty - problem.gram @ b)
    lam = problem.lam
    violation = np.where(b == 0.0, np.maximum(np.abs(grad) - lam, 0.0), np.abs(grad - lam * np.sign(b)))
    return float(violation.max())


def _sweep(
    beta: np.ndarray,
    partial: np.ndarray,
    gram: np.ndarray,
    diag: np.ndarray,
    coords: np.ndarray,
    half_lam: float,
) -> float:
    """One pass of exact univariate minimization over coords; returns the max change."""
    max_change = 0.0
    for j in coords:
        gjj = diag[j]
        old = beta[j]
        z = partial[j] + gjj * old  # (1/n) X_j^T r_j with beta_j removed from the residual
        new = soft_threshold(z, half_lam) / gjj
        if new != old:
            delta = new - old
            beta[j] = new
            partial -= gram[:, j] * delta
            if abs(delta) > max_change:
                max_change = abs(delta)
    return max_change


def solve_lasso(
    problem: LassoProblem,
    config: Optional[SolverConfig] = None,
    warm_start: Optional[np.ndarray] = None,
    callback: Optional[SweepCallback] = None,
) -> LassoEstimate:
    """
    Minimize the LASSO objective by cyclic coordinate descent.

    Full sweeps alternate with sweeps over the current nonzero coordinates.
    The run converges once a full sweep changes no coordinate by tol or more
    and the KKT residual is at most kkt_tol.

    Args:
        problem: Samples and penalty
        config: Stopping rule (defaults from settings)
        warm_start: Starting point, typically the previous estimate
        callback: Called as callback(sweep_index, beta) after every sweep

    Returns:
        LassoEstimate with converged=False when max_sweeps was exhausted

    Raises:
        DimensionMismatchError: If warm_start has the wrong shape
        NonFiniteInputError: If warm_start is not finite
    """
    config = config or SolverConfig.from_settings()
    assert problem.gram is not None and problem.xty is not None
    gram, xty = problem.gram, problem.xty
    diag = np.diag(gram).copy()
    live = np.flatnonzero(diag > 0.0)
    zeros = np.zeros(problem.d)

    # All-zero design, or the origin already satisfies the subgradient condition
    if live.size == 0 or problem.lam >= 2.0 * float(np.abs(xty).max()):
        return LassoEstimate(
            beta=zeros,
            iterations=0,
            kkt_residual=kkt_residual(problem, zeros),
            objective=lasso_objective(problem, zeros),
            converged=True,
        )

    beta = zeros.copy() if warm_start is None else _as_beta(problem, warm_start).copy()
    beta[diag <= 0.0] = 0.0
    half_lam = problem.lam / 2.0

    sweeps = 0
    converged = False
    full = True
    kkt = float("inf")
    while sweeps < config.max_sweeps:
        if full:
            partial = xty - gram @ beta  # refreshed to stop drift
            coords = live
        else:
            coords = np.flatnonzero(beta)
        max_change = _sweep(beta, partial, gram, diag, coords, half_lam)
        sweeps += 1
        if callback is not None:
            callback(sweeps, beta.copy())

        if max_change >= config.tol:
            full = False
            continue
        if not full:
            full = True
            continue
        kkt = kkt_residual(problem, beta)
        if kkt <= config.kkt_tol:
            converged = True
            break

    if not converged:
        kkt = kkt_residual(problem, beta)
        origin_objective = lasso_objective(problem, zeros)
        if lasso_objective(problem, beta) > origin_objective:
            logger.warning("Coordinate descent ended above the origin objective; returning the origin")
            beta = zeros
            kkt = kkt_residual(problem, beta)

    return LassoEstimate(
        beta=beta,
        iterations=sweeps,
        kkt_residual=kkt,
        objective=lasso_objective(problem, beta),
        converged=converged,
    )
