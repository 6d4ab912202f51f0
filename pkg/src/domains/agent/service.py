"""
Agent service - the Teamwork LASSO Bandit.

At a teamwork epoch the whole batch is assigned to the scheduled arm. At a
selfish epoch every arm with data is refit twice, once on its teamwork samples
with penalty lambda1 and once on all its samples with penalty lambda2(t - 1);
each user is then screened to the arms whose teamwork estimate is within h/2
of the best and committed to the screened arm with the largest all-sample
estimate. Ties go to the lowest arm index.
"""

import logging
from typing import List, Optional

import numpy as np

from core.errors import (
    BatchSizeError,
    DimensionMismatchError,
    EngineError,
    EpochOrderError,
    TeamworkLabelError,
)
from domains.environment.models import Batch, FeedbackBatch, TreatmentParams
from domains.environment.service import efficacies
from domains.lasso.models import LassoEstimate
from domains.lasso.service import solve_lasso
from domains.scheduler.models import TeamworkSchedule
from domains.scheduler.service import classify_epoch

from .models import AgentConfig, AgentState
from .repository import SampleSet, problem_from_sets

logger = logging.getLogger(__name__)


# ============================================================================
# State
# ============================================================================


def init_agent(config: AgentConfig) -> AgentState:
    """Empty sample sets, no estimates, epoch 0."""
    return AgentState(
        teamwork_sets=[SampleSet(arm=w, d=config.d) for w in range(config.k)],
        selfish_sets=[SampleSet(arm=w, d=config.d) for w in range(config.k)],
        teamwork_estimates=[None] * config.k,
        all_estimates=[None] * config.k,
    )


def _betas(estimates: List[Optional[LassoEstimate]], d: int) -> np.ndarray:
    """Stack estimates into a (K, d) matrix; arms without a fit get the zero vector."""
    betas = np.zeros((len(estimates), d))
    for w, estimate in enumerate(estimates):
        if estimate is not None:
            betas[w] = estimate.beta
    return betas


def teamwork_betas(state: AgentState, d: int) -> np.ndarray:
    return _betas(state.teamwork_estimates, d)


def all_betas(state: AgentState, d: int) -> np.ndarray:
    return _betas(state.all_estimates, d)


def refit_counts(state: AgentState) -> tuple[int, int]:
    """Cumulative (teamwork, all-sample) per-arm LASSO fits."""
    return state.refit_count_teamwork, state.refit_count_all


# ============================================================================
# Candidate screening
# ============================================================================


def candidate_mask(covariates: np.ndarray, betas: np.ndarray, h: float) -> np.ndarray:
    """
    Boolean (n, K) mask of the candidate arms of every covariate row.

    Arm w is a candidate for x when <x, beta_w> >= max_j <x, beta_j> - h/2,
    so the argmax is always included.
    """
    if h <= 0:
        raise EngineError("h must be positive")
    covariates = np.atleast_2d(np.asarray(covariates, dtype=np.float64))
    betas = np.atleast_2d(np.asarray(betas, dtype=np.float64))
    if covariates.shape[1] != betas.shape[1]:
        raise DimensionMismatchError("covariates and betas must share the dimension")
    values = covariates @ betas.T
    return values >= values.max(axis=1, keepdims=True) - h / 2.0


def candidate_set(x: np.ndarray, teamwork_betas: np.ndarray, h: float) -> frozenset[int]:
    """Arms whose teamwork-estimated efficacy at x is within h/2 of the best."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatchError("x must be a single covariate vector")
    mask = candidate_mask(x[None, :], teamwork_betas, h)[0]
    return frozenset(int(w) for w in np.flatnonzero(mask))


def select_arms(covariates: np.ndarray, screen_betas: np.ndarray, commit_betas: np.ndarray, h: float) -> np.ndarray:
    """Two-step rule: screen with the teamwork estimates, commit with the all-sample estimates."""
    mask = candidate_mask(covariates, screen_betas, h)
    scores = np.where(mask, np.atleast_2d(covariates) @ np.asarray(commit_betas).T, -np.inf)
    return np.argmax(scores, axis=1).astype(np.int64)


# ============================================================================
# Allocation and update
# ============================================================================


def _check_batch(state: AgentState, config: AgentConfig, t: int, batch: Batch) -> None:
    if t != state.current_epoch + 1:
        raise EpochOrderError(f"expected epoch {state.current_epoch + 1}, got {t}")
    if batch.size != config.n_users:
        raise BatchSizeError(f"batch holds {batch.size} users, expected {config.n_users}")
    if batch.covariates.shape[1] != config.d:
        raise DimensionMismatchError(f"covariate dimension {batch.covariates.shape[1]} does not match d={config.d}")


def _fit(
    state: AgentState,
    config: AgentConfig,
    sets: List[SampleSet],
    lam: float,
    previous: Optional[LassoEstimate],
    arm: int,
    role: str,
    t: int,
) -> LassoEstimate:
    warm = previous.beta if previous is not None else None
    estimate = solve_lasso(problem_from_sets(sets, lam), config.solver, warm_start=warm)
    if not estimate.converged:
        state.non_converged_fits += 1
        logger.warning(
            "LASSO fit did not converge (arm=%d, role=%s, epoch=%d, kkt=%.3e)",
            arm,
            role,
            t,
            estimate.kkt_residual,
        )
    return estimate


def refit_estimates(state: AgentState, config: AgentConfig, t: int) -> None:
    """Refit both estimates of every arm that has data, on samples up to epoch t - 1."""
    lambda2 = config.lambda2_schedule(t - 1)
    refitted = False
    for w in range(config.k):
        teamwork, selfish = state.teamwork_sets[w], state.selfish_sets[w]
        if len(teamwork):
            state.teamwork_estimates[w] = _fit(
                state, config, [teamwork], config.lambda1, state.teamwork_estimates[w], w, "teamwork", t
            )
            state.refit_count_teamwork += 1
            refitted = True
        if len(teamwork) or len(selfish):
            state.all_estimates[w] = _fit(
                state, config, [teamwork, selfish], lambda2, state.all_estimates[w], w, "all", t
            )
            state.refit_count_all += 1
            refitted = True
    if refitted:
        state.update_epochs += 1


def allocate_batch(
    state: AgentState,
    config: AgentConfig,
    schedule: TeamworkSchedule,
    t: int,
    batch: Batch,
) -> np.ndarray:
    """
    Assign an arm to every user of the epoch-t batch.

    Teamwork epochs send the whole batch to the scheduled arm. Selfish epochs
    refit every arm that has data, then screen and commit per user. An arm
    without data stays in both steps with the zero vector as its estimate.

    Args:
        state: Agent state after epoch t - 1
        config: Agent parameters
        schedule: Teamwork schedule
        t: Epoch, must be state.current_epoch + 1
        batch: N covariates

    Returns:
        Integer array of N arm indices

    Raises:
        EpochOrderError: If t is not the next epoch
        BatchSizeError: If the batch does not hold N users
    """
    _check_batch(state, config, t, batch)
    mode = classify_epoch(schedule, t)
    if mode.is_teamwork:
        assert mode.arm is not None
        return np.full(batch.size, mode.arm, dtype=np.int64)

    refit_estimates(state, config, t)
    return select_arms(
        batch.covariates,
        teamwork_betas(state, config.d),
        all_betas(state, config.d),
        config.h,
    )


def update(
    state: AgentState,
    schedule: TeamworkSchedule,
    t: int,
    batch: Batch,
    arms: np.ndarray,
    feedback: FeedbackBatch,
) -> AgentState:
    """
    Store the observations of epoch t and advance the agent to it.

    Teamwork epochs extend the scheduled arm's teamwork set; selfish epochs
    extend the selfish set of each user's chosen arm.

    Raises:
        EpochOrderError: If t is not the next epoch
        DimensionMismatchError: If arms or rewards do not match the batch
        TeamworkLabelError: If a teamwork epoch reports an arm other than the scheduled one
    """
    if t != state.current_epoch + 1:
        raise EpochOrderError(f"expected epoch {state.current_epoch + 1}, got {t}")
    arms = np.asarray(arms, dtype=np.int64)
    if arms.shape != (batch.size,) or feedback.rewards.shape != (batch.size,):
        raise DimensionMismatchError("arms and rewards must have one entry per user")
    if not np.array_equal(arms, feedback.arms):
        raise DimensionMismatchError("feedback was realized for a different allocation")

    users = np.arange(batch.size)
    mode = classify_epoch(schedule, t)
    if mode.is_teamwork:
        if np.any(arms != mode.arm):
            raise TeamworkLabelError(f"epoch {t} belongs to arm {mode.arm}, got arms {np.unique(arms).tolist()}")
        assert mode.arm is not None
        state.teamwork_sets[mode.arm].append(batch.covariates, feedback.rewards, t, users, "teamwork")
    else:
        for w in np.unique(arms):
            chosen = arms == w
            state.selfish_sets[int(w)].append(
                batch.covariates[chosen], feedback.rewards[chosen], t, users[chosen], "selfish"
            )
    state.current_epoch = t
    return state


# ============================================================================
# Policies
# ============================================================================


class TeamworkLassoBandit:
    """Stateful policy object over allocate_batch / update."""

    def __init__(self, config: AgentConfig, schedule: Optional[TeamworkSchedule] = None):
        self.config = config
        self.schedule = schedule or TeamworkSchedule(k=config.k, q=config.q)
        if self.schedule.k != config.k:
            raise EngineError("schedule and agent disagree on the number of arms")
        self.state = init_agent(config)

    def allocate(self, t: int, batch: Batch) -> np.ndarray:
        return allocate_batch(self.state, self.config, self.schedule, t, batch)

    def observe(self, t: int, batch: Batch, arms: np.ndarray, feedback: FeedbackBatch) -> None:
        update(self.state, self.schedule, t, batch, arms, feedback)

    def teamwork_betas(self) -> Optional[np.ndarray]:
        return teamwork_betas(self.state, self.config.d)

    def refit_counts(self) -> tuple[int, int]:
        return refit_counts(self.state)

    @property
    def update_epochs(self) -> int:
        return self.state.update_epochs


class OraclePolicy:
    """Plays the true best arm for every user; the zero-regret baseline."""

    def __init__(self, params: TreatmentParams):
        self.params = params
        self._epoch = 0

    def allocate(self, t: int, batch: Batch) -> np.ndarray:
        if t != self._epoch + 1:
            raise EpochOrderError(f"expected epoch {self._epoch + 1}, got {t}")
        return np.argmax(efficacies(self.params, batch.covariates), axis=1).astype(np.int64)

    def observe(self, t: int, batch: Batch, arms: np.ndarray, feedback: FeedbackBatch) -> None:
        self._epoch = t

    def teamwork_betas(self) -> Optional[np.ndarray]:
        return self.params.betas

    def refit_counts(self) -> tuple[int, int]:
        return 0, 0

    @property
    def update_epochs(self) -> int:
        return 0
