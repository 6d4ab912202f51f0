"""
Diagnostics service - executable checks of the regret analysis.

Everything here compares agent state or episode output against ground truth
and the closed-form bounds; nothing feeds back into the policy. The single
compatibility constant supplied by the caller stands in for every
compatibility constant the bounds mention.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.errors import EmptySampleSetError, EngineError, InsufficientReplicationsError
from domains.agent.models import AgentState
from domains.agent.repository import SampleSet
from domains.environment.models import EnvironmentSpec, TreatmentParams
from domains.environment.service import (
    compatibility_constant,
    dominance_labels,
    generate_parameters,
    sample_batch,
)
from domains.lasso.models import LassoProblem, SolverConfig
from domains.lasso.service import solve_lasso
from domains.scheduler.models import Constants, TeamworkSchedule
from domains.scheduler.service import classify_epochs, teamwork_epoch_counts

from .models import AllocationAudit, DeviationRow, OracleInequalityReport, RateConditionResult, TeamSizeRow

logger = logging.getLogger(__name__)

BOUND_CLIP = 3.0

# (epoch, good-event flag or None when the flag was not evaluated)
EventTrace = Sequence[Tuple[int, Optional[bool]]]


# ============================================================================
# Rate-r optimal allocation
# ============================================================================


def audit_sample_set(sample_set: SampleSet, params: TreatmentParams, h: float) -> AllocationAudit:
    """
    Count the samples of an arm's set lying in that arm's dominance region.

    Raises:
        EmptySampleSetError: If the set holds no samples
    """
    if len(sample_set) == 0:
        raise EmptySampleSetError()
    if h <= 0:
        raise EngineError("h must be positive")
    labels = dominance_labels(params, sample_set.covariates, h)
    optimal = int(np.count_nonzero(labels == sample_set.arm))
    return AllocationAudit(arm=sample_set.arm, total=len(sample_set), optimal=optimal)


def check_rate_condition(audit: AllocationAudit, r: float, d: int, c2: float) -> RateConditionResult:
    """
    Size clause |A| >= 6 ln d / (r C2^2) and rate clause |A#| / |A| >= r / 2.

    Both comparisons are non-strict.
    """
    if not 0 < r <= 1:
        raise EngineError("r must lie in (0, 1]")
    if c2 <= 0 or d < 1:
        raise EngineError("c2 and d must be positive")
    required_total = 6 * math.log(d) / (r * c2**2)
    required_rate = r / 2
    reasons = []
    if audit.total < required_total:
        reasons.append(f"size: {audit.total} < {required_total:.4f}")
    if audit.rate < required_rate:
        reasons.append(f"rate: {audit.rate:.4f} < {required_rate:.4f}")
    return RateConditionResult(
        passed=not reasons, reasons=reasons, required_total=required_total, required_rate=required_rate
    )


def deviation_bound_raw(total: int, optimal: int, chi: float, d: int, r: float, c1: float, c2: float) -> float:
    """
    2 exp(-(r^2 / 16) C1 |A| chi^2 + ln d) + exp(-|A#| C2^2).

    The first exponent is capped so the value stays finite.
    """
    if total < 0 or optimal < 0 or d < 1:
        raise EngineError("counts must be non-negative and d positive")
    exponent = -(r**2 / 16) * c1 * total * chi**2 + math.log(d)
    first = 2.0 * math.exp(min(exponent, 700.0))
    second = math.exp(-optimal * c2**2)
    return first + second


def deviation_bound(total: int, optimal: int, chi: float, d: int, r: float, c1: float, c2: float) -> float:
    """Deviation bound of the batch-adapted LASSO, clipped to [0, 3]."""
    return min(BOUND_CLIP, max(0.0, deviation_bound_raw(total, optimal, chi, d, r, c1, c2)))


# ============================================================================
# Good event
# ============================================================================


def good_event_indicator(teamwork_betas: np.ndarray, params: TreatmentParams, h: float, x_max: float) -> bool:
    """True iff every arm's teamwork estimate is within h / (4 x_max) of the truth in L1."""
    betas = np.asarray(teamwork_betas, dtype=np.float64)
    if betas.shape != params.betas.shape:
        raise EngineError(f"expected estimates of shape {params.betas.shape}, got {betas.shape}")
    errors = np.abs(betas - params.betas).sum(axis=1)
    return bool(np.all(errors <= h / (4 * x_max)))


def good_event_bound(t: int, k: int) -> float:
    """min(1, 5K / t^4)."""
    return min(1.0, 5 * k / float(t) ** 4)


def _flag_at(trace: EventTrace, t: int) -> Optional[bool]:
    latest: Optional[bool] = None
    for epoch, flag in trace:
        if epoch > t:
            break
        if flag is not None:
            latest = flag
    return latest


def montecarlo_deviation_check(traces: Sequence[EventTrace], checkpoints: Sequence[int], k: int) -> List[DeviationRow]:
    """
    Empirical violation frequency of the good event against min(1, 5K / t^4).

    Each trace lists (epoch, flag) pairs of one replication in epoch order.
    At a checkpoint the latest evaluated flag at or before it is used; a
    replication without any evaluated flag by then counts as a violation.

    Raises:
        InsufficientReplicationsError: If fewer than two traces are given
    """
    if len(traces) < 2:
        raise InsufficientReplicationsError("at least two replications are required")
    rows = []
    for t in checkpoints:
        if t < 1:
            raise EngineError("checkpoints are epochs and start at 1")
        violations = sum(1 for trace in traces if _flag_at(trace, t) is not True)
        rows.append(
            DeviationRow(
                epoch=t,
                violation_frequency=violations / len(traces),
                bound=good_event_bound(t, k),
                replications=len(traces),
            )
        )
    return rows


# ============================================================================
# LASSO oracle inequality
# ============================================================================


def lambda_zero(gamma: float, sigma: float, x_max: float, n: int, d: int) -> float:
    """lambda_0(gamma) = 2 sigma x_max sqrt((gamma^2 + 2 ln d) / n)."""
    if n < 1 or d < 1:
        raise EngineError("n and d must be positive")
    return 2 * sigma * x_max * math.sqrt((gamma**2 + 2 * math.log(d)) / n)


def oracle_inequality_check(
    spec: EnvironmentSpec,
    n: int,
    gamma: float,
    draws: int,
    seed: int,
    samples_in_cone: int = 200,
    solver: Optional[SolverConfig] = None,
) -> OracleInequalityReport:
    """
    Monte-Carlo check of ||beta_hat - beta0||_1 <= 4 s0 lambda / phi^2 with lambda = 2 lambda_0(gamma).

    Each draw uses a fresh truncated-Gaussian design, the first arm of a
    world generated from the draw's seed, and the probed compatibility
    constant of the empirical Gram matrix. The violation frequency is
    reported next to the failure budget 2 exp(-gamma^2 / 2).
    """
    if draws < 1:
        raise EngineError("draws must be at least 1")
    design_spec = spec.model_copy(update={"covariate_law": "truncated_gaussian"})
    lam = 2 * lambda_zero(gamma, spec.sigma, spec.x_max, n, spec.d)
    streams = np.random.SeedSequence(seed).spawn(draws)

    violations = 0
    errors, bounds = [], []
    for i, stream in enumerate(streams):
        world_seed, design_seed, noise_seed, cone_seed = stream.generate_state(4)
        params = generate_parameters(design_spec, int(world_seed))
        beta0, support = params.betas[0], params.supports[0]
        design = sample_batch(design_spec, n, np.random.default_rng(design_seed)).covariates
        response = design @ beta0 + spec.sigma * np.random.default_rng(noise_seed).standard_normal(n)

        problem = LassoProblem(design=design, response=response, lam=lam)
        estimate = solve_lasso(problem, solver)
        assert problem.gram is not None
        phi = compatibility_constant(problem.gram, support, samples_in_cone, np.random.default_rng(cone_seed))
        error = float(np.abs(estimate.beta - beta0).sum())
        bound = math.inf if phi == 0.0 else 4 * spec.s0 * lam / phi**2
        errors.append(error)
        bounds.append(bound)
        if error > bound:
            violations += 1
        logger.debug("Oracle check draw %d: error=%.4f bound=%.4f", i, error, bound)

    return OracleInequalityReport(
        draws=draws,
        violations=violations,
        violation_frequency=violations / draws,
        budget=min(1.0, 2 * math.exp(-(gamma**2) / 2)),
        lam=lam,
        mean_error=float(np.mean(errors)),
        mean_bound=float(np.mean(bounds)),
    )


# ============================================================================
# Regret bounds
# ============================================================================


def good_epoch_regret_bound(t: int, constants: Constants, spec: EnvironmentSpec) -> float:
    """
    Per-user expected regret at a selfish epoch t under the good event:

        f(t) = [4 K b x_max + C3 ln d] / t + 8 K b x_max exp(-p*^2 C2^2 t / 32) + C3 ln t / t
    """
    if t < 1:
        raise EngineError("t must be at least 1")
    kbx = spec.k * spec.b * spec.x_max
    return (
        (4 * kbx + constants.c3 * math.log(spec.d)) / t
        + 8 * kbx * math.exp(-(constants.p_star**2) * constants.c2**2 * t / 32)
        + constants.c3 * math.log(t) / t
    )


def regret_upper_bound(horizon: int, n_users: int, q: int, constants: Constants, spec: EnvironmentSpec) -> float:
    """
    Cumulative regret bound of the policy over horizon epochs:

        N {2 b x_max [C5 + 6 q K ln T + K] + [4 K b x_max + C3 ln d] ln T + 8 K b x_max C4 + C3 (ln T)^2}
    """
    if horizon < 1 or n_users < 1 or q < 1:
        raise EngineError("horizon, n_users and q must be positive")
    log_t = math.log(horizon)
    bx = spec.b * spec.x_max
    kbx = spec.k * bx
    return n_users * (
        2 * bx * (constants.c5 + 6 * q * spec.k * log_t + spec.k)
        + (4 * kbx + constants.c3 * math.log(spec.d)) * log_t
        + 8 * kbx * constants.c4
        + constants.c3 * log_t**2
    )


# ============================================================================
# Teamwork sample counts
# ============================================================================


def teamwork_size_bounds(schedule: TeamworkSchedule, t: int, n_users: int) -> tuple[float, float]:
    """(N q ln t / 2, 6 N q ln t), valid for t >= max((K q)^2, 2)."""
    if t < 1 or n_users < 1:
        raise EngineError("t and n_users must be positive")
    scale = n_users * schedule.q * math.log(t)
    return 0.5 * scale, 6 * scale


def check_teamwork_sizes(state: AgentState, schedule: TeamworkSchedule, t: int, n_users: int) -> List[TeamSizeRow]:
    """
    Teamwork sample count of every arm after epoch t against its envelope.

    Raises:
        EngineError: If t is below max((K q)^2, 2) or beyond the agent's epoch
    """
    if t < max(schedule.block_length**2, 2):
        raise EngineError("the envelope holds from epoch max((K q)^2, 2) on")
    if t > state.current_epoch:
        raise EngineError(f"agent has only reached epoch {state.current_epoch}")
    lower, upper = teamwork_size_bounds(schedule, t, n_users)
    return [
        TeamSizeRow(arm=w, count=int(np.count_nonzero(s.epochs <= t)), lower=lower, upper=upper)
        for w, s in enumerate(state.teamwork_sets)
    ]


def expected_teamwork_counts(schedule: TeamworkSchedule, t: int, n_users: int) -> List[int]:
    """Teamwork sample count each arm must hold after epoch t under the schedule."""
    ts = np.array([t])
    return [n_users * int(teamwork_epoch_counts(schedule, ts, w)[0]) for w in range(schedule.k)]


def teamwork_purity(state: AgentState, schedule: TeamworkSchedule) -> bool:
    """True iff every teamwork entry of arm k was collected at a teamwork epoch of arm k."""
    for w, sample_set in enumerate(state.teamwork_sets):
        if len(sample_set) == 0:
            continue
        arms, _ = classify_epochs(schedule, sample_set.epochs)
        if np.any(arms != w) or any(p != "teamwork" for p in sample_set.provenances):
            return False
    return True
