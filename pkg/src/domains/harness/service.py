"""
Harness service - episodes, replications and grid sweeps.

Seeds are keyed, never sequential: the world depends on (seed, d, K, s0)
only, and the covariate and noise streams of a replication on
(seed, d, q, N, replication). Results are therefore independent of grid
order and of how replications are spread over worker processes.
"""

import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.config import get_settings
from core.errors import EngineError, NoDominanceMassError
from domains.agent.models import AgentConfig, Policy
from domains.agent.service import OraclePolicy, TeamworkLassoBandit
from domains.diagnostics.service import good_event_indicator
from domains.environment.models import EnvironmentSpec, TreatmentParams
from domains.environment.service import (
    batch_regret,
    compatibility_probe,
    estimate_assumption_constants,
    generate_parameters,
    realize_feedback,
    sample_batch,
)
from domains.lasso.models import SolverConfig
from domains.scheduler.models import Lambda2Schedule, TeamworkSchedule
from domains.scheduler.service import c1_value, classify_epoch, lambda1_value, lambda2_scale

from .models import CellSummary, EpochRecord, GridSpec, RegretLog, RunConfig, parse_cell_id

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 500
CONE_SAMPLES = 200


@dataclass(frozen=True)
class EpisodeTask:
    """Picklable unit of work for one replication."""

    config: RunConfig
    replication: int
    params: TreatmentParams
    agent_config: Optional[AgentConfig]


# ============================================================================
# Seeds and worlds
# ============================================================================


def world_seed(seed: int, spec: EnvironmentSpec) -> int:
    """Seed of the world shared by every cell with the same (seed, d, K, s0)."""
    return int(np.random.SeedSequence([seed, spec.d, spec.k, spec.s0]).generate_state(1)[0])


def _episode_streams(config: RunConfig, replication: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Independent covariate and noise generators of one replication."""
    entropy = [config.seed, config.spec.d, config.q, config.n_users, replication]
    covariate_seq, noise_seq = np.random.SeedSequence(entropy).spawn(2)
    return np.random.default_rng(covariate_seq), np.random.default_rng(noise_seq)


def build_world(config: RunConfig) -> TreatmentParams:
    return generate_parameters(config.spec, world_seed(config.seed, config.spec))


def build_agent_config(config: RunConfig, params: TreatmentParams) -> AgentConfig:
    """
    Agent parameters of a cell.

    The tuned rule takes lambda1 and the lambda2 scale from the run overrides
    or settings. The theory rule probes p_* and phi0 on the world and applies
    the closed-form penalties.

    Raises:
        NoDominanceMassError: If the theory rule finds no dominance mass
    """
    spec = config.spec
    h = config.agent_h or spec.h
    if config.lambda_rule == "tuned":
        settings = get_settings()
        lambda1 = config.lambda1 or settings.DEFAULT_LAMBDA1
        scale = config.lambda2_scale or settings.DEFAULT_LAMBDA2_SCALE
    else:
        probe_seed = world_seed(config.seed, spec)
        estimates = estimate_assumption_constants(params, spec, config.probe_draws, probe_seed)
        if estimates.p_star_hat <= 0:
            raise NoDominanceMassError()
        phi0 = compatibility_probe(params, spec, config.probe_draws, CONE_SAMPLES, probe_seed)
        lambda1 = lambda1_value(spec, estimates.p_star_hat, phi0)
        scale = lambda2_scale(spec, estimates.p_star_hat, phi0, c1_value(spec, phi0))
        logger.info(
            "Theory penalties for %s: p*=%.4f phi0=%.4f lambda1=%.4g lambda2_scale=%.4g",
            config.cell,
            estimates.p_star_hat,
            phi0,
            lambda1,
            scale,
        )
    return AgentConfig(
        k=spec.k,
        n_users=config.n_users,
        d=spec.d,
        q=config.q,
        h=h,
        lambda1=lambda1,
        lambda2_schedule=Lambda2Schedule(scale=scale, d=spec.d),
        solver=SolverConfig.from_settings(),
    )


# ============================================================================
# Episodes
# ============================================================================


def run_episode(
    config: RunConfig,
    replication: int,
    params: Optional[TreatmentParams] = None,
    cell: Optional[str] = None,
    agent_config: Optional[AgentConfig] = None,
) -> RegretLog:
    """
    Simulate epochs 1..T of one replication.

    Each epoch samples a batch, lets the policy allocate it, realizes the
    feedback, records the instantaneous regret against the oracle and hands
    the observations back to the policy. The good-event flag is evaluated at
    selfish epochs only.

    Args:
        config: Cell configuration
        replication: Replication index, keys the covariate and noise streams
        params: World to use instead of the one generated from the seed
        cell: Cell identifier written to the log, defaults to config.cell
        agent_config: Precomputed agent parameters

    Returns:
        RegretLog with one record per epoch
    """
    spec = config.spec
    params = params if params is not None else build_world(config)
    if params.k != spec.k or params.d != spec.d:
        raise EngineError("world does not match the run's (K, d)")
    schedule = TeamworkSchedule(k=spec.k, q=config.q)
    cell = cell or config.cell
    covariate_rng, noise_rng = _episode_streams(config, replication)

    policy: Policy
    if config.policy == "oracle":
        policy = OraclePolicy(params)
        h = config.agent_h or spec.h
    else:
        agent_config = agent_config or build_agent_config(config, params)
        policy = TeamworkLassoBandit(agent_config, schedule)
        h = agent_config.h

    logger.info("Episode start: cell=%s replication=%d epochs=%d", cell, replication, config.epochs)
    log = RegretLog(cell=cell, replication=replication)
    cum_regret = 0.0
    for t in range(1, config.epochs + 1):
        batch = sample_batch(spec, config.n_users, covariate_rng, epoch=t)
        arms = policy.allocate(t, batch)
        feedback = realize_feedback(params, batch, arms, noise_rng, spec.sigma)
        regrets = batch_regret(params, batch.covariates, arms)
        cum_regret += float(regrets.sum())
        policy.observe(t, batch, arms, feedback)

        mode = classify_epoch(schedule, t)
        good_event = None
        if not mode.is_teamwork:
            betas = policy.teamwork_betas()
            good_event = None if betas is None else good_event_indicator(betas, params, h, spec.x_max)
        teamwork_refits, all_refits = policy.refit_counts()
        log.records.append(
            EpochRecord(
                epoch=t,
                mode=mode.kind,
                regrets=regrets.tolist(),
                cum_regret=cum_regret,
                good_event=good_event,
                teamwork_refits=teamwork_refits,
                all_refits=all_refits,
            )
        )
        if t % PROGRESS_EVERY == 0:
            logger.debug("cell=%s replication=%d epoch=%d cum_regret=%.4f", cell, replication, t, cum_regret)

    log.update_epochs = policy.update_epochs
    if isinstance(policy, TeamworkLassoBandit):
        log.non_converged_fits = policy.state.non_converged_fits
    teamwork_refits, all_refits = policy.refit_counts()
    logger.info(
        "Episode end: cell=%s replication=%d cum_regret=%.4f refits=(%d, %d) updates=%d",
        cell,
        replication,
        cum_regret,
        teamwork_refits,
        all_refits,
        policy.update_epochs,
    )
    return log


def _run_task(task: EpisodeTask) -> RegretLog:
    return run_episode(task.config, task.replication, params=task.params, agent_config=task.agent_config)


def _tasks(config: RunConfig, params: Optional[TreatmentParams] = None) -> List[EpisodeTask]:
    params = params if params is not None else build_world(config)
    agent_config = None if config.policy == "oracle" else build_agent_config(config, params)
    return [EpisodeTask(config, rep, params, agent_config) for rep in range(config.replications)]


def _execute(tasks: Sequence[EpisodeTask], workers: int) -> List[RegretLog]:
    if workers <= 1 or len(tasks) <= 1:
        return [_run_task(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_run_task, tasks))


def run_replications(
    config: RunConfig, params: Optional[TreatmentParams] = None, workers: Optional[int] = None
) -> List[RegretLog]:
    """All replications of one cell, in replication order."""
    workers = workers if workers is not None else get_settings().MAX_WORKERS
    return _execute(_tasks(config, params), workers)


# ============================================================================
# Grids and summaries
# ============================================================================


def simulate_grid(grid: GridSpec, workers: Optional[int] = None) -> Tuple[List[RegretLog], List[CellSummary]]:
    """
    Run every cell of a grid.

    Returns:
        (logs, summaries) with logs in cell then replication order
    """
    workers = workers if workers is not None else get_settings().MAX_WORKERS
    tasks: List[EpisodeTask] = []
    for config in grid.cells():
        logger.info("Grid cell %s: %d replications of %d epochs", config.cell, config.replications, config.epochs)
        tasks.extend(_tasks(config))
    logs = _execute(tasks, workers)
    return logs, summarize_logs(logs)


def run_grid(grid: GridSpec, workers: Optional[int] = None) -> List[CellSummary]:
    """One summary per grid cell."""
    _, summaries = simulate_grid(grid, workers)
    return summaries


def summarize_logs(logs: Sequence[RegretLog]) -> List[CellSummary]:
    """Mean, min and max cumulative regret and mean update count per cell, in first-seen cell order."""
    grouped: Dict[str, List[RegretLog]] = defaultdict(list)
    for log in logs:
        grouped[log.cell].append(log)

    summaries = []
    for cell, cell_logs in grouped.items():
        d, k, q, n_users = parse_cell_id(cell)
        regrets = np.array([log.cum_regret for log in cell_logs])
        updates = [log.update_epochs for log in cell_logs if log.update_epochs is not None]
        summaries.append(
            CellSummary(
                cell=cell,
                d=d,
                k=k,
                q=q,
                n_users=n_users,
                replications=len(cell_logs),
                mean_regret=float(regrets.mean()),
                min_regret=float(regrets.min()),
                max_regret=float(regrets.max()),
                mean_updates=float(np.mean(updates)) if updates else 0.0,
            )
        )
    return summaries


def batched_update_count(total_decisions: int, n_users: int, k: int) -> float:
    """
    Updates needed when a refit happens at every non-teamwork epoch:

        K [D / (K N) - log2(D / (K N))]

    Raises:
        EngineError: If D / (K N) is below 1
    """
    if n_users < 1 or k < 1:
        raise EngineError("n_users and k must be positive")
    per_arm = total_decisions / (k * n_users)
    if per_arm < 1:
        raise EngineError("total_decisions must cover at least one epoch per arm")
    return k * (per_arm - math.log2(per_arm))
