"""
Agent configuration, mutable agent state and the policy protocol.
"""

from dataclasses import dataclass
from typing import List, Optional, Protocol

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from domains.environment.models import Batch, FeedbackBatch
from domains.lasso.models import LassoEstimate, SolverConfig
from domains.scheduler.models import Lambda2Schedule

from .repository import SampleSet


class AgentConfig(BaseModel):
    """Parameters of the Teamwork LASSO Bandit."""

    k: int = Field(..., ge=1, description="Number of arms")
    n_users: int = Field(..., ge=1, description="Batch size N")
    d: int = Field(..., ge=1, description="Covariate dimension")
    q: int = Field(..., ge=1, description="Teamwork epochs per arm per round")
    h: float = Field(..., gt=0, description="Dominance margin; candidate arms lie within h/2 of the best")
    lambda1: float = Field(..., gt=0, description="Penalty of the teamwork LASSO")
    lambda2_schedule: Lambda2Schedule
    solver: SolverConfig = Field(default_factory=SolverConfig.from_settings)

    model_config = ConfigDict(frozen=True)


@dataclass
class AgentState:
    """
    Sample sets and estimates of one running agent.

    Estimates are refit at the start of every selfish epoch, so whenever
    present they were fit on samples from epochs before current_epoch + 1.
    """

    teamwork_sets: List[SampleSet]
    selfish_sets: List[SampleSet]
    teamwork_estimates: List[Optional[LassoEstimate]]
    all_estimates: List[Optional[LassoEstimate]]
    refit_count_teamwork: int = 0
    refit_count_all: int = 0
    update_epochs: int = 0
    non_converged_fits: int = 0
    current_epoch: int = 0

    @property
    def k(self) -> int:
        return len(self.teamwork_sets)

    def sample_count(self) -> int:
        return sum(len(s) for s in self.teamwork_sets) + sum(len(s) for s in self.selfish_sets)


class Policy(Protocol):
    """Batch allocation policy driven by the episode runner."""

    def allocate(self, t: int, batch: Batch) -> np.ndarray: ...

    def observe(self, t: int, batch: Batch, arms: np.ndarray, feedback: FeedbackBatch) -> None: ...

    def teamwork_betas(self) -> Optional[np.ndarray]: ...

    def refit_counts(self) -> tuple[int, int]: ...

    @property
    def update_epochs(self) -> int: ...
