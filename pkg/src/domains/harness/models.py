"""
Pydantic models for simulation runs, grids and regret logs.
"""

import re
from typing import Iterator, List, Literal, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from core.config import get_settings
from core.errors import EngineError
from domains.environment.models import EnvironmentSpec
from domains.scheduler.models import EpochKind

PolicyName = Literal["teamwork", "oracle"]
LambdaRule = Literal["tuned", "theory"]

CELL_PATTERN = re.compile(r"^d(\d+)-k(\d+)-q(\d+)-n(\d+)$")


def cell_id(d: int, k: int, q: int, n_users: int) -> str:
    return f"d{d}-k{k}-q{q}-n{n_users}"


def parse_cell_id(cell: str) -> Tuple[int, int, int, int]:
    """Return (d, K, q, N) encoded in a cell identifier."""
    match = CELL_PATTERN.match(cell)
    if match is None:
        raise EngineError(f"malformed cell identifier: {cell!r}")
    d, k, q, n_users = (int(g) for g in match.groups())
    return d, k, q, n_users


# ============================================================================
# Run configuration
# ============================================================================


class RunConfig(BaseModel):
    """One simulation cell: a world, a schedule and a decision budget."""

    spec: EnvironmentSpec
    n_users: int = Field(..., ge=1, description="Batch size N")
    q: int = Field(..., ge=1, description="Teamwork epochs per arm per round")
    total_decisions: int = Field(..., ge=1, description="User-level decisions; epochs = total_decisions / N")
    replications: int = Field(1, ge=1)
    seed: int = Field(default_factory=lambda: get_settings().MASTER_SEED)
    lambda1: Optional[float] = Field(None, gt=0)
    lambda2_scale: Optional[float] = Field(None, gt=0)
    agent_h: Optional[float] = Field(None, gt=0, description="Screening margin of the agent, defaults to spec.h")
    policy: PolicyName = "teamwork"
    lambda_rule: LambdaRule = "tuned"
    probe_draws: int = Field(default_factory=lambda: get_settings().PROBE_DRAWS, ge=1000)

    @model_validator(mode="after")
    def validate_decisions(self) -> "RunConfig":
        if self.total_decisions % self.n_users:
            raise ValueError(f"total_decisions={self.total_decisions} is not divisible by N={self.n_users}")
        return self

    @property
    def epochs(self) -> int:
        return self.total_decisions // self.n_users

    @property
    def cell(self) -> str:
        return cell_id(self.spec.d, self.spec.k, self.q, self.n_users)


class GridSpec(BaseModel):
    """Sweep over d x q x N around a base run configuration."""

    base: RunConfig
    d: List[int] = Field(..., min_length=1)
    q: List[int] = Field(..., min_length=1)
    n_users: List[int] = Field(..., min_length=1)

    @field_validator("d", "q", "n_users")
    @classmethod
    def validate_positive(cls, values: List[int]) -> List[int]:
        if any(v < 1 for v in values):
            raise ValueError("grid values must be positive")
        return values

    @model_validator(mode="after")
    def validate_cells(self) -> "GridSpec":
        for n_users in self.n_users:
            if self.base.total_decisions % n_users:
                raise ValueError(f"total_decisions={self.base.total_decisions} is not divisible by N={n_users}")
        if self.base.spec.s0 > min(self.d):
            raise ValueError("s0 must not exceed the smallest swept d")
        return self

    def cells(self) -> Iterator[RunConfig]:
        """Run configurations of every cell in d, q, N order."""
        for d in self.d:
            for q in self.q:
                for n_users in self.n_users:
                    data = self.base.model_dump()
                    data["spec"]["d"] = d
                    data.update(q=q, n_users=n_users)
                    yield RunConfig.model_validate(data)


# ============================================================================
# Logs
# ============================================================================


class EpochRecord(BaseModel):
    """Outcome of one epoch of one episode."""

    epoch: int = Field(..., ge=1)
    mode: EpochKind
    regrets: List[float] = Field(default_factory=list, description="Per-user instantaneous regret")
    cum_regret: float = Field(..., ge=0)
    good_event: Optional[bool] = None
    teamwork_refits: int = 0
    all_refits: int = 0


class RegretLog(BaseModel):
    """Epoch records of one replication of one cell."""

    cell: str
    replication: int
    records: List[EpochRecord] = Field(default_factory=list)
    update_epochs: Optional[int] = None
    non_converged_fits: int = 0

    @property
    def cum_regret(self) -> float:
        return self.records[-1].cum_regret if self.records else 0.0

    def good_event_trace(self) -> List[Tuple[int, Optional[bool]]]:
        return [(r.epoch, r.good_event) for r in self.records]


class CellSummary(BaseModel):
    """Regret and update statistics of one cell across replications."""

    cell: str
    d: int
    k: int
    q: int
    n_users: int
    replications: int
    mean_regret: float
    min_regret: float
    max_regret: float
    mean_updates: float


class EpisodeSummary(BaseModel):
    """Headline numbers of one replication."""

    cell: str
    replication: int
    epochs: int
    cum_regret: float
    update_epochs: Optional[int]
    teamwork_refits: int
    all_refits: int

    @classmethod
    def from_log(cls, log: RegretLog) -> "EpisodeSummary":
        last = log.records[-1] if log.records else None
        return cls(
            cell=log.cell,
            replication=log.replication,
            epochs=len(log.records),
            cum_regret=log.cum_regret,
            update_epochs=log.update_epochs,
            teamwork_refits=last.teamwork_refits if last else 0,
            all_refits=last.all_refits if last else 0,
        )


class UpdateCountResponse(BaseModel):
    total_decisions: int
    n_users: int
    k: int
    updates: float
