"""
Pydantic models for the diagnostic checks.
"""

from typing import List

from pydantic import BaseModel, Field, computed_field, model_validator


class AllocationAudit(BaseModel):
    """How many samples of an arm's set fall in that arm's dominance region."""

    arm: int
    total: int = Field(..., ge=1)
    optimal: int = Field(..., ge=0)

    @model_validator(mode="after")
    def validate_counts(self) -> "AllocationAudit":
        if self.optimal > self.total:
            raise ValueError("optimal count cannot exceed the total")
        return self

    @computed_field  # type: ignore[prop-decorator]
    @property
    def rate(self) -> float:
        return self.optimal / self.total


class RateConditionResult(BaseModel):
    """Outcome of the rate-r optimal allocation check."""

    passed: bool
    reasons: List[str] = Field(default_factory=list)
    required_total: float
    required_rate: float


class DeviationRow(BaseModel):
    """Empirical good-event violation frequency at one checkpoint."""

    epoch: int
    violation_frequency: float = Field(..., ge=0, le=1)
    bound: float = Field(..., ge=0, le=1)
    replications: int


class OracleInequalityReport(BaseModel):
    """Monte-Carlo spot check of the LASSO L1 oracle inequality."""

    draws: int
    violations: int
    violation_frequency: float
    budget: float
    lam: float
    mean_error: float
    mean_bound: float


class TeamSizeRow(BaseModel):
    """Teamwork sample count of one arm against its logarithmic envelope."""

    arm: int
    count: int
    lower: float
    upper: float

    @property
    def within(self) -> bool:
        return self.lower <= self.count <= self.upper
