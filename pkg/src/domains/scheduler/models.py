"""
Pydantic models for the teamwork schedule and the theory constants.
"""

import math
from numbers import Integral
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

# ============================================================================
# Schedule
# ============================================================================

EpochKind = Literal["teamwork", "selfish"]


class TeamworkSchedule(BaseModel):
    """Power-of-two block schedule: block 2^n holds round n for every arm."""

    k: int = Field(..., ge=1, description="Number of arms")
    q: int = Field(..., ge=1, description="Teamwork epochs per arm per round")

    model_config = ConfigDict(frozen=True)

    @property
    def block_length(self) -> int:
        return self.k * self.q


class EpochInterval(BaseModel):
    """Closed integer interval of epochs."""

    start: int
    end: int

    def __contains__(self, t: object) -> bool:
        return isinstance(t, Integral) and self.start <= t <= self.end

    def __len__(self) -> int:
        return self.end - self.start + 1


class EpochMode(BaseModel):
    """Classification of one epoch."""

    kind: EpochKind
    arm: Optional[int] = None
    round: Optional[int] = None

    model_config = ConfigDict(frozen=True)

    @property
    def is_teamwork(self) -> bool:
        return self.kind == "teamwork"


# ============================================================================
# Constants
# ============================================================================


class Lambda2Schedule(BaseModel):
    """lambda_2(t) = scale * sqrt((ln t + ln d) / t)."""

    scale: float = Field(..., gt=0)
    d: int = Field(..., ge=1)

    model_config = ConfigDict(frozen=True)

    def __call__(self, t: float) -> float:
        t = max(float(t), 1.0)
        return self.scale * math.sqrt((math.log(t) + math.log(self.d)) / t)


class Constants(BaseModel):
    """Constants of the regret analysis for one world and schedule."""

    c1: float = Field(..., gt=0)
    c2: float = Field(..., gt=0, le=0.5)
    c3: float = Field(..., gt=0)
    c4: float = Field(..., gt=0)
    c5: int = Field(..., ge=1)
    q0: int = Field(..., ge=1)
    lambda1: float = Field(..., gt=0)
    lambda2_scale: float = Field(..., gt=0)
    phi0: float = Field(..., gt=0)
    p_star: float = Field(..., gt=0, le=1)
    margin_c0: float = Field(..., gt=0)
