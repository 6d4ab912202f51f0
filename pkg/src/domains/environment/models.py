"""
Models for synthetic treatment-efficacy worlds.

EnvironmentSpec is a validated pydantic record (it travels through run
configurations, grid files and HTTP payloads); the array-carrying world,
batch and feedback records are frozen dataclasses.
"""

from dataclasses import dataclass
from typing import List, Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import get_settings
from core.errors import DimensionMismatchError, EngineError, InvalidArmError, NonFiniteInputError

CovariateLaw = Literal["uniform_box", "truncated_gaussian"]


class EnvironmentSpec(BaseModel):
    """Dimensions and bounds of a synthetic world."""

    d: int = Field(..., ge=1, description="Covariate dimension")
    k: int = Field(..., ge=1, description="Number of arms")
    s0: int = Field(..., ge=1, description="Nonzero coordinates per arm")
    x_max: float = Field(default_factory=lambda: get_settings().DEFAULT_X_MAX, gt=0)
    b: float = Field(5.0, gt=0, description="L1 bound of every arm vector")
    sigma: float = Field(default_factory=lambda: get_settings().DEFAULT_SIGMA, ge=0)
    h: float = Field(default_factory=lambda: get_settings().DEFAULT_H, gt=0, description="Dominance margin")
    covariate_law: CovariateLaw = "uniform_box"
    beta_low: float = Field(default_factory=lambda: get_settings().BETA_MAGNITUDE_LOW, gt=0)
    beta_high: float = Field(default_factory=lambda: get_settings().BETA_MAGNITUDE_HIGH, gt=0)
    gaussian_std: float = Field(
        default_factory=lambda: get_settings().GAUSSIAN_STD, gt=0, description="Pre-truncation scale in units of x_max"
    )

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_bounds(self) -> "EnvironmentSpec":
        if self.s0 > self.d:
            raise ValueError("s0 must not exceed d")
        if self.beta_low > self.beta_high:
            raise ValueError("beta_low must not exceed beta_high")
        return self


@dataclass(frozen=True, slots=True)
class TreatmentParams:
    """
    True arm vectors.

    Attributes:
        betas: (K, d) matrix, row w is beta_w
        supports: sorted nonzero indices of each row
    """

    betas: np.ndarray
    supports: Tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 2:
            raise DimensionMismatchError("betas must be a (K, d) matrix")
        if not np.all(np.isfinite(betas)):
            raise NonFiniteInputError("betas must be finite")
        supports = tuple(np.asarray(s, dtype=np.int64) for s in self.supports)
        if len(supports) != betas.shape[0]:
            raise DimensionMismatchError("one support per arm is required")
        for w, support in enumerate(supports):
            if not np.array_equal(support, np.flatnonzero(betas[w])):
                raise EngineError(f"support of arm {w} does not match its nonzero coordinates")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "supports", supports)

    @property
    def k(self) -> int:
        return int(self.betas.shape[0])

    @property
    def d(self) -> int:
        return int(self.betas.shape[1])

    @classmethod
    def from_betas(cls, betas: np.ndarray) -> "TreatmentParams":
        """Build params with supports read off the nonzero entries."""
        matrix = np.atleast_2d(np.asarray(betas, dtype=np.float64))
        return cls(betas=matrix, supports=tuple(np.flatnonzero(row) for row in matrix))

    def check_arm(self, arm: int) -> int:
        if not 0 <= int(arm) < self.k:
            raise InvalidArmError(f"arm {arm} is outside [0, {self.k})")
        return int(arm)


@dataclass(frozen=True, slots=True)
class Batch:
    """Covariates of the N users served at one epoch."""

    covariates: np.ndarray
    epoch: int = 0

    def __post_init__(self) -> None:
        covariates = np.asarray(self.covariates, dtype=np.float64)
        if covariates.ndim != 2 or covariates.shape[0] < 1:
            raise DimensionMismatchError("a batch is a non-empty (N, d) matrix")
        if not np.all(np.isfinite(covariates)):
            raise NonFiniteInputError("covariates must be finite")
        object.__setattr__(self, "covariates", covariates)

    @property
    def size(self) -> int:
        return int(self.covariates.shape[0])


@dataclass(frozen=True, slots=True)
class FeedbackBatch:
    """Observed rewards of one batch and the arms that produced them."""

    rewards: np.ndarray
    arms: np.ndarray

    def __post_init__(self) -> None:
        rewards = np.asarray(self.rewards, dtype=np.float64)
        arms = np.asarray(self.arms, dtype=np.int64)
        if rewards.shape != arms.shape or rewards.ndim != 1:
            raise DimensionMismatchError("rewards and arms must be vectors of equal length")
        if not np.all(np.isfinite(rewards)):
            raise NonFiniteInputError("rewards must be finite")
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "arms", arms)


class AssumptionEstimates(BaseModel):
    """Empirical margin and dominance constants of a world."""

    p_star_hat: float
    margin_c0_hat: float
    sub_optimal_arms: List[int] = Field(default_factory=list)
    dominance_frequencies: List[float] = Field(default_factory=list)
    dominance_mass: float = 0.0
    draws: int
