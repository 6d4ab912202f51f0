"""
Application configuration management using Pydantic Settings.

This module holds every tunable default of the engine: solver tolerances,
the synthetic world defaults, the agent's practical penalty levels and the
harness parallelism. Values are loaded from environment variables, with an
optional .env file at the repository root for local runs.
"""

import logging
import os
from functools import lru_cache
from pathlib import Path

from pydantic import field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

BASE_DIR = Path(__file__).resolve().parent.parent.parent


class Settings(BaseSettings):
    """
    Engine settings loaded from environment variables.

    Environment Variables:
    - LOG_LEVEL: Logging level name (default: 'INFO')
    - SOLVER_TOL / SOLVER_KKT_TOL / SOLVER_MAX_SWEEPS: coordinate descent stopping rule
    - DEFAULT_X_MAX / DEFAULT_SIGMA: covariate bound and noise scale of generated worlds
    - DEFAULT_H / DEFAULT_LAMBDA1 / DEFAULT_LAMBDA2_SCALE: agent parameters for tuned runs
    - MASTER_SEED / MAX_WORKERS / PROBE_DRAWS: replication harness
    """

    # API configuration
    PROJECT_NAME: str = "Teamwork LASSO Bandit Engine"
    API_V1_PREFIX: str = "/api/v1"

    # Server configuration
    SERVER_HOST: str = "127.0.0.1"
    SERVER_PORT: int = 8000
    LOG_LEVEL: str = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL

    # Coordinate descent
    SOLVER_TOL: float = 1e-8  # max coordinate change per sweep
    SOLVER_KKT_TOL: float = 1e-6
    SOLVER_MAX_SWEEPS: int = 10_000

    # Synthetic world
    DEFAULT_X_MAX: float = 1.0
    DEFAULT_SIGMA: float = 0.5
    BETA_MAGNITUDE_LOW: float = 0.5
    BETA_MAGNITUDE_HIGH: float = 1.0
    GAUSSIAN_STD: float = 0.5  # in units of x_max, before truncation to the box

    # Agent defaults for tuned runs
    DEFAULT_H: float = 1.0
    DEFAULT_LAMBDA1: float = 0.1
    DEFAULT_LAMBDA2_SCALE: float = 0.5

    # Harness
    MASTER_SEED: int = 0
    MAX_WORKERS: int = 1
    PROBE_DRAWS: int = 20_000
    API_MAX_DECISIONS: int = 20_000

    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """
        Validate that the log level is a standard logging level name.

        Raises:
            ValueError: If the level is unknown
        """
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @field_validator(
        "SOLVER_TOL",
        "SOLVER_KKT_TOL",
        "DEFAULT_X_MAX",
        "GAUSSIAN_STD",
        "DEFAULT_H",
        "DEFAULT_LAMBDA1",
        "DEFAULT_LAMBDA2_SCALE",
    )
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Value must be positive")
        return v

    @field_validator("SOLVER_MAX_SWEEPS", "MAX_WORKERS", "PROBE_DRAWS", "API_MAX_DECISIONS")
    @classmethod
    def validate_count(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Value must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_magnitudes(self) -> "Settings":
        if not 0 < self.BETA_MAGNITUDE_LOW <= self.BETA_MAGNITUDE_HIGH:
            raise ValueError("BETA_MAGNITUDE_LOW must be positive and not exceed BETA_MAGNITUDE_HIGH")
        return self

    model_config = SettingsConfigDict(
        env_file=os.path.join(BASE_DIR, ".env"),
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",  # Ignore extra fields in .env
    )


@lru_cache
def get_settings() -> Settings:
    """
    Get cached settings instance.

    Uses lru_cache to ensure settings are loaded only once.

    Usage:
        from core.config import get_settings

        settings = get_settings()
        print(settings.SOLVER_TOL)
    """
    return Settings()
