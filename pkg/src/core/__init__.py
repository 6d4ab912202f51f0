"""
Core module for the Teamwork LASSO Bandit engine.

This module provides configuration, logging setup and the shared error types.
"""

from .config import get_settings
from .errors import ArtifactIOError, EngineError
from .logging_setup import configure_logging

__all__ = [
    "get_settings",
    "configure_logging",
    "EngineError",
    "ArtifactIOError",
]
