"""
Logging setup shared by the HTTP app and the command line.
"""

import logging

from .config import Settings

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# These libraries log excessively at DEBUG level
NOISY_LOGGERS = ("httpcore", "httpx", "asyncio", "multipart")


def configure_logging(settings: Settings) -> None:
    """
    Configure root logging with the level from settings.

    Args:
        settings: Loaded application settings
    """
    logging.basicConfig(level=getattr(logging, settings.LOG_LEVEL), format=LOG_FORMAT)

    if settings.LOG_LEVEL == "DEBUG":
        for name in NOISY_LOGGERS:
            logging.getLogger(name).setLevel(logging.WARNING)
