"""
Exception hierarchy for the bandit engine.

Every invalid input detected by the engine raises a subclass of EngineError,
which is itself a ValueError so callers that only care about bad input can
catch the builtin. Messages shared with tests live here as constants.
"""

from pathlib import Path

EMPTY_DOMINANCE_REGION = "empty dominance region"
NO_DOMINANCE_MASS = "no dominance mass"
EMPTY_SAMPLE_SET = "sample set is empty"


class EngineError(ValueError):
    """Base class for invalid inputs to the engine."""


class DimensionMismatchError(EngineError):
    """Vectors or matrices do not share the expected dimension."""


class NonFiniteInputError(EngineError):
    """An input contains NaN or infinite entries."""


class InvalidArmError(EngineError):
    """An arm index is outside [0, K)."""


class EpochOrderError(EngineError):
    """Agent calls arrived for an epoch other than the next one."""


class BatchSizeError(EngineError):
    """A batch does not hold the configured number of users."""


class TeamworkLabelError(EngineError):
    """Arms reported at a teamwork epoch differ from the scheduled arm."""


class EmptyDominanceRegionError(EngineError):
    """No covariate draw landed in an arm's dominance region."""

    def __init__(self, arm: int):
        super().__init__(f"{EMPTY_DOMINANCE_REGION} for arm {arm}")
        self.arm = arm


class NoDominanceMassError(EngineError):
    """The dominance mass p_* is not positive."""

    def __init__(self) -> None:
        super().__init__(NO_DOMINANCE_MASS)


class EmptySampleSetError(EngineError):
    """An operation needs at least one sample."""

    def __init__(self) -> None:
        super().__init__(EMPTY_SAMPLE_SET)


class InsufficientReplicationsError(EngineError):
    """A Monte-Carlo table needs at least two replications."""


class ArtifactIOError(OSError):
    """Reading or writing a result artifact failed."""

    def __init__(self, path: Path | str, reason: str):
        super().__init__(f"Failed to access {path}: {reason}")
        self.path = Path(path)
