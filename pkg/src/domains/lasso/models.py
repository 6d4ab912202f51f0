"""
Data structures for the LASSO solver.

Array-carrying records are frozen dataclasses validated on construction;
solver settings are a pydantic model so they can be loaded from settings
and embedded in run configurations.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.config import get_settings
from core.errors import DimensionMismatchError, EngineError, NonFiniteInputError


class SolverConfig(BaseModel):
    """Stopping rule for cyclic coordinate descent."""

    tol: float = Field(1e-8, gt=0, description="Max absolute coordinate change per sweep")
    max_sweeps: int = Field(10_000, ge=1)
    kkt_tol: float = Field(1e-6, gt=0)

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_settings(cls) -> "SolverConfig":
        settings = get_settings()
        return cls(tol=settings.SOLVER_TOL, max_sweeps=settings.SOLVER_MAX_SWEEPS, kkt_tol=settings.SOLVER_KKT_TOL)


@dataclass(frozen=True, slots=True)
class RegressionSample:
    """One (covariate, observed efficacy) pair."""

    x: np.ndarray
    y: float

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] < 1:
            raise DimensionMismatchError("covariate must be a non-empty vector")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True, slots=True)
class LassoProblem:
    """
    Objective ||y - X beta||^2 / n + lam * ||beta||_1 over n samples.

    A problem either holds the raw samples, or only their sufficient
    statistics when built with from_statistics.

    Attributes:
        design: (n, d) covariate matrix X, None for statistics-only problems
        response: (n,) observed efficacies y, None for statistics-only problems
        lam: non-negative penalty weight
        gram: X^T X / n, derived when not supplied
        xty: X^T y / n, derived when not supplied
        yty: y^T y / n, derived when not supplied
        n_samples: n, derived from the design when not supplied
    """

    design: Optional[np.ndarray]
    response: Optional[np.ndarray]
    lam: float
    gram: Optional[np.ndarray] = field(default=None, repr=False)
    xty: Optional[np.ndarray] = field(default=None, repr=False)
    yty: Optional[float] = field(default=None, repr=False)
    n_samples: Optional[int] = None

    def __post_init__(self) -> None:
        lam = float(self.lam)
        if not np.isfinite(lam) or lam < 0:
            raise EngineError("lam must be a finite non-negative number")
        object.__setattr__(self, "lam", lam)
        if self.design is None or self.response is None:
            self._check_statistics()
        else:
            self._derive_statistics()

    def _derive_statistics(self) -> None:
        design = np.asarray(self.design, dtype=np.float64)
        response = np.asarray(self.response, dtype=np.float64)
        if design.ndim != 2:
            raise DimensionMismatchError("design must be a 2-D matrix")
        if response.ndim != 1 or response.shape[0] != design.shape[0]:
            raise DimensionMismatchError("response length must match the number of design rows")
        n, d = design.shape
        if n < 1:
            raise EngineError("a LASSO problem needs at least one sample")
        if d < 1:
            raise DimensionMismatchError("covariate dimension must be at least 1")
        if not (np.all(np.isfinite(design)) and np.all(np.isfinite(response))):
            raise NonFiniteInputError("design and response must be finite")

        gram = design.T @ design / n if self.gram is None else np.asarray(self.gram, dtype=np.float64)
        xty = design.T @ response / n if self.xty is None else np.asarray(self.xty, dtype=np.float64)
        yty = float(response @ response / n) if self.yty is None else float(self.yty)
        if gram.shape != (d, d) or xty.shape != (d,):
            raise DimensionMismatchError("sufficient statistics do not match the design dimension")

        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "xty", xty)
        object.__setattr__(self, "yty", yty)
        object.__setattr__(self, "n_samples", n)

    def _check_statistics(self) -> None:
        if self.gram is None or self.xty is None or self.yty is None or self.n_samples is None:
            raise EngineError("a problem without samples needs gram, xty, yty and n_samples")
        gram = np.asarray(self.gram, dtype=np.float64)
        xty = np.asarray(self.xty, dtype=np.float64)
        d = xty.shape[0] if xty.ndim == 1 else 0
        if d < 1 or gram.shape != (d, d):
            raise DimensionMismatchError("gram must be (d, d) and xty (d,) with d >= 1")
        if int(self.n_samples) < 1:
            raise EngineError("a LASSO problem needs at least one sample")
        if not (np.all(np.isfinite(gram)) and np.all(np.isfinite(xty)) and np.isfinite(self.yty)):
            raise NonFiniteInputError("sufficient statistics must be finite")
        object.__setattr__(self, "gram", gram)
        object.__setattr__(self, "xty", xty)
        object.__setattr__(self, "yty", float(self.yty))
        object.__setattr__(self, "n_samples", int(self.n_samples))

    @property
    def n(self) -> int:
        assert self.n_samples is not None
        return self.n_samples

    @property
    def d(self) -> int:
        assert self.xty is not None
        return int(self.xty.shape[0])

    @classmethod
    def from_statistics(
        cls, gram: np.ndarray, xty: np.ndarray, yty: float, n_samples: int, lam: float
    ) -> "LassoProblem":
        """Build a problem from X^T X / n, X^T y / n and y^T y / n alone."""
        return cls(design=None, response=None, lam=lam, gram=gram, xty=xty, yty=yty, n_samples=n_samples)

    @classmethod
    def from_samples(cls, samples: Sequence[RegressionSample], lam: float) -> "LassoProblem":
        """Build a problem from an ordered list of samples."""
        if not samples:
            raise EngineError("a LASSO problem needs at least one sample")
        dims = {s.x.shape[0] for s in samples}
        if len(dims) != 1:
            raise DimensionMismatchError("all samples must share the covariate dimension")
        design = np.vstack([s.x for s in samples])
        response = np.array([s.y for s in samples], dtype=np.float64)
        return cls(design=design, response=response, lam=lam)


@dataclass(frozen=True, slots=True)
class LassoEstimate:
    """Solver output together with its optimality certificate."""

    beta: np.ndarray
    iterations: int
    kkt_residual: float
    objective: float
    converged: bool
