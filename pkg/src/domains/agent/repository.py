"""
In-memory sample store for one arm's teamwork or selfish sample set.

Samples are appended epoch by epoch into growable numpy buffers, and the
running sums X^T X, X^T y, y^T y are kept alongside so refits never rescan
the data.
"""

from dataclasses import dataclass
from typing import List, Literal, Sequence

import numpy as np

from core.errors import DimensionMismatchError, EmptySampleSetError, EngineError
from domains.lasso.models import LassoProblem

Provenance = Literal["teamwork", "selfish"]
_PROVENANCE_CODES = {"teamwork": 0, "selfish": 1}
_PROVENANCE_NAMES = ("teamwork", "selfish")

INITIAL_CAPACITY = 64


@dataclass(frozen=True, slots=True)
class SampleEntry:
    """One stored observation."""

    covariate: np.ndarray
    reward: float
    epoch: int
    user: int
    provenance: Provenance


class SampleSet:
    """Ordered (epoch, user) sample set of a single arm."""

    def __init__(self, arm: int, d: int):
        """
        Initialize an empty sample set.

        Args:
            arm: Arm the samples were allocated to
            d: Covariate dimension
        """
        self.arm = arm
        self.d = d
        self._size = 0
        self._x = np.empty((INITIAL_CAPACITY, d))
        self._y = np.empty(INITIAL_CAPACITY)
        self._epoch = np.empty(INITIAL_CAPACITY, dtype=np.int64)
        self._user = np.empty(INITIAL_CAPACITY, dtype=np.int64)
        self._provenance = np.empty(INITIAL_CAPACITY, dtype=np.int8)
        self._xtx = np.zeros((d, d))
        self._xty = np.zeros(d)
        self._yty = 0.0

    def __len__(self) -> int:
        return self._size

    def _reserve(self, extra: int) -> None:
        needed = self._size + extra
        capacity = self._x.shape[0]
        if needed <= capacity:
            return
        while capacity < needed:
            capacity *= 2
        self._x = np.resize(self._x, (capacity, self.d))
        self._y = np.resize(self._y, capacity)
        self._epoch = np.resize(self._epoch, capacity)
        self._user = np.resize(self._user, capacity)
        self._provenance = np.resize(self._provenance, capacity)

    def append(
        self,
        covariates: np.ndarray,
        rewards: np.ndarray,
        epoch: int,
        users: np.ndarray,
        provenance: Provenance,
    ) -> None:
        """
        Append the observations of one epoch.

        Raises:
            DimensionMismatchError: If shapes disagree with the set's dimension
            EngineError: If the epoch precedes samples already stored
        """
        covariates = np.atleast_2d(np.asarray(covariates, dtype=np.float64))
        rewards = np.asarray(rewards, dtype=np.float64).reshape(-1)
        users = np.asarray(users, dtype=np.int64).reshape(-1)
        count = covariates.shape[0]
        if covariates.shape[1] != self.d or rewards.shape[0] != count or users.shape[0] != count:
            raise DimensionMismatchError("covariates, rewards and users must describe the same samples")
        if count == 0:
            return
        if self._size and epoch < self._epoch[self._size - 1]:
            raise EngineError(f"epoch {epoch} precedes stored samples of arm {self.arm}")

        self._reserve(count)
        stop = self._size + count
        self._x[self._size : stop] = covariates
        self._y[self._size : stop] = rewards
        self._epoch[self._size : stop] = epoch
        self._user[self._size : stop] = users
        self._provenance[self._size : stop] = _PROVENANCE_CODES[provenance]
        self._size = stop
        self._xtx += covariates.T @ covariates
        self._xty += covariates.T @ rewards
        self._yty += float(rewards @ rewards)

    # -------------------------------------------------------------------------
    # Views
    # -------------------------------------------------------------------------
    @property
    def covariates(self) -> np.ndarray:
        return self._x[: self._size]

    @property
    def rewards(self) -> np.ndarray:
        return self._y[: self._size]

    @property
    def epochs(self) -> np.ndarray:
        return self._epoch[: self._size]

    @property
    def provenances(self) -> List[Provenance]:
        return [_PROVENANCE_NAMES[code] for code in self._provenance[: self._size]]

    @property
    def entries(self) -> List[SampleEntry]:
        return [
            SampleEntry(
                covariate=self._x[i].copy(),
                reward=float(self._y[i]),
                epoch=int(self._epoch[i]),
                user=int(self._user[i]),
                provenance=_PROVENANCE_NAMES[self._provenance[i]],
            )
            for i in range(self._size)
        ]

    def to_problem(self, lam: float) -> LassoProblem:
        """LASSO problem on this set, reusing the running sufficient statistics."""
        return problem_from_sets([self], lam)


def problem_from_sets(sets: Sequence[SampleSet], lam: float) -> LassoProblem:
    """
    Statistics-only LASSO problem on the union of sample sets.

    Raises:
        EmptySampleSetError: If the union holds no samples
    """
    filled = [s for s in sets if len(s)]
    if not filled:
        raise EmptySampleSetError()
    n = sum(len(s) for s in filled)
    gram = sum((s._xtx for s in filled), np.zeros_like(filled[0]._xtx)) / n
    xty = sum((s._xty for s in filled), np.zeros_like(filled[0]._xty)) / n
    yty = sum(s._yty for s in filled) / n
    return LassoProblem.from_statistics(gram=gram, xty=xty, yty=yty, n_samples=n, lam=lam)
