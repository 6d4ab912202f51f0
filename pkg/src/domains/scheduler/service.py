"""
Scheduler service - teamwork/selfish epoch structure and analysis constants.

Epochs are grouped into blocks of K*q consecutive epochs. Block b (1-indexed)
is a teamwork block exactly when b is a power of two; inside teamwork block
2^n, arm k owns the q epochs of round n:

    T(n, k) = {(2^n - 1) K q + j : q k + 1 <= j <= q (k + 1)}     (0-based arm k)

All logarithms are natural.
"""

import math

import numpy as np

from core.errors import EngineError, InvalidArmError, NoDominanceMassError
from domains.environment.models import EnvironmentSpec

from .models import Constants, EpochInterval, EpochMode, Lambda2Schedule, TeamworkSchedule

# ============================================================================
# Schedule
# ============================================================================


def _check_arm(schedule: TeamworkSchedule, arm: int) -> None:
    if not 0 <= arm < schedule.k:
        raise InvalidArmError(f"arm {arm} is outside [0, {schedule.k})")


def teamwork_round(schedule: TeamworkSchedule, n: int, arm: int) -> EpochInterval:
    """Epochs of the n-th teamwork round of an arm (n >= 0)."""
    if n < 0:
        raise EngineError("round index must be non-negative")
    _check_arm(schedule, arm)
    offset = (2**n - 1) * schedule.block_length
    return EpochInterval(start=offset + schedule.q * arm + 1, end=offset + schedule.q * (arm + 1))


def classify_epoch(schedule: TeamworkSchedule, t: int) -> EpochMode:
    """Teamwork(arm, round) when t lies in a teamwork round, otherwise Selfish."""
    if t < 1:
        raise EngineError("epochs start at 1")
    block = (t - 1) // schedule.block_length + 1
    if block & (block - 1):
        return EpochMode(kind="selfish")
    position = (t - 1) % schedule.block_length
    return EpochMode(kind="teamwork", arm=position // schedule.q, round=block.bit_length() - 1)


def classify_epochs(schedule: TeamworkSchedule, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorized classify_epoch.

    Returns:
        (arms, rounds): teamwork arm and round per epoch, -1 for selfish epochs
    """
    ts = np.asarray(ts, dtype=np.int64)
    if ts.size and ts.min() < 1:
        raise EngineError("epochs start at 1")
    block = (ts - 1) // schedule.block_length + 1
    teamwork = (block & (block - 1)) == 0
    position = (ts - 1) % schedule.block_length
    arms = np.where(teamwork, position // schedule.q, -1)
    rounds = np.where(teamwork, np.round(np.log2(block)).astype(np.int64), -1)
    return arms, rounds


def teamwork_epoch_counts(schedule: TeamworkSchedule, ts: np.ndarray, arm: int) -> np.ndarray:
    """Number of teamwork epochs of an arm among 1..t, for every t in ts."""
    _check_arm(schedule, arm)
    ts = np.asarray(ts, dtype=np.int64)
    counts = np.zeros_like(ts)
    if ts.size == 0:
        return counts
    horizon = int(ts.max())
    n = 0
    while True:
        start = teamwork_round(schedule, n, arm).start
        if start > horizon:
            break
        counts += np.clip(ts - start + 1, 0, schedule.q)
        n += 1
    return counts


def teamwork_sample_count(schedule: TeamworkSchedule, t: int, arm: int, n_users: int) -> int:
    """Size of the teamwork sample set of an arm after epoch t."""
    if t < 0:
        raise EngineError("t must be non-negative")
    return n_users * int(teamwork_epoch_counts(schedule, np.array([t]), arm)[0])


# ============================================================================
# Constants
# ============================================================================


def c1_value(spec: EnvironmentSpec, phi0: float) -> float:
    """C1(phi0) = phi0^4 / (512 s0^2 sigma^2 x_max^2)."""
    if spec.sigma <= 0:
        raise EngineError("C1 requires a positive noise scale")
    return phi0**4 / (512 * spec.s0**2 * spec.sigma**2 * spec.x_max**2)


def c2_value(spec: EnvironmentSpec, phi0: float) -> float:
    """C2 = min{1/2, phi0^2 / (256 s0 x_max^2)}."""
    return min(0.5, phi0**2 / (256 * spec.s0 * spec.x_max**2))


def smallest_c5(k: int, q: int) -> int:
    """Smallest integer t with t >= 24 K q ln t + 4 (K q)^2."""
    kq = k * q
    t = max(1, 4 * kq * kq)
    while t < 24 * kq * math.log(t) + 4 * kq * kq:
        t += 1
    return t


def q_zero(spec: EnvironmentSpec, n_users: int, p_star: float, c1: float, c2: float) -> int:
    """
    Lower bound scale for q (the schedule needs q >= 4 ceil(q0)).

    Raises:
        NoDominanceMassError: If p_star is not positive
    """
    if p_star <= 0:
        raise NoDominanceMassError()
    if c1 <= 0 or c2 <= 0 or n_users < 1:
        raise EngineError("c1, c2 and n_users must be positive")
    log_d = math.log(spec.d)
    base = n_users * p_star
    terms = (
        20 / base,
        4 / (base * c2**2),
        3 * log_d / (base * c2**2),
        1024 * spec.x_max**2 * log_d / (n_users * spec.h**2 * p_star**2 * c1),
    )
    return max(1, math.ceil(max(terms)))


def lambda1_value(spec: EnvironmentSpec, p_star: float, phi0: float) -> float:
    """lambda_1 = phi0^2 p_* h / (64 s0 x_max)."""
    return phi0**2 * p_star * spec.h / (64 * spec.s0 * spec.x_max)


def lambda2_scale(spec: EnvironmentSpec, p_star: float, phi0: float, c1: float) -> float:
    """Scale of the All-LASSO schedule: (phi0^2 / 2 s0) / sqrt(p_* C1)."""
    return phi0**2 / (2 * spec.s0) / math.sqrt(p_star * c1)


def lambda2_at(t: float, spec: EnvironmentSpec, p_star: float, phi0: float, c1: float) -> float:
    """lambda_{2,t} = (phi0^2 / 2 s0) sqrt((ln t + ln d) / (p_* C1 t))."""
    if t < 1:
        raise EngineError("t must be at least 1")
    return Lambda2Schedule(scale=lambda2_scale(spec, p_star, phi0, c1), d=spec.d)(t)


def derive_constants(
    spec: EnvironmentSpec,
    p_star: float,
    phi0: float,
    q: int = 1,
    n_users: int = 1,
    margin_c0: float = 1.0,
) -> Constants:
    """
    Evaluate every constant of the regret analysis.

    Args:
        spec: World specification (d, K, s0, x_max, b, sigma, h)
        p_star: Dominance mass of the world
        phi0: Compatibility constant
        q: Teamwork repetitions (enters C5)
        n_users: Batch size (enters q0)
        margin_c0: Margin constant C0 (enters C3)
    """
    if p_star <= 0:
        raise NoDominanceMassError()
    if phi0 <= 0 or margin_c0 <= 0:
        raise EngineError("phi0 and margin_c0 must be positive")
    c1 = c1_value(spec, phi0)
    c2 = c2_value(spec, phi0)
    return Constants(
        c1=c1,
        c2=c2,
        c3=1024 * spec.k * margin_c0 * spec.x_max**2 / (p_star**3 * c1),
        c4=8 * spec.k * spec.b * spec.x_max / (1 - math.exp(-(p_star**2) / 32)),
        c5=smallest_c5(spec.k, q),
        q0=q_zero(spec, n_users, p_star, c1, c2),
        lambda1=lambda1_value(spec, p_star, phi0),
        lambda2_scale=lambda2_scale(spec, p_star, phi0, c1),
        phi0=phi0,
        p_star=p_star,
        margin_c0=margin_c0,
    )
