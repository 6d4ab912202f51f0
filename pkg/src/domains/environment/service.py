"""
Environment service - synthetic worlds, feedback and ground-truth oracle.

Efficacy follows y = <beta_w, x> + eps with Gaussian noise. Ties between arms
are always broken toward the lowest index. Assumptions on the world (margin,
dominance mass, compatibility) are measured here rather than enforced.
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.stats import truncnorm

from core.errors import (
    DimensionMismatchError,
    EmptyDominanceRegionError,
    EngineError,
    InvalidArmError,
)

from .models import AssumptionEstimates, Batch, EnvironmentSpec, FeedbackBatch, TreatmentParams

logger = logging.getLogger(__name__)

MIN_PROBE_DRAWS = 1000
KAPPA_GRID_SIZE = 30


# ============================================================================
# World generation
# ============================================================================


def generate_parameters(spec: EnvironmentSpec, seed: int) -> TreatmentParams:
    """
    Draw K sparse arm vectors.

    Each arm gets exactly s0 nonzero coordinates at uniformly chosen indices,
    magnitudes uniform on [beta_low, beta_high] with random signs, rescaled
    when needed so that ||beta_w||_1 <= b.

    Raises:
        EngineError: If s0 exceeds d
    """
    if spec.s0 > spec.d:
        raise EngineError("s0 must not exceed d")

    rng = np.random.default_rng(seed)
    betas = np.zeros((spec.k, spec.d))
    for w in range(spec.k):
        idx = np.sort(rng.choice(spec.d, size=spec.s0, replace=False))
        values = rng.uniform(spec.beta_low, spec.beta_high, size=spec.s0) * rng.choice([-1.0, 1.0], size=spec.s0)
        l1 = float(np.abs(values).sum())
        if l1 > spec.b:
            values *= spec.b / l1
        betas[w, idx] = values
    return TreatmentParams.from_betas(betas)


def sample_batch(spec: EnvironmentSpec, n_users: int, rng: np.random.Generator, epoch: int = 0) -> Batch:
    """
    Draw N i.i.d. covariate vectors inside the box [-x_max, x_max]^d.

    Args:
        spec: World specification (dimension, bound, covariate law)
        n_users: Batch size N
        rng: Covariate stream
        epoch: Epoch stamped on the batch
    """
    if n_users < 1:
        raise EngineError("a batch needs at least one user")
    shape = (n_users, spec.d)
    if spec.covariate_law == "uniform_box":
        covariates = rng.uniform(-spec.x_max, spec.x_max, size=shape)
    else:
        scale = spec.gaussian_std * spec.x_max
        bound = spec.x_max / scale
        covariates = truncnorm.rvs(-bound, bound, loc=0.0, scale=scale, size=shape, random_state=rng)
        covariates = np.clip(covariates, -spec.x_max, spec.x_max)
    return Batch(covariates=covariates, epoch=epoch)


def realize_feedback(
    params: TreatmentParams,
    batch: Batch,
    arms: np.ndarray,
    rng: np.random.Generator,
    sigma: float,
) -> FeedbackBatch:
    """
    Observe rewards <beta_arm, x> + sigma * N(0, 1) for every user.

    A full vector of noise is drawn even when sigma is zero, so the noise
    stream advances identically for every policy.

    Raises:
        DimensionMismatchError: If arms does not have one entry per user
        InvalidArmError: If an arm index is outside [0, K)
    """
    arms = np.asarray(arms, dtype=np.int64)
    if arms.shape != (batch.size,):
        raise DimensionMismatchError(f"expected {batch.size} arms, got shape {arms.shape}")
    if arms.size and (arms.min() < 0 or arms.max() >= params.k):
        raise InvalidArmError(f"arm indices must lie in [0, {params.k})")
    noise = rng.standard_normal(batch.size)
    means = np.einsum("ij,ij->i", batch.covariates, params.betas[arms])
    return FeedbackBatch(rewards=means + sigma * noise, arms=arms)


# ============================================================================
# Oracle and regret
# ============================================================================


def efficacies(params: TreatmentParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.d:
        raise DimensionMismatchError(f"covariate dimension {x.shape[-1]} does not match d={params.d}")
    return x @ params.betas.T


def oracle_arm(params: TreatmentParams, x: np.ndarray) -> int:
    """Arm maximizing <beta_w, x>, lowest index on ties."""
    return int(np.argmax(efficacies(params, x)))


def instantaneous_regret(params: TreatmentParams, x: np.ndarray, arm: int) -> float:
    """Efficacy lost by playing arm instead of the oracle arm."""
    values = efficacies(params, x)
    return float(values.max() - values[params.check_arm(arm)])


def batch_regret(params: TreatmentParams, covariates: np.ndarray, arms: np.ndarray) -> np.ndarray:
    """Per-user instantaneous regret of a batch allocation."""
    values = efficacies(params, covariates)
    arms = np.asarray(arms, dtype=np.int64)
    if arms.size and (arms.min() < 0 or arms.max() >= params.k):
        raise InvalidArmError(f"arm indices must lie in [0, {params.k})")
    return values.max(axis=1) - values[np.arange(values.shape[0]), arms]


def dominance_labels(params: TreatmentParams, covariates: np.ndarray, h: float) -> np.ndarray:
    """
    Label each covariate row with the arm whose dominance region holds it.

    Returns:
        Integer array with the dominating arm, or -1 when no arm beats every
        other by more than h. With a single arm every row is labelled 0.
    """
    values = np.atleast_2d(efficacies(params, covariates))
    if params.k == 1:
        return np.zeros(values.shape[0], dtype=np.int64)
    ordered = np.sort(values, axis=1)
    gap = ordered[:, -1] - ordered[:, -2]
    best = np.argmax(values, axis=1)
    return np.where(gap > h, best, -1).astype(np.int64)


def membership_u_w(params: TreatmentParams, x: np.ndarray, h: float) -> Optional[int]:
    """Return the arm w with <beta_w, x> > max over the others + h, if any."""
    if h <= 0:
        raise EngineError("h must be positive")
    label = int(dominance_labels(params, np.asarray(x, dtype=np.float64)[None, :], h)[0])
    return None if label < 0 else label


# ============================================================================
# Assumption probes
# ============================================================================


def _margin_constant(values: np.ndarray) -> float:
    """Largest empirical P(0 < |gap| <= kappa) / kappa over arm pairs and a kappa grid."""
    k = values.shape[1]
    best = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            gaps = np.abs(values[:, i] - values[:, j])
            top = float(gaps.max())
            if top <= 0.0:
                continue
            positive = gaps[gaps > 0.0]
            for kappa in np.geomspace(top * 1e-3, top, KAPPA_GRID_SIZE):
                mass = np.count_nonzero(positive <= kappa) / values.shape[0]
                best = max(best, mass / kappa)
    return best


def estimate_assumption_constants(
    params: TreatmentParams,
    spec: EnvironmentSpec,
    m: int,
    seed: int,
    draws: Optional[np.ndarray] = None,
) -> AssumptionEstimates:
    """
    Measure the margin constant C0 and the dominance mass p_* on M draws.

    An arm is flagged sub-optimal when no draw lands in its dominance region
    and on every draw some other arm beats it by more than h. p_star_hat is
    the smallest dominance frequency among the remaining arms.

    Args:
        params: True arm vectors
        spec: World specification (covariate law, h)
        m: Number of covariate draws, at least 1000 when sampling
        seed: Seed of the covariate stream
        draws: Optional explicit covariate matrix used instead of sampling
    """
    if draws is None:
        if m < MIN_PROBE_DRAWS:
            raise EngineError(f"at least {MIN_PROBE_DRAWS} draws are required")
        covariates = sample_batch(spec, m, np.random.default_rng(seed)).covariates
    else:
        covariates = np.atleast_2d(np.asarray(draws, dtype=np.float64))
    total = covariates.shape[0]

    if params.k == 1:
        return AssumptionEstimates(
            p_star_hat=1.0, margin_c0_hat=0.0, dominance_frequencies=[1.0], dominance_mass=1.0, draws=total
        )

    values = efficacies(params, covariates)
    labels = dominance_labels(params, covariates, spec.h)
    frequencies = np.bincount(labels[labels >= 0], minlength=params.k) / total

    sub_optimal = []
    for w in range(params.k):
        if frequencies[w] > 0:
            continue
        others = np.delete(values, w, axis=1).max(axis=1)
        if np.all(values[:, w] < others - spec.h):
            sub_optimal.append(w)

    candidates = [frequencies[w] for w in range(params.k) if w not in sub_optimal]
    p_star = float(min(candidates)) if candidates else 0.0
    estimates = AssumptionEstimates(
        p_star_hat=p_star,
        margin_c0_hat=_margin_constant(values),
        sub_optimal_arms=sub_optimal,
        dominance_frequencies=[float(f) for f in frequencies],
        dominance_mass=float(np.mean(labels >= 0)),
        draws=total,
    )
    logger.debug("Assumption estimates: %s", estimates)
    return estimates


def compatibility_constant(
    gram: np.ndarray,
    support: np.ndarray,
    samples_in_cone: int,
    rng: np.random.Generator,
) -> float:
    """
    Sampled cone probe of the compatibility constant of a Gram matrix.

    Returns the minimum over sampled v with ||v_Sc||_1 <= 3 ||v_S||_1 of
    sqrt(|S| v^T G v / ||v_S||_1^2). The first vector has v_Sc = 0. The value
    is an upper bound on the true constant, and a longer sample never raises it.
    """
    gram = np.asarray(gram, dtype=np.float64)
    support = np.asarray(support, dtype=np.int64)
    d = gram.shape[0]
    if gram.shape != (d, d):
        raise DimensionMismatchError("gram must be square")
    if support.size == 0:
        raise EngineError("support must be non-empty")
    if samples_in_cone < 1:
        raise EngineError("samples_in_cone must be at least 1")

    off_support = np.setdiff1d(np.arange(d), support)
    best = math.inf
    for i in range(samples_in_cone):
        v = np.zeros(d)
        v_s = rng.standard_normal(support.size)
        direction = rng.standard_normal(off_support.size)
        scale = rng.uniform()
        v[support] = v_s
        l1_support = float(np.abs(v_s).sum())
        l1_direction = float(np.abs(direction).sum())
        if i > 0 and l1_direction > 0.0:
            v[off_support] = direction / l1_direction * 3.0 * l1_support * scale
        quad = max(float(v @ gram @ v), 0.0)
        best = min(best, math.sqrt(support.size * quad / l1_support**2))
    return best


def compatibility_probe(
    params: TreatmentParams,
    spec: EnvironmentSpec,
    m: int,
    samples_in_cone: int,
    seed: int,
    arm: Optional[int] = None,
    draws: Optional[np.ndarray] = None,
) -> float:
    """
    Probe the compatibility constant of the second-moment matrix on U_w.

    Sigma_w is estimated from the draws that land in arm w's dominance region;
    the result is the smallest per-arm probe (or the probe of one arm).

    Raises:
        EmptyDominanceRegionError: If an examined arm has no draw in its region
    """
    if m < 1 or samples_in_cone < 1:
        raise EngineError("m and samples_in_cone must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(params.k + 1)
    if draws is None:
        covariates = sample_batch(spec, m, np.random.default_rng(streams[0])).covariates
    else:
        covariates = np.atleast_2d(np.asarray(draws, dtype=np.float64))
    labels = dominance_labels(params, covariates, spec.h)

    arms = [params.check_arm(arm)] if arm is not None else list(range(params.k))
    phi = math.inf
    for w in arms:
        rows = covariates[labels == w]
        if rows.shape[0] == 0:
            raise EmptyDominanceRegionError(w)
        gram = rows.T @ rows / rows.shape[0]
        value = compatibility_constant(gram, params.supports[w], samples_in_cone, np.random.default_rng(streams[w + 1]))
        logger.debug("Compatibility probe arm %d: %.6f over %d draws", w, value, rows.shape[0])
        phi = min(phi, value)
    return phi
