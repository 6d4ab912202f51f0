"""
Tests for the teamwork schedule and the analysis constants.
"""

import math

import numpy as np
import pytest

from core.errors import EngineError, InvalidArmError, NoDominanceMassError
from domains.environment.models import EnvironmentSpec
from domains.scheduler.models import EpochInterval, Lambda2Schedule, TeamworkSchedule
from domains.scheduler.service import (
    c1_value,
    c2_value,
    classify_epoch,
    classify_epochs,
    derive_constants,
    lambda2_at,
    q_zero,
    smallest_c5,
    teamwork_epoch_counts,
    teamwork_round,
    teamwork_sample_count,
)

# RUN TESTS:
# pytest tests/test_scheduler.py
# pytest -m "not slow" tests/test_scheduler.py


# ============================================================================
# Schedule
# ============================================================================


class TestTeamworkRound:
    @pytest.mark.parametrize(
        "n, arm, expected",
        [
            (0, 0, (1, 2)),
            (0, 2, (5, 6)),
            (1, 0, (7, 8)),
            (2, 1, (21, 22)),
        ],
    )
    def test_rounds_of_three_arms_with_two_repetitions(self, n, arm, expected):
        interval = teamwork_round(TeamworkSchedule(k=3, q=2), n, arm)

        assert (interval.start, interval.end) == expected
        assert len(interval) == 2

    def test_numpy_epochs_are_members(self):
        interval = EpochInterval(start=4, end=6)

        assert np.int64(5) in interval
        assert np.int32(7) not in interval
        assert 5.0 not in interval

    def test_invalid_arm(self):
        with pytest.raises(InvalidArmError):
            teamwork_round(TeamworkSchedule(k=3, q=2), 0, 3)

    def test_negative_round(self):
        with pytest.raises(EngineError):
            teamwork_round(TeamworkSchedule(k=3, q=2), -1, 0)


class TestClassifyEpoch:
    def test_selfish_epoch(self):
        assert classify_epoch(TeamworkSchedule(k=3, q=2), 13).kind == "selfish"

    def test_teamwork_epoch_has_arm_and_round(self):
        mode = classify_epoch(TeamworkSchedule(k=3, q=2), 19)

        assert mode.is_teamwork
        assert mode.arm == 0
        assert mode.round == 2

    def test_first_block_is_teamwork(self):
        schedule = TeamworkSchedule(k=3, q=1)

        assert [classify_epoch(schedule, t).arm for t in (1, 2, 3)] == [0, 1, 2]
        assert classify_epoch(schedule, 7).kind == "selfish"

    def test_epochs_start_at_one(self):
        with pytest.raises(EngineError):
            classify_epoch(TeamworkSchedule(k=1, q=1), 0)

    def test_vectorized_matches_scalar(self):
        schedule = TeamworkSchedule(k=2, q=3)
        ts = np.arange(1, 500)

        arms, rounds = classify_epochs(schedule, ts)

        for t, arm, rnd in zip(ts, arms, rounds, strict=True):
            mode = classify_epoch(schedule, int(t))
            assert (mode.arm if mode.is_teamwork else -1) == arm
            assert (mode.round if mode.is_teamwork else -1) == rnd

    @pytest.mark.slow
    @pytest.mark.parametrize("k", range(1, 11))
    def test_rounds_partition_teamwork_epochs(self, k):
        horizon = 1_000_000
        ts = np.arange(1, horizon + 1)
        for q in range(1, 11):
            schedule = TeamworkSchedule(k=k, q=q)
            expected = np.full(horizon, -1)
            coverage = np.zeros(horizon, dtype=np.int64)
            n = 0
            while teamwork_round(schedule, n, 0).start <= horizon:
                for arm in range(k):
                    interval = teamwork_round(schedule, n, arm)
                    expected[interval.start - 1 : min(interval.end, horizon)] = arm
                    coverage[interval.start - 1 : min(interval.end, horizon)] += 1
                n += 1

            arms, _ = classify_epochs(schedule, ts)

            assert coverage.max() == 1
            np.testing.assert_array_equal(arms, expected)
            blocks = -(-ts // (k * q))
            np.testing.assert_array_equal(arms >= 0, (blocks & (blocks - 1)) == 0)


class TestTeamworkCounts:
    def test_counts_follow_rounds(self):
        schedule = TeamworkSchedule(k=3, q=2)

        counts = teamwork_epoch_counts(schedule, np.array([0, 1, 2, 6, 7, 8, 21, 22, 100]), 0)

        np.testing.assert_array_equal(counts, [0, 1, 2, 2, 3, 4, 6, 6, 10])

    def test_sample_count_scales_with_batch_size(self):
        schedule = TeamworkSchedule(k=3, q=2)

        assert teamwork_sample_count(schedule, 22, 1, n_users=5) == 5 * 6

    @pytest.mark.parametrize("k, q", [(k, q) for k in (1, 2, 3) for q in (1, 2, 3)])
    def test_logarithmic_envelope(self, k, q):
        schedule = TeamworkSchedule(k=k, q=q)
        ts = np.arange(max((k * q) ** 2, 2), 100_001)

        for arm in range(k):
            counts = teamwork_epoch_counts(schedule, ts, arm)
            log_t = np.log(ts)
            assert np.all(counts >= q * log_t / 2)
            assert np.all(counts <= 6 * q * log_t)


# ============================================================================
# Constants
# ============================================================================


@pytest.fixture
def unit_spec() -> EnvironmentSpec:
    return EnvironmentSpec(d=100, k=2, s0=5, sigma=1.0, x_max=1.0, h=1.0, b=5.0)


class TestConstants:
    def test_c1_and_c2(self, unit_spec):
        assert c1_value(unit_spec, phi0=1.0) == pytest.approx(1 / 12800)
        assert c2_value(unit_spec, phi0=1.0) == pytest.approx(1 / 1280)

    def test_c2_is_capped_at_one_half(self, unit_spec):
        assert c2_value(unit_spec, phi0=1000.0) == 0.5

    def test_c1_needs_noise(self):
        with pytest.raises(EngineError):
            c1_value(EnvironmentSpec(d=10, k=2, s0=1, sigma=0.0), phi0=1.0)

    def test_smallest_c5(self):
        assert smallest_c5(1, 1) == 119
        t = smallest_c5(3, 2)
        assert t >= 24 * 6 * math.log(t) + 4 * 36
        assert t - 1 < 24 * 6 * math.log(t - 1) + 4 * 36

    def test_lambda2_schedule(self):
        assert Lambda2Schedule(scale=0.5, d=1)(math.e) == pytest.approx(0.5 * math.sqrt(1 / math.e))

    def test_lambda2_is_decreasing_in_t(self, unit_spec):
        values = [lambda2_at(t, unit_spec, p_star=0.3, phi0=1.0, c1=1e-3) for t in (10, 100, 1000)]

        assert values[0] > values[1] > values[2]

    @pytest.mark.parametrize("n_users", [1, 2, 4, 8])
    def test_q_zero_halves_when_batch_doubles(self, unit_spec, n_users):
        single = q_zero(unit_spec, n_users=n_users, p_star=0.3, c1=1e-3, c2=1e-2)
        double = q_zero(unit_spec, n_users=2 * n_users, p_star=0.3, c1=1e-3, c2=1e-2)

        assert (single - 1) / 2 <= double <= (single + 1) / 2

    def test_q_zero_hand_example(self):
        # Terms 20, 16 and 12 ln 20 = 35.95; the last term is negligible with a large C1
        spec = EnvironmentSpec(d=20, k=2, s0=1, h=1.0, x_max=1.0)

        assert q_zero(spec, n_users=1, p_star=1.0, c1=1e6, c2=0.5) == 36
        assert q_zero(spec.model_copy(update={"d": 21}), n_users=1, p_star=1.0, c1=1e6, c2=0.5) >= 36

    def test_lambda2_hand_example(self):
        # ln t + ln d = 1 and 1 / t = 2 / e at d = 2, t = e / 2
        spec = EnvironmentSpec(d=2, k=2, s0=1)

        value = lambda2_at(math.e / 2, spec, p_star=1.0, phi0=1.0, c1=1.0)

        assert value == pytest.approx(0.5 * math.sqrt(2 / math.e))
        assert value == pytest.approx(0.4289, abs=1e-4)

    def test_c3_and_c4_closed_forms(self, unit_spec):
        constants = derive_constants(unit_spec, p_star=0.3, phi0=1.0, margin_c0=2.0)

        assert constants.c3 == pytest.approx(1024 * 2 * 2.0 * 1.0 / (0.3**3 / 12800))
        assert constants.c4 == pytest.approx(8 * 2 * 5.0 * 1.0 / (1 - math.exp(-(0.3**2) / 32)))

    def test_q_zero_requires_dominance_mass(self, unit_spec):
        with pytest.raises(NoDominanceMassError):
            q_zero(unit_spec, n_users=1, p_star=0.0, c1=1e-3, c2=1e-2)

    def test_derive_constants(self, unit_spec):
        constants = derive_constants(unit_spec, p_star=0.3, phi0=1.0, q=1, n_users=2)

        assert constants.c1 == pytest.approx(1 / 12800)
        assert constants.c5 == smallest_c5(2, 1)
        assert constants.lambda1 == pytest.approx(0.3 / (64 * 5))
        assert constants.q0 >= 1
        assert constants.c3 > 0 and constants.c4 > 0

    def test_derive_constants_rejects_zero_mass(self, unit_spec):
        with pytest.raises(NoDominanceMassError):
            derive_constants(unit_spec, p_star=0.0, phi0=1.0)
