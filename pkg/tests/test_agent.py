"""
Tests for the Teamwork LASSO Bandit agent and its sample store.
"""

import numpy as np
import pytest

from core.errors import (
    BatchSizeError,
    DimensionMismatchError,
    EmptySampleSetError,
    EngineError,
    EpochOrderError,
    TeamworkLabelError,
)
from domains.agent.models import AgentConfig
from domains.agent.repository import INITIAL_CAPACITY, SampleSet, problem_from_sets
from domains.agent.service import (
    OraclePolicy,
    TeamworkLassoBandit,
    all_betas,
    allocate_batch,
    candidate_mask,
    candidate_set,
    init_agent,
    select_arms,
    teamwork_betas,
    update,
)
from domains.environment.models import Batch, EnvironmentSpec, FeedbackBatch, TreatmentParams
from domains.environment.service import (
    dominance_labels,
    efficacies,
    estimate_assumption_constants,
    generate_parameters,
    realize_feedback,
    sample_batch,
)
from domains.scheduler.models import Lambda2Schedule, TeamworkSchedule
from domains.scheduler.service import classify_epoch

# RUN TESTS:
# pytest tests/test_agent.py


def make_config(k: int = 2, n_users: int = 3, d: int = 4, q: int = 1, h: float = 0.5) -> AgentConfig:
    return AgentConfig(
        k=k,
        n_users=n_users,
        d=d,
        q=q,
        h=h,
        lambda1=0.05,
        lambda2_schedule=Lambda2Schedule(scale=0.5, d=d),
    )


def zero_feedback(arms: np.ndarray) -> FeedbackBatch:
    return FeedbackBatch(rewards=np.zeros(arms.shape[0]), arms=arms)


def run_agent(agent: TeamworkLassoBandit, spec: EnvironmentSpec, epochs: int, seed: int) -> list[np.ndarray]:
    params = generate_parameters(spec, seed)
    covariate_rng, noise_rng = np.random.default_rng(seed + 1), np.random.default_rng(seed + 2)
    history = []
    for t in range(1, epochs + 1):
        batch = sample_batch(spec, agent.config.n_users, covariate_rng, epoch=t)
        arms = agent.allocate(t, batch)
        agent.observe(t, batch, arms, realize_feedback(params, batch, arms, noise_rng, spec.sigma))
        history.append(arms)
    return history


# ============================================================================
# Sample store
# ============================================================================


class TestSampleSet:
    def test_grows_past_initial_capacity(self):
        sample_set = SampleSet(arm=1, d=2)
        rng = np.random.default_rng(0)
        covariates = rng.standard_normal((INITIAL_CAPACITY * 3, 2))

        for t, x in enumerate(covariates, start=1):
            sample_set.append(x[None, :], np.array([t * 1.0]), t, np.array([0]), "selfish")

        assert len(sample_set) == INITIAL_CAPACITY * 3
        np.testing.assert_array_equal(sample_set.covariates, covariates)
        np.testing.assert_array_equal(sample_set.epochs, np.arange(1, INITIAL_CAPACITY * 3 + 1))

    def test_entries_keep_provenance_and_user(self):
        sample_set = SampleSet(arm=0, d=2)
        sample_set.append(np.eye(2), np.array([1.0, 2.0]), 1, np.array([0, 1]), "teamwork")
        sample_set.append(np.ones((1, 2)), np.array([3.0]), 4, np.array([2]), "selfish")

        entries = sample_set.entries

        assert [(e.epoch, e.user, e.provenance) for e in entries] == [
            (1, 0, "teamwork"),
            (1, 1, "teamwork"),
            (4, 2, "selfish"),
        ]
        assert entries[2].reward == 3.0

    def test_earlier_epoch_rejected(self):
        sample_set = SampleSet(arm=0, d=1)
        sample_set.append(np.ones((1, 1)), np.ones(1), 5, np.zeros(1), "selfish")

        with pytest.raises(EngineError):
            sample_set.append(np.ones((1, 1)), np.ones(1), 4, np.zeros(1), "selfish")

    def test_dimension_checked(self):
        with pytest.raises(DimensionMismatchError):
            SampleSet(arm=0, d=3).append(np.ones((2, 2)), np.ones(2), 1, np.arange(2), "teamwork")

    def test_statistics_match_stacked_samples(self):
        rng = np.random.default_rng(1)
        first, second = SampleSet(arm=0, d=3), SampleSet(arm=0, d=3)
        x1, x2 = rng.standard_normal((5, 3)), rng.standard_normal((7, 3))
        y1, y2 = rng.standard_normal(5), rng.standard_normal(7)
        first.append(x1, y1, 1, np.arange(5), "teamwork")
        second.append(x2, y2, 2, np.arange(7), "selfish")

        problem = problem_from_sets([first, second], lam=0.1)

        design, response = np.vstack([x1, x2]), np.concatenate([y1, y2])
        np.testing.assert_allclose(problem.gram, design.T @ design / 12)
        np.testing.assert_allclose(problem.xty, design.T @ response / 12)
        assert problem.n == 12

    def test_empty_union_rejected(self):
        with pytest.raises(EmptySampleSetError):
            problem_from_sets([SampleSet(arm=0, d=2)], lam=0.1)


# ============================================================================
# Candidate screening
# ============================================================================


class TestScreening:
    def test_candidates_within_half_margin(self):
        betas = np.array([[1.0], [0.8], [0.3]])

        assert candidate_set(np.array([1.0]), betas, h=0.5) == frozenset({0, 1})

    def test_argmax_is_always_a_candidate(self):
        rng = np.random.default_rng(2)
        covariates = rng.standard_normal((200, 5))
        betas = rng.standard_normal((4, 5))

        mask = candidate_mask(covariates, betas, h=0.01)

        assert np.all(mask[np.arange(200), np.argmax(covariates @ betas.T, axis=1)])

    def test_commit_picks_best_all_sample_estimate_among_candidates(self):
        screen = np.array([[1.0], [0.8], [0.3]])
        commit = np.array([[0.1], [0.2], [5.0]])

        arms = select_arms(np.array([[1.0]]), screen, commit, h=0.5)

        assert arms.tolist() == [1]

    def test_ties_go_to_lowest_index(self):
        arms = select_arms(np.zeros((2, 2)), np.zeros((3, 2)), np.zeros((3, 2)), h=0.5)

        assert arms.tolist() == [0, 0]

    def test_accurate_estimates_keep_the_optimal_arm(self):
        spec = EnvironmentSpec(d=10, k=3, s0=3, h=0.4)
        params = generate_parameters(spec, seed=7)
        rng = np.random.default_rng(7)
        noise = rng.standard_normal(params.betas.shape)
        # Every row perturbed by exactly h / (4 x_max) in L1
        estimates = params.betas + noise / np.abs(noise).sum(axis=1, keepdims=True) * spec.h / 4
        covariates = sample_batch(spec, 100_000, rng).covariates

        mask = candidate_mask(covariates, estimates, spec.h)

        optimal = np.argmax(efficacies(params, covariates), axis=1)
        assert np.all(mask[np.arange(covariates.shape[0]), optimal])
        labels = dominance_labels(params, covariates, spec.h)
        dominated = labels >= 0
        assert np.all(mask[dominated].sum(axis=1) == 1)

    def test_close_estimates_screen_out_sub_optimal_arms(self):
        spec = EnvironmentSpec(d=4, k=3, s0=1, h=0.5)
        betas = np.zeros((3, 4))
        betas[0, 0], betas[1, 0], betas[2, 1] = 1.0, -1.0, 0.05
        params = TreatmentParams.from_betas(betas)
        rng = np.random.default_rng(12)
        draws = rng.uniform(-1, 1, size=(5000, 4))
        draws[:, 0] = rng.uniform(0.6, 1.0, size=5000)
        sub_optimal = estimate_assumption_constants(params, spec, m=5000, seed=0, draws=draws).sub_optimal_arms
        assert sub_optimal == [1, 2]

        for _ in range(200):
            noise = rng.standard_normal(betas.shape)
            estimates = betas + noise / np.abs(noise).sum(axis=1, keepdims=True) * spec.h / (4 * spec.x_max)

            mask = candidate_mask(draws, estimates, spec.h)

            assert not mask[:, sub_optimal].any()
            assert mask[:, 0].all()

    def test_arm_without_data_competes_with_zero_estimate(self):
        config = make_config(k=2, n_users=1, d=1)
        state = init_agent(config)

        np.testing.assert_array_equal(teamwork_betas(state, 1), np.zeros((2, 1)))
        np.testing.assert_array_equal(all_betas(state, 1), np.zeros((2, 1)))
        # Arm 1 has no estimate; arm 0 is worse than zero at x = 1
        fitted = np.array([[-1.0], [0.0]])
        assert select_arms(np.array([[1.0]]), fitted, fitted, h=0.5).tolist() == [1]


# ============================================================================
# Allocation and update
# ============================================================================


class TestAllocation:
    def test_teamwork_epoch_assigns_scheduled_arm(self):
        config = make_config(k=3, n_users=4, d=2, q=1)
        state = init_agent(config)
        schedule = TeamworkSchedule(k=3, q=1)
        for t in (1, 2):
            batch = Batch(covariates=np.ones((4, 2)), epoch=t)
            arms = allocate_batch(state, config, schedule, t, batch)
            update(state, schedule, t, batch, arms, zero_feedback(arms))

        arms = allocate_batch(state, config, schedule, 3, Batch(covariates=np.ones((4, 2)), epoch=3))

        assert arms.tolist() == [2, 2, 2, 2]

    def test_zero_rewards_give_zero_estimates_and_arm_zero(self):
        config = make_config(k=2, n_users=3, d=4, q=1)
        agent = TeamworkLassoBandit(config)
        rng = np.random.default_rng(3)
        for t in range(1, 5):
            batch = Batch(covariates=rng.uniform(-1, 1, (3, 4)), epoch=t)
            arms = agent.allocate(t, batch)
            agent.observe(t, batch, arms, zero_feedback(arms))

        arms = agent.allocate(5, Batch(covariates=rng.uniform(-1, 1, (3, 4)), epoch=5))

        assert arms.tolist() == [0, 0, 0]
        np.testing.assert_array_equal(agent.teamwork_betas(), np.zeros((2, 4)))
        assert agent.refit_counts() == (2, 2)
        assert agent.update_epochs == 1

    def test_selfish_observations_go_to_chosen_arms(self):
        config = make_config(k=2, n_users=3, d=2, q=1)
        agent = TeamworkLassoBandit(config)
        for t in range(1, 5):
            batch = Batch(covariates=np.ones((3, 2)), epoch=t)
            arms = agent.allocate(t, batch)
            agent.observe(t, batch, arms, zero_feedback(arms))
        batch = Batch(covariates=np.ones((3, 2)), epoch=5)
        agent.allocate(5, batch)

        agent.observe(5, batch, np.array([1, 0, 1]), zero_feedback(np.array([1, 0, 1])))

        assert len(agent.state.selfish_sets[0]) == 1
        assert len(agent.state.selfish_sets[1]) == 2
        assert agent.state.selfish_sets[1].entries[1].user == 2

    def test_samples_are_conserved(self):
        spec = EnvironmentSpec(d=6, k=3, s0=2, sigma=0.3)
        agent = TeamworkLassoBandit(make_config(k=3, n_users=5, d=6, q=1))

        run_agent(agent, spec, epochs=40, seed=4)

        assert agent.state.sample_count() == 5 * 40
        teamwork_epochs = sum(classify_epoch(agent.schedule, t).is_teamwork for t in range(1, 41))
        assert sum(len(s) for s in agent.state.teamwork_sets) == 5 * teamwork_epochs

    def test_runs_are_deterministic(self):
        spec = EnvironmentSpec(d=6, k=2, s0=2, sigma=0.3)

        first = run_agent(TeamworkLassoBandit(make_config(k=2, n_users=4, d=6)), spec, epochs=30, seed=9)
        second = run_agent(TeamworkLassoBandit(make_config(k=2, n_users=4, d=6)), spec, epochs=30, seed=9)

        for a, b in zip(first, second, strict=True):
            np.testing.assert_array_equal(a, b)


class TestAgentErrors:
    def test_epoch_must_be_next(self):
        agent = TeamworkLassoBandit(make_config(n_users=2, d=2))

        with pytest.raises(EpochOrderError):
            agent.allocate(2, Batch(covariates=np.ones((2, 2))))

    def test_batch_size_checked(self):
        agent = TeamworkLassoBandit(make_config(n_users=2, d=2))

        with pytest.raises(BatchSizeError):
            agent.allocate(1, Batch(covariates=np.ones((3, 2))))

    def test_covariate_dimension_checked(self):
        agent = TeamworkLassoBandit(make_config(n_users=2, d=2))

        with pytest.raises(DimensionMismatchError):
            agent.allocate(1, Batch(covariates=np.ones((2, 3))))

    def test_teamwork_epoch_rejects_other_arms(self):
        agent = TeamworkLassoBandit(make_config(k=2, n_users=2, d=2))
        batch = Batch(covariates=np.ones((2, 2)), epoch=1)
        agent.allocate(1, batch)
        wrong = np.array([0, 1])

        with pytest.raises(TeamworkLabelError):
            agent.observe(1, batch, wrong, zero_feedback(wrong))

    def test_feedback_must_match_allocation(self):
        agent = TeamworkLassoBandit(make_config(k=2, n_users=2, d=2))
        batch = Batch(covariates=np.ones((2, 2)), epoch=1)
        arms = agent.allocate(1, batch)

        with pytest.raises(DimensionMismatchError):
            agent.observe(1, batch, arms, zero_feedback(np.array([1, 1])))

    def test_schedule_must_match_arms(self):
        with pytest.raises(EngineError):
            TeamworkLassoBandit(make_config(k=2), TeamworkSchedule(k=3, q=1))


def test_oracle_policy_plays_best_arm():
    spec = EnvironmentSpec(d=5, k=3, s0=2)
    params = generate_parameters(spec, seed=1)
    policy = OraclePolicy(params)
    batch = sample_batch(spec, 50, np.random.default_rng(1), epoch=1)

    arms = policy.allocate(1, batch)

    np.testing.assert_array_equal(arms, np.argmax(batch.covariates @ params.betas.T, axis=1))
    assert policy.refit_counts() == (0, 0)
    with pytest.raises(EpochOrderError):
        policy.allocate(3, batch)
