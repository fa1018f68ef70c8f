"""Exact evaluation: induced chains, values, utilities, and the bounds."""

import numpy as np
import pytest

from minimax_bayes import (
    Mdp,
    belief_utility,
    check_distribution,
    discretization_bound,
    induced_chain,
    normalize_rewards,
    sample_returns,
    state_values,
    truncated_horizon,
    utility,
)
from conftest import absorbing_mdp, make_mdp, uniform_init


def chain_mdp():
    """State 0 -> state 1 -> state 1 (absorbing), rewards [0, 1], gamma 0.9."""
    t = np.zeros((2, 1, 2))
    t[0, 0, 1] = 1.0
    t[1, 0, 1] = 1.0
    return Mdp(t, [0.0, 1.0], 0.9)


class TestInducedChain:
    def test_single_state_self_loops(self):
        m = absorbing_mdp([1.0], gamma=0.5, num_actions=3)
        assert np.array_equal(induced_chain(m, np.array([2])), [[1.0]])

    def test_identity_action(self):
        t = np.zeros((2, 2, 2))
        t[:, 0] = np.eye(2)          # action 0 stays put
        t[:, 1] = np.eye(2)[::-1]    # action 1 swaps
        m = Mdp(t, [0.0, 0.0], 0.9)
        assert np.array_equal(induced_chain(m, np.array([0, 0])), np.eye(2))

    def test_rows_match_direct_indexing(self):
        m = make_mdp(11, states=3, actions=2)
        policy = np.array([1, 0, 1])
        chain = induced_chain(m, policy)
        for s in range(3):
            assert np.array_equal(chain[s], m.transitions[s, policy[s]])
        assert np.allclose(chain.sum(axis=1), 1.0, atol=1e-9)

    def test_dimension_mismatch(self):
        m = make_mdp(1, states=3, actions=2)
        with pytest.raises(ValueError):
            induced_chain(m, np.array([0, 1]))
        with pytest.raises(ValueError):
            induced_chain(m, np.array([0, 1, 2]))  # action out of range


class TestStateValues:
    def test_geometric_series_single_state(self):
        m = absorbing_mdp([1.0], gamma=0.5)
        assert state_values(m, np.array([0])) == pytest.approx([2.0], abs=1e-9)

    def test_zero_rewards(self):
        m = make_mdp(2, states=3, actions=2)
        m = Mdp(m.transitions, np.zeros(3), m.discount)
        assert state_values(m, np.array([0, 0, 0])) == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)

    def test_two_state_chain_hand_oracle(self):
        # V(1) = 1/(1-0.9) = 10, V(0) = 0 + 0.9 * V(1) = 9
        v = state_values(chain_mdp(), np.array([0, 0]))
        assert v == pytest.approx([9.0, 10.0], abs=1e-9)

    def test_linear_solve_residual(self):
        for seed in range(10):
            m = make_mdp(seed, states=4, actions=3, gamma=0.95)
            rng = np.random.default_rng(seed + 100)
            policy = rng.integers(0, 3, size=4)
            v = state_values(m, policy)
            chain = induced_chain(m, policy)
            residual = (np.eye(4) - m.discount * chain) @ v - m.rewards
            assert np.max(np.abs(residual)) <= 1e-9

    def test_value_bounds(self):
        for seed in range(10):
            m = make_mdp(seed, states=4, actions=2, gamma=0.8)
            v = state_values(m, np.zeros(4, dtype=np.int64))
            lo = m.rewards.min() / (1 - m.discount)
            hi = m.rewards.max() / (1 - m.discount)
            assert np.all(v >= lo - 1e-9) and np.all(v <= hi + 1e-9)


class TestUtility:
    def test_point_mass_picks_state_value(self):
        m = make_mdp(5, states=3, actions=2)
        policy = np.array([0, 1, 0])
        v = state_values(m, policy)
        for s in range(3):
            init = np.zeros(3)
            init[s] = 1.0
            assert utility(m, policy, init) == pytest.approx(v[s], abs=1e-12)

    def test_uniform_average(self):
        # rewards [1, 2] at gamma 0.5 on absorbing states give V = [2, 4]
        m = absorbing_mdp([1.0, 2.0], gamma=0.5)
        assert utility(m, np.array([0, 0]), [0.5, 0.5]) == pytest.approx(3.0, abs=1e-12)

    def test_monte_carlo_oracle(self):
        m = make_mdp(21, states=3, actions=2, gamma=0.9)
        policy = np.array([1, 0, 1])
        init = uniform_init(3)
        exact = utility(m, policy, init)
        draws = sample_returns(m, policy, init, 1_000_000, seed=77)
        se = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - exact) <= 3 * se + 2e-6  # 3 SE plus truncation bias

    def test_dimension_mismatch(self):
        m = make_mdp(5, states=3, actions=2)
        with pytest.raises(ValueError):
            utility(m, np.array([0, 1, 0]), [0.5, 0.5])


class TestBeliefUtility:
    def test_point_mass_belief(self):
        mdps = [make_mdp(s, states=2, actions=2, gamma=0.8) for s in range(3)]
        init = uniform_init(2)
        policy = np.array([0, 1])
        for j in range(3):
            belief = np.zeros(3)
            belief[j] = 1.0
            assert belief_utility(mdps, belief, policy, init) == pytest.approx(
                utility(mdps[j], policy, init), abs=1e-12
            )

    def test_identical_worlds(self):
        m = make_mdp(9, states=2, actions=2)
        init = uniform_init(2)
        policy = np.array([1, 1])
        assert belief_utility([m, m], [0.5, 0.5], policy, init) == pytest.approx(
            utility(m, policy, init), abs=1e-12
        )

    def test_uniform_is_arithmetic_mean(self):
        mdps = [make_mdp(30 + s, states=2, actions=2) for s in range(3)]
        init = uniform_init(2)
        policy = np.array([0, 0])
        expected = np.mean([utility(m, policy, init) for m in mdps])
        got = belief_utility(mdps, uniform_init(3), policy, init)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_length_mismatch(self):
        mdps = [make_mdp(0, states=2, actions=2)]
        with pytest.raises(ValueError):
            belief_utility(mdps, [0.5, 0.5], np.array([0, 0]), uniform_init(2))


class TestDiscretizationBound:
    def test_zero_perturbation(self):
        assert discretization_bound(0.0, 0.9) == 0.0

    def test_direct_substitution(self):
        assert discretization_bound(0.01, 0.9) == pytest.approx(1.0, abs=1e-12)
        assert discretization_bound(0.1, 0.5) == pytest.approx(0.4, abs=1e-12)

    def test_range_errors(self):
        with pytest.raises(ValueError):
            discretization_bound(0.1, 1.0)
        with pytest.raises(ValueError):
            discretization_bound(-0.1, 0.9)


class TestNormalization:
    def test_scale_and_range(self):
        raw = [make_mdp(s, states=3, actions=2, gamma=0.9) for s in range(3)]
        scaled, scale = normalize_rewards(raw)
        peak = max(np.max(np.abs(m.rewards)) for m in raw)
        assert scale == pytest.approx((1 - 0.9) / max(1.0, peak))
        for m in scaled:
            v = state_values(m, np.zeros(3, dtype=np.int64))
            assert np.max(np.abs(v)) <= 1.0 + 1e-9

    def test_truncated_returns_inside_unit_interval(self):
        scaled, _ = normalize_rewards([make_mdp(4, states=3, actions=2, gamma=0.9)])
        m = scaled[0]
        draws = sample_returns(m, np.array([0, 1, 0]), uniform_init(3), 5000, seed=3)
        assert np.max(np.abs(draws)) <= 1.0

    def test_mixed_discounts_rejected(self):
        a = make_mdp(0, gamma=0.9)
        b = make_mdp(1, gamma=0.8)
        with pytest.raises(ValueError):
            normalize_rewards([a, b])


class TestTruncationBias:
    def test_single_state_closed_form(self):
        # Deterministic world: bias is exactly |c| * gamma^T / (1 - gamma).
        for c, gamma in [(0.05, 0.9), (-0.3, 0.5)]:
            m = absorbing_mdp([c], gamma=gamma)
            exact = utility(m, np.array([0]), [1.0])
            t_max = truncated_horizon(gamma)
            truncated = sample_returns(m, np.array([0]), [1.0], 1, seed=0)[0]
            bias = abs(truncated - exact)
            assert bias == pytest.approx(abs(c) * gamma**t_max / (1 - gamma), rel=1e-9)
            assert bias <= abs(c) * gamma**t_max / (1 - gamma) + 1e-15


class TestPerturbationStability:
    def test_epsilon_pairs(self):
        eps = 1e-3
        rng = np.random.default_rng(123)
        for seed in range(20):
            base = normalize_rewards([make_mdp(seed, states=3, actions=2, gamma=0.9)])[0][0]
            other = make_mdp(1000 + seed, states=3, actions=2, gamma=0.9)
            # Mixing toward another kernel moves each entry by at most eps.
            kernel = (1 - eps) * base.transitions + eps * other.transitions
            rewards = base.rewards + rng.uniform(-eps, eps, 3)
            perturbed = Mdp(kernel, rewards, 0.9)
            policy = rng.integers(0, 2, size=3)
            init = uniform_init(3)
            diff = abs(utility(base, policy, init) - utility(perturbed, policy, init))
            assert diff <= discretization_bound(eps, 0.9)


class TestValidation:
    def test_bad_row_sum_names_indices(self):
        t = np.zeros((2, 1, 2))
        t[0, 0, 0] = 0.7
        t[1, 0, 1] = 1.0
        with pytest.raises(ValueError, match=r"transitions\[0\]\[0\]"):
            Mdp(t, [0.0, 0.0], 0.9)

    def test_bad_discount(self):
        t = np.zeros((1, 1, 1))
        t[0, 0, 0] = 1.0
        for gamma in (0.0, 1.0, -0.3, 1.5):
            with pytest.raises(ValueError):
                Mdp(t, [0.0], gamma)

    def test_distribution_checks(self):
        with pytest.raises(ValueError):
            check_distribution([0.5, 0.6])
        with pytest.raises(ValueError):
            check_distribution([-0.1, 1.1])
        with pytest.raises(ValueError):
            check_distribution([1.0], size=2)
        out = check_distribution([0.25, 0.75])
        assert out.tolist() == [0.25, 0.75]
