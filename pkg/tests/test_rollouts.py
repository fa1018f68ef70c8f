"""Sampled returns: estimator contracts, determinism, and kernel parity."""

import numpy as np
import pytest

from minimax_bayes import (
    GEOMETRIC,
    TRUNCATED,
    Mdp,
    rollout,
    sample_returns,
    state_values,
    truncated_horizon,
)
from minimax_bayes.rollouts import (
    HAVE_NUMBA,
    _walk_numpy,
    batch_returns,
    cumulative_init,
    cumulative_kernels,
    derive_rng,
)
from conftest import absorbing_mdp, make_mdp, uniform_init


def test_zero_rewards_give_zero_returns():
    m = make_mdp(3, states=3, actions=2)
    m = Mdp(m.transitions, np.zeros(3), m.discount)
    init = uniform_init(3)
    for mode in (GEOMETRIC, TRUNCATED):
        assert rollout(m, np.array([0, 1, 0]), init, mode, seed=5).total_reward == 0.0


def test_single_state_truncated_closed_form():
    c, gamma = 0.4, 0.8
    m = absorbing_mdp([c], gamma=gamma)
    t_max = truncated_horizon(gamma)
    expected = c * (1 - gamma**t_max) / (1 - gamma)
    sample = rollout(m, np.array([0]), [1.0], TRUNCATED, seed=9)
    assert sample.total_reward == pytest.approx(expected, rel=1e-12)
    assert sample.horizon_used == t_max
    assert sample.truncated


def test_geometric_mode_is_unbiased():
    m = make_mdp(17, states=3, actions=2, gamma=0.9)
    policy = np.array([0, 1, 1])
    init = uniform_init(3)
    exact = float(init @ state_values(m, policy))
    draws = sample_returns(m, policy, init, 100_000, GEOMETRIC, seed=11)
    se = draws.std() / np.sqrt(draws.size)
    assert abs(draws.mean() - exact) <= 3 * se


def test_geometric_horizons_start_at_one():
    m = absorbing_mdp([1.0], gamma=0.5)
    horizons = [rollout(m, np.array([0]), [1.0], GEOMETRIC, seed=s).horizon_used for s in range(50)]
    assert min(horizons) >= 1
    assert len(set(horizons)) > 1  # actually random


def test_identical_seeds_bitwise_identical():
    m = make_mdp(8, states=4, actions=2)
    policy = np.array([1, 0, 1, 0])
    init = uniform_init(4)
    a = sample_returns(m, policy, init, 257, TRUNCATED, seed=42)
    b = sample_returns(m, policy, init, 257, TRUNCATED, seed=42)
    assert np.array_equal(a, b)
    assert rollout(m, policy, init, GEOMETRIC, seed=1) == rollout(m, policy, init, GEOMETRIC, seed=1)
    c = sample_returns(m, policy, init, 257, TRUNCATED, seed=43)
    assert not np.array_equal(a, c)


def test_invalid_mode_rejected():
    m = absorbing_mdp([1.0], gamma=0.5)
    with pytest.raises(ValueError, match="mode"):
        rollout(m, np.array([0]), [1.0], "monte-carlo", seed=0)


def test_derive_rng_is_order_free():
    a = derive_rng(7, 2, 3, 1).random(4)
    _ = derive_rng(7, 2, 9, 9).random(100)
    b = derive_rng(7, 2, 3, 1).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, derive_rng(7, 2, 3, 2).random(4))


@pytest.mark.skipif(not HAVE_NUMBA, reason="compiled kernel unavailable")
def test_compiled_and_numpy_walks_agree_bitwise():
    mdps = [make_mdp(s, states=3, actions=2, gamma=0.7) for s in range(2)]
    actions = np.array([[0, 0, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int64)
    cum, rewards, gamma = cumulative_kernels(mdps, actions)
    rng = np.random.default_rng(5)
    n = 500
    pol = rng.integers(0, 3, n)
    wld = rng.integers(0, 2, n)
    state = rng.integers(0, 3, n).astype(np.int64)
    horizons = rng.integers(1, 40, n).astype(np.int64)
    uniforms = rng.random((n, 40))
    from minimax_bayes.rollouts import _walk_numba

    fast = _walk_numba(cum, rewards, pol, wld, state, horizons, uniforms, gamma)
    slow = _walk_numpy(cum, rewards, pol, wld, state, horizons, uniforms, gamma)
    assert np.array_equal(fast, slow)


def test_batch_returns_mixes_worlds():
    mdps = [absorbing_mdp([0.1], gamma=0.5), absorbing_mdp([-0.1], gamma=0.5)]
    cum, rewards, gamma = cumulative_kernels(mdps, np.zeros((1, 1), dtype=np.int64))
    init_cum = cumulative_init([1.0], 1)
    pol = np.zeros(4, dtype=np.int64)
    wld = np.array([0, 1, 0, 1], dtype=np.int64)
    out, _ = batch_returns(cum, rewards, gamma, pol, wld, init_cum, TRUNCATED, derive_rng(0, 2, 0))
    assert out[0] > 0 > out[1]
    assert out[0] == pytest.approx(-out[1])
