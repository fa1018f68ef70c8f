"""Shared builders for seeded test instances."""

import numpy as np
import pytest

from minimax_bayes import Mdp
from minimax_bayes.instances import random_mdp, random_mdp_set, uniform_init


def make_mdp(seed, states=3, actions=2, gamma=0.9):
    return random_mdp(np.random.default_rng(seed), states, actions, gamma)


def make_set(seed, states=2, actions=2, num=3, gamma=0.9, normalize=True):
    return random_mdp_set(seed, states, actions, num, gamma, normalize=normalize)


def absorbing_mdp(rewards, gamma, num_actions=1):
    """Every state self-loops under every action; values are rewards/(1-gamma)."""
    rewards = np.asarray(rewards, dtype=float)
    s = rewards.size
    t = np.zeros((s, num_actions, s))
    for i in range(s):
        t[i, :, i] = 1.0
    return Mdp(t, rewards, gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


__all__ = ["absorbing_mdp", "make_mdp", "make_set", "uniform_init"]
