"""Seeded random problem instances for demos and tests.

Kernels are Dirichlet rows, rewards are uniform on [-1, 1] before the shared
normalization that puts every realized truncated return inside [-1, 1].
"""

from __future__ import annotations

import numpy as np

from .mdp import Mdp, normalize_rewards


def random_mdp(rng: np.random.Generator, num_states: int, num_actions: int, gamma: float) -> Mdp:
    """One random world with Dirichlet(1) kernel rows and uniform rewards."""
    transitions = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    rewards = rng.uniform(-1.0, 1.0, num_states)
    return Mdp(transitions, rewards, gamma)


def random_mdp_set(
    seed: int,
    num_states: int,
    num_actions: int,
    num_mdps: int,
    gamma: float,
    normalize: bool = True,
) -> list[Mdp]:
    """A seeded set of worlds sharing dimensions and discount.

    With ``normalize`` (the default) rewards are rescaled jointly so the
    solvers' [-1, 1] payoff precondition holds.
    """
    rng = np.random.default_rng(seed)
    mdps = [random_mdp(rng, num_states, num_actions, gamma) for _ in range(num_mdps)]
    if normalize:
        mdps, _ = normalize_rewards(mdps)
    return mdps


def uniform_init(num_states: int) -> np.ndarray:
    return np.full(num_states, 1.0 / num_states)
