"""Finite Markov decision processes with exact, linear-solve policy evaluation.

An ``Mdp`` is one candidate world: a transition kernel ``P[s][a]`` over next
states, a per-state reward vector, and a discount factor in (0, 1).  Policies
are memoryless and deterministic, stored as plain integer arrays mapping each
state to an action.  Sampling of returns lives in :mod:`minimax_bayes.rollouts`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Probability vectors (kernel rows, beliefs, state distributions) must sum to
# one within this tolerance.
PROB_TOL = 1e-9


def check_distribution(p, size: int | None = None, name: str = "distribution") -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {p.shape}")
    if size is not None and p.size != size:
        raise ValueError(f"{name} has length {p.size}, expected {size}")
    if p.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"{name} has non-finite entries")
    if p.min() < -PROB_TOL:
        raise ValueError(f"{name} has negative entries (min {p.min()!r})")
    total = p.sum()
    if abs(total - 1.0) > PROB_TOL:
        raise ValueError(f"{name} sums to {total!r}, not 1")
    return p


@dataclass(frozen=True)
class Mdp:
    """One candidate world.

    Attributes:
        transitions: kernel of shape (S, A, S); ``transitions[s, a]`` is the
            next-state distribution after taking action ``a`` in state ``s``.
        rewards: length-S vector; the reward collected in a state does not
            depend on the action.
        discount: discount factor, strictly inside (0, 1).
    """

    transitions: np.ndarray
    rewards: np.ndarray
    discount: float

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=float)
        r = np.asarray(self.rewards, dtype=float)
        if t.ndim != 3 or t.shape[0] != t.shape[2] or t.shape[0] < 1 or t.shape[1] < 1:
            raise ValueError(f"transitions must have shape (S, A, S), got {t.shape}")
        if r.shape != (t.shape[0],):
            raise ValueError(f"rewards must have shape ({t.shape[0]},), got {r.shape}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r))):
            raise ValueError("transitions and rewards must be finite")
        if t.min() < -PROB_TOL:
            raise ValueError("transition probabilities must be nonnegative")
        row_sums = t.sum(axis=2)
        err = np.abs(row_sums - 1.0)
        if err.max() > PROB_TOL:
            s, a = np.unravel_index(int(err.argmax()), err.shape)
            raise ValueError(
                f"transitions[{s}][{a}] sums to {row_sums[s, a]!r}, not 1"
            )
        if not 0.0 < float(self.discount) < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "discount", float(self.discount))

    @property
    def num_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transitions.shape[1]


def check_policy(actions, mdp: Mdp) -> np.ndarray:
    """Validate a deterministic action map against an MDP's dimensions."""
    a = np.asarray(actions)
    if a.ndim != 1 or a.size != mdp.num_states:
        raise ValueError(
            f"policy must map each of {mdp.num_states} states to an action, got shape {a.shape}"
        )
    if not np.issubdtype(a.dtype, np.integer):
        raise ValueError("policy entries must be integer action indices")
    if a.size and (a.min() < 0 or a.max() >= mdp.num_actions):
        raise ValueError(
            f"policy actions must lie in [0, {mdp.num_actions}), got {a.tolist()}"
        )
    return a.astype(np.int64)


def induced_chain(mdp: Mdp, policy) -> np.ndarray:
    """Markov chain obtained by fixing the policy: row s is ``P[s, policy[s]]``."""
    a = check_policy(policy, mdp)
    return mdp.transitions[np.arange(mdp.num_states), a]


def state_values(mdp: Mdp, policy) -> np.ndarray:
    """Exact discounted values, one per state, via a dense linear solve.

    Solves (I - gamma * P) V = rewards for the chain induced by the policy.
    The system is always invertible for discount < 1.
    """
    chain = induced_chain(mdp, policy)
    a = np.eye(mdp.num_states) - mdp.discount * chain
    return np.linalg.solve(a, mdp.rewards)


def utility(mdp: Mdp, policy, init) -> float:
    """Expected discounted return from a random start state drawn from ``init``."""
    init = check_distribution(init, mdp.num_states, "init")
    return float(init @ state_values(mdp, policy))


def belief_utility(mdp_set, belief, policy, init) -> float:
    """Utility averaged over worlds: sum_m belief[m] * utility(mdp_m, policy, init)."""
    belief = check_distribution(belief, len(mdp_set), "belief")
    total = 0.0
    for weight, mdp in zip(belief, mdp_set):
        if weight == 0.0:
            continue
        total += weight * utility(mdp, policy, init)
    return float(total)


def normalize_rewards(mdp_set) -> tuple[list[Mdp], float]:
    """Rescale rewards so every truncated discounted return lies in [-1, 1].

    One scale factor is shared by the whole set (per-world scales would change
    the game).  The factor is (1 - gamma) / max(1, max |reward|); divide
    reported utilities by it to recover the original scale.
    """
    if not mdp_set:
        raise ValueError("mdp_set is empty")
    gamma = mdp_set[0].discount
    for m in mdp_set:
        if m.discount != gamma:
            raise ValueError("all MDPs in a set must share one discount factor")
    peak = max(float(np.max(np.abs(m.rewards))) for m in mdp_set)
    scale = (1.0 - gamma) / max(1.0, peak)
    scaled = [Mdp(m.transitions, m.rewards * scale, gamma) for m in mdp_set]
    return scaled, scale


def truncated_horizon(gamma: float, tail: float = 1e-6) -> int:
    """Steps needed so the discarded discounted tail is at most ``tail``.

    With rewards scaled to magnitude at most (1 - gamma), the bias of the
    truncated estimator is then at most ``tail``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    return max(1, math.ceil(math.log(tail * (1.0 - gamma)) / math.log(gamma)))


def discretization_bound(epsilon: float, gamma: float) -> float:
    """Utility error bound for worlds whose kernel and rewards are epsilon-close.

    Covering an infinite family of MDPs with an epsilon grid costs at most
    epsilon / (1 - gamma)^2 in utility for any fixed policy.
    """
    if epsilon < 0:
        raise ValueError(f"epsilon must be nonnegative, got {epsilon}")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must be in (0, 1), got {gamma}")
    return epsilon / (1.0 - gamma) ** 2
