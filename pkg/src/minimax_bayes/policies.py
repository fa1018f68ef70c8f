"""Finite policy sets, Bayes-optimal values, regret losses, and prior restrictions.

The decision maker's experts are memoryless deterministic policies.  A belief
is a probability vector over the candidate worlds; this module computes the
best utility achievable from a finite expert set under a belief, the two
regret-style losses against the belief-optimal and per-world oracle policies,
and the discounted state-occupancy statistic used to restrict priors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp, check_distribution, check_policy, state_values, utility

# A^S grows fast; refuse enumerations beyond this unless the caller raises it.
DEFAULT_ENUMERATION_CAP = 1 << 16


class EnumerationCapError(ValueError):
    """Requested policy enumeration is larger than the configured cap."""


@dataclass(frozen=True)
class PolicySet:
    """Ordered, duplicate-free collection of deterministic action maps.

    ``actions`` has shape (N, S); row i maps each state to policy i's action.
    """

    actions: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.actions)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"actions must have shape (N, S) with N, S >= 1, got {a.shape}")
        if not np.issubdtype(a.dtype, np.integer):
            raise ValueError("action maps must be integer arrays")
        if a.min() < 0:
            raise ValueError("action indices must be nonnegative")
        if np.unique(a, axis=0).shape[0] != a.shape[0]:
            raise ValueError("policy set contains duplicate action maps")
        object.__setattr__(self, "actions", a.astype(np.int64))

    @property
    def size(self) -> int:
        return self.actions.shape[0]

    @property
    def num_states(self) -> int:
        return self.actions.shape[1]

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i: int) -> np.ndarray:
        return self.actions[i]


def enumerate_policies(
    num_states: int, num_actions: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> PolicySet:
    """All A^S deterministic action maps, in lexicographic order."""
    if num_states < 1 or num_actions < 1:
        raise ValueError("num_states and num_actions must be positive")
    count = num_actions**num_states
    if count > cap:
        raise EnumerationCapError(
            f"{num_actions}^{num_states} = {count} policies exceeds cap {cap}"
        )
    grids = np.meshgrid(*[np.arange(num_actions)] * num_states, indexing="ij")
    actions = np.stack([g.ravel() for g in grids], axis=1)
    return PolicySet(actions.astype(np.int64))


def policy_utilities(mdp: Mdp, policy_set: PolicySet, init) -> np.ndarray:
    """Utility of every policy in one world; vector of length N."""
    init = check_distribution(init, mdp.num_states, "init")
    out = np.empty(policy_set.size)
    for i in range(policy_set.size):
        out[i] = init @ state_values(mdp, policy_set.actions[i])
    return out


def bayes_optimal(mdp_set, belief, policy_set: PolicySet, init) -> tuple[float, int]:
    """Best belief-averaged utility over the policy set and its argmax index.

    Ties break toward the smallest policy index, so results are reproducible.
    """
    belief = check_distribution(belief, len(mdp_set), "belief")
    totals = np.zeros(policy_set.size)
    for weight, mdp in zip(belief, mdp_set):
        if weight == 0.0:
            continue
        totals += weight * policy_utilities(mdp, policy_set, init)
    best = int(np.argmax(totals))
    return float(totals[best]), best


def oracle_bound(mdp_set, belief, policy_set: PolicySet, init) -> tuple[float, float]:
    """Sandwich for the Bayes-optimal value.

    Lower: best single policy under the belief.  Upper: expected value when
    the true world is revealed before committing (best policy per world).
    """
    belief = check_distribution(belief, len(mdp_set), "belief")
    lower, _ = bayes_optimal(mdp_set, belief, policy_set, init)
    upper = 0.0
    for weight, mdp in zip(belief, mdp_set):
        if weight == 0.0:
            continue
        upper += weight * float(policy_utilities(mdp, policy_set, init).max())
    return lower, float(upper)


def _value_table(mdp_set, policy_set: PolicySet) -> np.ndarray:
    """State values for every (policy, world) pair; shape (N, M, S)."""
    n, m = policy_set.size, len(mdp_set)
    table = np.empty((n, m, policy_set.num_states))
    for j, mdp in enumerate(mdp_set):
        for i in range(n):
            table[i, j] = state_values(mdp, policy_set.actions[i])
    return table


def bayes_loss(mdp_set, belief, policy_index: int, policy_set: PolicySet, beta) -> float:
    """Regret of one policy against the best-in-set policy for this belief.

    Both the comparison policy and the loss are weighted by the state
    distribution ``beta``.  Always nonnegative.
    """
    belief = check_distribution(belief, len(mdp_set), "belief")
    beta = check_distribution(beta, policy_set.num_states, "beta")
    if not 0 <= policy_index < policy_set.size:
        raise ValueError(f"policy_index {policy_index} outside [0, {policy_set.size})")
    table = _value_table(mdp_set, policy_set)
    belief_values = np.tensordot(table, belief, axes=([1], [0]))  # (N, S)
    scores = belief_values @ beta
    best = int(np.argmax(scores))
    return float(scores[best] - scores[policy_index])


def oracle_loss(mdp_set, belief, policy_index: int, policy_set: PolicySet, beta) -> float:
    """Regret of one policy against each world's own best-in-set policy.

    Dominates :func:`bayes_loss`: knowing the world before choosing can only
    help.
    """
    belief = check_distribution(belief, len(mdp_set), "belief")
    beta = check_distribution(beta, policy_set.num_states, "beta")
    if not 0 <= policy_index < policy_set.size:
        raise ValueError(f"policy_index {policy_index} outside [0, {policy_set.size})")
    table = _value_table(mdp_set, policy_set)
    scores = np.tensordot(table, beta, axes=([2], [0]))  # (N, M)
    per_world_best = scores.max(axis=0)
    return float(belief @ (per_world_best - scores[policy_index]))


def occupancy_statistic(mdp: Mdp, policy) -> np.ndarray:
    """Row-major flattening of the discounted occupancy matrix (I - gamma P)^-1.

    Row s of the unflattened matrix is the discounted expected visit count of
    every state when starting from s; each row sums to 1 / (1 - gamma).
    """
    a = check_policy(policy, mdp)
    chain = mdp.transitions[np.arange(mdp.num_states), a]
    occ = np.linalg.inv(np.eye(mdp.num_states) - mdp.discount * chain)
    return occ.ravel()


def occupancy_statistics(mdp_set, policies, beta=None) -> np.ndarray:
    """Statistic matrix with one row per world.

    ``policies`` is either one action map used in every world or a list with
    one map per world.  With ``beta`` given, each row is projected through the
    state distribution (k = S columns instead of S*S), which keeps downstream
    linear programs small.
    """
    num_states = mdp_set[0].num_states
    per_world = list(policies) if isinstance(policies, (list, tuple)) else [policies] * len(mdp_set)
    if len(per_world) != len(mdp_set):
        raise ValueError(f"need one policy per world, got {len(per_world)} for {len(mdp_set)}")
    if beta is not None:
        beta = check_distribution(beta, num_states, "beta")
    rows = []
    for mdp, policy in zip(mdp_set, per_world):
        flat = occupancy_statistic(mdp, policy)
        if beta is None:
            rows.append(flat)
        else:
            rows.append(beta @ flat.reshape(num_states, num_states))
    return np.asarray(rows)


@dataclass(frozen=True)
class RestrictedPriorSet:
    """Beliefs whose expected statistic lies within a band around a target.

    ``statistic_values`` has one row per world; a belief xi is in the set when
    ``max |statistic_values.T @ xi - target| <= tolerance``.  A band is used
    instead of exact equality because observed targets are rarely exactly
    representable.
    """

    statistic_values: np.ndarray
    target: np.ndarray
    tolerance: float = 1e-7

    def __post_init__(self):
        phi = np.asarray(self.statistic_values, dtype=float)
        tgt = np.asarray(self.target, dtype=float)
        if phi.ndim != 2 or phi.shape[0] < 1 or phi.shape[1] < 1:
            raise ValueError(f"statistic_values must have shape (M, k), got {phi.shape}")
        if tgt.shape != (phi.shape[1],):
            raise ValueError(
                f"target must have shape ({phi.shape[1]},), got {tgt.shape}"
            )
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(tgt))):
            raise ValueError("statistic values and target must be finite")
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be nonnegative, got {self.tolerance}")
        object.__setattr__(self, "statistic_values", phi)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "tolerance", float(self.tolerance))

    @property
    def num_worlds(self) -> int:
        return self.statistic_values.shape[0]

    @property
    def num_constraints(self) -> int:
        return self.statistic_values.shape[1]


def satisfies_restriction(restriction: RestrictedPriorSet, belief) -> bool:
    """Whether a belief's expected statistic is inside the tolerance band."""
    belief = check_distribution(belief, restriction.num_worlds, "belief")
    gap = restriction.statistic_values.T @ belief - restriction.target
    return bool(np.max(np.abs(gap)) <= restriction.tolerance)


def linearity_residual(losses, statistic_values) -> float:
    """RMS residual of the best affine fit of per-world losses on the statistic.

    A residual of zero means the loss is an affine function of the statistic,
    the sufficient condition for a policy to be robust against every prior in
    the restricted set.
    """
    losses = np.asarray(losses, dtype=float)
    phi = np.asarray(statistic_values, dtype=float)
    if losses.ndim != 1 or phi.ndim != 2 or phi.shape[0] != losses.size:
        raise ValueError(
            f"need losses (M,) and statistic_values (M, k), got {losses.shape} and {phi.shape}"
        )
    design = np.column_stack([np.ones(losses.size), phi])
    coef, *_ = np.linalg.lstsq(design, losses, rcond=None)
    resid = design @ coef - losses
    return float(np.sqrt(np.mean(resid * resid)))
