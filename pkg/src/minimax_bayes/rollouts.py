"""Sampled returns: geometric-horizon and truncated-discounted rollouts.

Two estimators of the discounted utility are provided:

* ``geometric``: run for T ~ Geometric(1 - gamma) steps and sum the rewards
  undiscounted.  Exactly unbiased, but the realized return is unbounded.
* ``truncated-discounted``: sum gamma^(t-1) * reward for a fixed horizon long
  enough that the discarded tail is below 1e-6.  Bias at most 1e-6 once
  rewards are normalized, and the realized return stays in [-1, 1].

All randomness flows from explicit integer seeds through counter-based
(Philox) streams keyed by (seed, purpose, round, ...), so results never
depend on execution order, batching, or on whether the compiled kernel is
available.  Within one batch, sample (policy i, index j) owns the fixed slice
[i, j, :] of the batch's uniform block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import Mdp, check_distribution, check_policy, truncated_horizon

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

GEOMETRIC = "geometric"
TRUNCATED = "truncated-discounted"
MODES = (GEOMETRIC, TRUNCATED)

_MASK64 = (1 << 64) - 1
# Chains walked per uniform block.  Fixed forever: the chunk layout is part of
# the deterministic stream consumption order.
_CHUNK = 1 << 16

# Stream purposes (second entropy word after the seed).
STREAM_POLICY = 0
STREAM_WORLD = 1
STREAM_ROLLOUT = 2


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Independent generator keyed by (seed, *path); stable across runs."""
    entropy = (int(seed) & _MASK64,) + tuple(int(p) for p in path)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


@dataclass(frozen=True)
class RolloutSample:
    """One realized return.

    ``truncated`` marks the fixed-horizon discounted estimator; with
    normalized rewards its ``total_reward`` lies in [-1, 1].
    """

    total_reward: float
    horizon_used: int
    truncated: bool


def cumulative_kernels(mdp_set, actions: np.ndarray):
    """Stacked cumulative transition rows for every (policy, world) pair.

    Returns ``(cum, rewards, gamma)`` where ``cum[i, m, s]`` is the cumulative
    next-state distribution under policy i in world m, with the last column
    pinned to exactly 1.0 so that any uniform draw in [0, 1) lands somewhere.
    """
    if not mdp_set:
        raise ValueError("mdp_set is empty")
    gamma = mdp_set[0].discount
    num_states = mdp_set[0].num_states
    actions = np.asarray(actions, dtype=np.int64)
    if actions.ndim != 2:
        raise ValueError(f"actions must have shape (N, S), got {actions.shape}")
    n_pol = actions.shape[0]
    cum = np.empty((n_pol, len(mdp_set), num_states, num_states))
    rewards = np.empty((len(mdp_set), num_states))
    rows = np.arange(num_states)
    for m, mdp in enumerate(mdp_set):
        if mdp.discount != gamma or mdp.num_states != num_states:
            raise ValueError("all MDPs in a set must share dimensions and discount")
        rewards[m] = mdp.rewards
        for i in range(n_pol):
            check_policy(actions[i], mdp)
            np.cumsum(mdp.transitions[rows, actions[i]], axis=1, out=cum[i, m])
    cum[..., -1] = 1.0
    return cum, rewards, gamma


def cumulative_init(init, num_states: int) -> np.ndarray:
    """Cumulative start distribution with the last entry pinned to 1.0."""
    init = check_distribution(init, num_states, "init")
    c = np.cumsum(init)
    c[-1] = 1.0
    return c


def _walk_numpy(cum, rew, pol, mdp, state, horizons, uniforms, gamma):
    n = state.size
    total = np.zeros(n)
    weight = 1.0
    state = state.copy()
    for t in range(int(horizons.max()) if n else 0):
        alive = horizons > t
        total[alive] += weight * rew[mdp[alive], state[alive]]
        weight *= gamma
        rows = cum[pol, mdp, state]
        nxt = (rows > uniforms[:, t, None]).argmax(axis=1)
        state = np.where(alive, nxt, state)
    return total


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _walk_numba(cum, rew, pol, mdp, state, horizons, uniforms, gamma):  # pragma: no cover
        n = state.size
        out = np.zeros(n)
        last = cum.shape[3] - 1
        for c in range(n):
            s = state[c]
            i = pol[c]
            m = mdp[c]
            total = 0.0
            weight = 1.0
            for t in range(horizons[c]):
                total += weight * rew[m, s]
                weight *= gamma
                u = uniforms[c, t]
                j = 0
                while j < last and cum[i, m, s, j] <= u:
                    j += 1
                s = j
            out[c] = total
        return out

    _walk = _walk_numba
else:
    _walk = _walk_numpy


def batch_returns(cum, rewards, gamma, pol_idx, mdp_idx, init_cum, mode, rng):
    """Walk one rollout per (policy, world) pair and return realized returns.

    Stream consumption order is fixed: start states, then horizons (geometric
    mode only), then uniform blocks of at most ``_CHUNK`` chains.  Both walk
    implementations make bit-identical decisions from the same uniforms.
    """
    pol_idx = np.ascontiguousarray(pol_idx, dtype=np.int64)
    mdp_idx = np.ascontiguousarray(mdp_idx, dtype=np.int64)
    n = pol_idx.size
    starts = np.searchsorted(init_cum, rng.random(n), side="right").astype(np.int64)
    if mode == GEOMETRIC:
        horizons = rng.geometric(1.0 - gamma, size=n).astype(np.int64)
        walk_gamma = 1.0
    elif mode == TRUNCATED:
        horizons = np.full(n, truncated_horizon(gamma), dtype=np.int64)
        walk_gamma = gamma
    else:
        raise ValueError(f"unknown rollout mode {mode!r}; expected one of {MODES}")
    out = np.empty(n)
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        h = horizons[lo:hi]
        uniforms = rng.random((hi - lo, int(h.max())))
        out[lo:hi] = _walk(
            cum, rewards, pol_idx[lo:hi], mdp_idx[lo:hi], starts[lo:hi], h, uniforms, walk_gamma
        )
    return out, horizons


def sample_returns(mdp: Mdp, policy, init, n: int, mode: str = TRUNCATED, seed: int = 0) -> np.ndarray:
    """n independent realized returns for one (world, policy) pair."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    actions = check_policy(policy, mdp)
    cum, rewards, gamma = cumulative_kernels([mdp], actions[None, :])
    init_cum = cumulative_init(init, mdp.num_states)
    zeros = np.zeros(n, dtype=np.int64)
    rng = derive_rng(seed, STREAM_ROLLOUT, 0)
    returns, _ = batch_returns(cum, rewards, gamma, zeros, zeros, init_cum, mode, rng)
    return returns


def rollout(mdp: Mdp, policy, init, mode: str = TRUNCATED, seed: int = 0) -> RolloutSample:
    """One realized return, deterministic given the seed."""
    actions = check_policy(policy, mdp)
    cum, rewards, gamma = cumulative_kernels([mdp], actions[None, :])
    init_cum = cumulative_init(init, mdp.num_states)
    zeros = np.zeros(1, dtype=np.int64)
    rng = derive_rng(seed, STREAM_ROLLOUT, 0)
    returns, horizons = batch_returns(cum, rewards, gamma, zeros, zeros, init_cum, mode, rng)
    return RolloutSample(
        total_reward=float(returns[0]),
        horizon_used=int(horizons[0]),
        truncated=mode == TRUNCATED,
    )
