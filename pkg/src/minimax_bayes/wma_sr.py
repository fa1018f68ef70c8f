"""Weighted majority with Monte Carlo payoff estimates (the sampled variant).

The loop mirrors :func:`minimax_bayes.wma.wma_run` with three substitutions:
nature best-responds to pooled running payoff estimates, each round draws S
fresh rollouts per policy to estimate the payoff row, and the multiplicative
update consumes the estimates instead of exact values.  Because the world set
is finite, exact utilities remain available, so every round also logs an
error term

    E_k = max_i | (u.Q - u_i + lr|u_i| + lnN/lr) - (e.Q - e_i + lr|e_i| + lnN/lr) |

comparing the exact-payoff expression with its estimated counterpart (the
lnN/lr terms cancel; they are kept in the formula above for the record).
Summed over rounds, the ledger turns the exact-payoff regret guarantee into
one that holds verbatim for the estimated run:

    B(K) <= 2 sqrt(ln N * K) + sum_k E_k      at lr = sqrt(ln N / K),

and the ledger sum itself concentrates like a bounded martingale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import PayoffMatrix, nature_best_response_constrained, payoff_matrix
from .mdp import check_distribution
from .policies import PolicySet, RestrictedPriorSet
from .rollouts import (
    STREAM_POLICY,
    STREAM_ROLLOUT,
    STREAM_WORLD,
    TRUNCATED,
    batch_returns,
    cumulative_init,
    cumulative_kernels,
    derive_rng,
)
from .wma import WmaConfig, WmaTrace, check_payoff_range, default_learning_rate


@dataclass
class ErrorLedger:
    """Per-round estimation error terms; entries are nonnegative by definition."""

    terms: np.ndarray

    @property
    def total(self) -> float:
        return float(self.terms.sum())

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.terms)


@dataclass
class AzumaReport:
    """Empirical concentration of normalized ledger sums versus the stated bound."""

    empirical_frequency: float
    stated_bound: float
    holds: bool


@dataclass(frozen=True)
class EpochSchedule:
    """Quadratic epoch lengths: epoch j lasts j*j rounds."""

    num_epochs: int

    def __post_init__(self):
        if self.num_epochs < 1:
            raise ValueError(f"num_epochs must be positive, got {self.num_epochs}")

    def length(self, epoch: int) -> int:
        if not 1 <= epoch <= self.num_epochs:
            raise ValueError(f"epoch {epoch} outside [1, {self.num_epochs}]")
        return epoch * epoch

    @property
    def lengths(self) -> list[int]:
        return [j * j for j in range(1, self.num_epochs + 1)]

    @property
    def total_rounds(self) -> int:
        return sum(self.lengths)

    def locate(self, global_round: int) -> tuple[int, int]:
        """Map a 1-based global round to (epoch, 1-based offset inside it)."""
        if not 1 <= global_round <= self.total_rounds:
            raise ValueError(
                f"round {global_round} outside [1, {self.total_rounds}]"
            )
        remaining = global_round
        for j in range(1, self.num_epochs + 1):
            if remaining <= j * j:
                return j, remaining
            remaining -= j * j
        raise AssertionError("unreachable")


@dataclass
class EpochResult:
    epoch: int
    length: int
    learning_rate: float
    trace: WmaTrace
    ledger: ErrorLedger
    average_regret: float


def _draw_world_indices(belief_cum: np.ndarray, count: int, rng) -> np.ndarray:
    return np.searchsorted(belief_cum, rng.random(count), side="right").astype(np.int64)


def mc_estimate(mdp_set, belief, policy, init, samples: int, seed: int = 0, mode: str = TRUNCATED) -> float:
    """Monte Carlo utility estimate from S independent (world, rollout) pairs.

    Unbiased in geometric mode; biased by at most the truncation tail (1e-6
    with normalized rewards) in truncated mode.  Deterministic given the seed.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    belief = check_distribution(belief, len(mdp_set), "belief")
    policy = np.asarray(policy, dtype=np.int64)
    cum, rewards, gamma = cumulative_kernels(mdp_set, policy[None, :])
    init_cum = cumulative_init(init, mdp_set[0].num_states)
    belief_cum = np.cumsum(belief)
    belief_cum[-1] = 1.0
    world_idx = _draw_world_indices(belief_cum, samples, derive_rng(seed, STREAM_WORLD, 0))
    pol_idx = np.zeros(samples, dtype=np.int64)
    returns, _ = batch_returns(
        cum, rewards, gamma, pol_idx, world_idx, init_cum, mode, derive_rng(seed, STREAM_ROLLOUT, 0)
    )
    return float(returns.mean())


def wma_sr_run(
    mdp_set,
    policy_set: PolicySet,
    init,
    config: WmaConfig,
    samples: int,
    mode: str = TRUNCATED,
    shared_samples: bool = True,
    restriction: RestrictedPriorSet | None = None,
    pool: tuple[np.ndarray, np.ndarray] | None = None,
    epoch: int = 0,
    round_offset: int = 0,
) -> tuple[WmaTrace, ErrorLedger]:
    """Run the sampled-payoff loop and account for the estimation error.

    Nature responds to pooled running estimates (unvisited pairs count as -1,
    the minimizer's optimistic default); the fresh S samples drawn each round
    for the update also feed the pool.  With ``shared_samples`` the S world draws
    are shared across policies as common random numbers, cutting variance at
    no cost in correctness.  Estimates are clamped to [-1, 1] (possible only
    in geometric mode) with occurrences counted per round.

    ``pool`` and ``round_offset`` let epoch drivers carry estimator state and
    keep per-round sampling streams globally distinct.
    """
    if samples < 1:
        raise ValueError(f"samples must be positive, got {samples}")
    exact = payoff_matrix(mdp_set, policy_set, init)
    u_all = exact.values
    check_payoff_range(u_all)
    n, m = u_all.shape
    k_rounds = config.rounds
    lr = config.learning_rate if config.learning_rate is not None else default_learning_rate(n, k_rounds)

    cum, rewards, gamma = cumulative_kernels(mdp_set, policy_set.actions)
    init_cum = cumulative_init(init, mdp_set[0].num_states)
    if pool is None:
        pool_sum = np.zeros((n, m))
        pool_count = np.zeros((n, m), dtype=np.int64)
    else:
        pool_sum, pool_count = pool

    weights = np.empty((k_rounds, n))
    dists = np.empty((k_rounds, n))
    beliefs = np.empty((k_rounds, m))
    chosen_mdp = np.empty(k_rounds, dtype=np.int64)
    payoff_rows = np.empty((k_rounds, n))
    est_rows = np.empty((k_rounds, n))
    chosen_policy = np.empty(k_rounds, dtype=np.int64)
    realized = np.empty(k_rounds)
    cumulative_average = np.empty(k_rounds)
    bound_slack = np.empty(k_rounds)
    clamps = np.zeros(k_rounds, dtype=np.int64)
    errors = np.empty(k_rounds)

    pol_idx = np.repeat(np.arange(n, dtype=np.int64), samples)
    w = np.ones(n)
    value_sum = 0.0
    comparator_sum = np.zeros(n)
    error_sum = 0.0
    log_n_over_lr = math.log(n) / lr
    for k in range(k_rounds):
        global_round = round_offset + k + 1
        q = w / w.sum()
        sampled = int(derive_rng(config.seed, STREAM_POLICY, global_round).choice(n, p=q))

        # Unvisited pairs count as -1: optimistic for the minimizer, so nature
        # tries every column before settling instead of never leaving the
        # first one whose estimate drops below zero.
        pooled = np.divide(
            pool_sum, pool_count, out=np.full_like(pool_sum, -1.0), where=pool_count > 0
        )
        if restriction is None:
            # Linear objective: the pooled-estimate minimizer sits at a vertex.
            vertex = int(np.argmin(q @ pooled))
            xi = np.zeros(m)
            xi[vertex] = 1.0
        else:
            xi = nature_best_response_constrained(q, PayoffMatrix(pooled), restriction)

        belief_cum = np.cumsum(xi)
        belief_cum[-1] = 1.0
        draw_rng = derive_rng(config.seed, STREAM_WORLD, global_round)
        if shared_samples:
            world_idx = np.tile(_draw_world_indices(belief_cum, samples, draw_rng), n)
        else:
            world_idx = _draw_world_indices(belief_cum, n * samples, draw_rng)
        returns, _ = batch_returns(
            cum,
            rewards,
            gamma,
            pol_idx,
            world_idx,
            init_cum,
            mode,
            derive_rng(config.seed, STREAM_ROLLOUT, global_round),
        )
        per_policy = returns.reshape(n, samples)
        est = per_policy.mean(axis=1)
        clipped = np.clip(est, -1.0, 1.0)
        clamps[k] = int(np.count_nonzero(clipped != est))
        est = clipped
        flat = pol_idx * m + world_idx
        pool_sum += np.bincount(flat, weights=returns, minlength=n * m).reshape(n, m)
        pool_count += np.bincount(flat, minlength=n * m).reshape(n, m)

        u = u_all @ xi
        weights[k] = w
        dists[k] = q
        beliefs[k] = xi
        chosen_mdp[k] = int(np.argmax(xi))
        payoff_rows[k] = u
        est_rows[k] = est
        chosen_policy[k] = sampled
        realized[k] = per_policy[sampled, 0]

        # Error term: exact-vs-estimated gap of the per-round guarantee
        # expression, maximized over experts so one number covers them all.
        base = float((u - est) @ q)
        diff = base - (u - est) + lr * (np.abs(u) - np.abs(est))
        errors[k] = float(np.max(np.abs(diff)))
        error_sum += errors[k]

        value_sum += float(u @ q)
        comparator_sum += u - lr * np.abs(u)
        cumulative_average[k] = value_sum / (k + 1)
        bound_slack[k] = value_sum - comparator_sum.max() + log_n_over_lr + error_sum

        w = w * (1.0 + lr * est)
    trace = WmaTrace(
        learning_rate=lr,
        weights=weights,
        dists=dists,
        beliefs=beliefs,
        chosen_mdp=chosen_mdp,
        payoff_rows=payoff_rows,
        chosen_policy=chosen_policy,
        realized=realized,
        cumulative_average=cumulative_average,
        bound_slack=bound_slack,
        est_rows=est_rows,
        clamps=clamps,
        epoch_index=np.full(k_rounds, epoch, dtype=np.int64),
    )
    return trace, ErrorLedger(errors)


def regret(trace: WmaTrace, payoff: PayoffMatrix) -> float:
    """Gap to the best fixed expert mixture in hindsight, from exact payoffs.

    The best fixed mixture is a point mass on the expert with the highest
    cumulative exact payoff against nature's recorded moves.  Nonnegative
    whenever nature best-responds.
    """
    rows = trace.beliefs @ payoff.values.T  # (K, N) exact payoff rows
    best = float(rows.sum(axis=0).max())
    collected = float(np.sum(rows * trace.dists))
    return best - collected


def regret_bound_check(
    trace: WmaTrace,
    ledger: ErrorLedger,
    num_policies: int,
    rounds: int,
    learning_rate: float,
) -> tuple[bool, float]:
    """Check B(K) <= 2 sqrt(ln N * K) + ledger total at the tuned rate.

    The bound is only claimed at learning_rate = sqrt(ln N / K); any other
    rate is a configuration error.  (A single expert has zero regret for any
    rate, so the rate check is moot there.)
    """
    if trace.rounds != rounds or ledger.terms.shape != (rounds,):
        raise ValueError("trace, ledger, and rounds disagree on the run length")
    if trace.num_policies != num_policies:
        raise ValueError(
            f"trace has {trace.num_policies} experts, expected {num_policies}"
        )
    if num_policies > 1:
        tuned = math.sqrt(math.log(num_policies) / rounds)
        if abs(learning_rate - tuned) > 1e-12:
            raise ValueError(
                f"learning_rate {learning_rate!r} is not sqrt(ln N / K) = {tuned!r}"
            )
    rows = trace.payoff_rows
    best = float(rows.sum(axis=0).max())
    collected = float(np.sum(rows * trace.dists))
    bound = 2.0 * math.sqrt(math.log(num_policies) * rounds) + ledger.total if num_policies > 1 else ledger.total
    slack = bound - (best - collected)
    return slack >= 0.0, slack


def azuma_check(ledgers, rounds: int, epsilon: float) -> AzumaReport:
    """Empirical concentration of ledger sums versus 1 - 2 exp(-K eps^2 / 2).

    Per-round terms are clipped to [0, 2] and the sum is normalized by the
    number of rounds, so epsilon lives on the per-round-average scale.  Needs
    at least 30 independent runs; ``holds`` allows 0.1 of finite-sample slack.
    """
    if len(ledgers) < 30:
        raise ValueError(f"need at least 30 runs, got {len(ledgers)}")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    sums = []
    for ledger in ledgers:
        if ledger.terms.shape != (rounds,):
            raise ValueError(
                f"ledger has {ledger.terms.shape[0]} rounds, expected {rounds}"
            )
        sums.append(float(np.clip(ledger.terms, 0.0, 2.0).sum()) / rounds)
    empirical = float(np.mean(np.asarray(sums) < epsilon))
    stated = 1.0 - 2.0 * math.exp(-rounds * epsilon * epsilon / 2.0)
    return AzumaReport(
        empirical_frequency=empirical,
        stated_bound=stated,
        holds=empirical >= stated - 0.1,
    )


def run_epochs(
    mdp_set,
    policy_set: PolicySet,
    init,
    config: WmaConfig,
    samples: int,
    num_epochs: int,
    mode: str = TRUNCATED,
    shared_samples: bool = True,
) -> list[EpochResult]:
    """Run the sampled variant in epochs of quadratically growing length.

    Epoch j lasts j*j rounds with its own tuned rate sqrt(ln N / j^2) (capped
    at 1/2 for tiny epochs); weights restart each epoch while the estimate
    pool carries over, so later epochs play against ever-better estimates and
    the per-epoch average regret trends down.
    """
    schedule = EpochSchedule(num_epochs)
    exact = payoff_matrix(mdp_set, policy_set, init)
    n, m = exact.policy_count, exact.mdp_count
    pool = (np.zeros((n, m)), np.zeros((n, m), dtype=np.int64))
    results = []
    offset = 0
    for j in range(1, num_epochs + 1):
        length = schedule.length(j)
        lr = min(0.5, math.sqrt(math.log(n) / length)) if n > 1 else 0.5
        epoch_config = WmaConfig(rounds=length, learning_rate=lr, seed=config.seed)
        trace, ledger = wma_sr_run(
            mdp_set,
            policy_set,
            init,
            epoch_config,
            samples,
            mode=mode,
            shared_samples=shared_samples,
            pool=pool,
            epoch=j,
            round_offset=offset,
        )
        results.append(
            EpochResult(
                epoch=j,
                length=length,
                learning_rate=lr,
                trace=trace,
                ledger=ledger,
                average_regret=regret(trace, exact) / length,
            )
        )
        offset += length
    return results
