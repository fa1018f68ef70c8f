"""Full-information weighted majority against a best-responding nature.

Each round the decision maker normalizes positive expert weights into a
mixture, nature picks the prior that minimizes that mixture's expected
payoff, and every expert's weight is scaled by (1 + learning_rate * payoff).
With payoffs in [-1, 1] and learning rate at most 1/2, weights stay strictly
positive and the classic multiplicative-weights guarantee applies:

    total expected payoff >= sum_k (u_k - lr * |u_k|) . cmp - ln(N) / lr

for every comparison mixture ``cmp`` over the experts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import PayoffMatrix, nature_best_response, nature_best_response_constrained
from .mdp import check_distribution
from .policies import RestrictedPriorSet
from .rollouts import STREAM_POLICY, derive_rng

PAYOFF_RANGE_TOL = 1e-12


@dataclass(frozen=True)
class WmaConfig:
    """Loop parameters shared by the exact and sampled variants."""

    rounds: int
    learning_rate: float | None = None  # default sqrt(ln N / rounds), capped at 1/2
    seed: int = 0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"rounds must be positive, got {self.rounds}")
        if self.learning_rate is not None and not 0.0 < self.learning_rate <= 0.5:
            raise ValueError(
                f"learning_rate must be in (0, 1/2], got {self.learning_rate}"
            )


def default_learning_rate(num_policies: int, rounds: int) -> float:
    """sqrt(ln N / K) capped at 1/2; 1/2 when there is a single expert."""
    if num_policies <= 1:
        return 0.5
    return min(0.5, math.sqrt(math.log(num_policies) / rounds))


@dataclass
class WmaTrace:
    """Per-round record of one run.

    ``payoff_rows[k]`` holds every expert's exact expected payoff against
    nature's round-k move, ``dists[k]`` the mixture that was played, and
    ``bound_slack[k]`` the running slack of the guarantee against the best
    vertex comparator (error-adjusted for the sampled variant).  Fields after
    ``est_rows`` are populated only by the sampled variant.
    """

    learning_rate: float
    weights: np.ndarray
    dists: np.ndarray
    beliefs: np.ndarray
    chosen_mdp: np.ndarray
    payoff_rows: np.ndarray
    chosen_policy: np.ndarray
    realized: np.ndarray
    cumulative_average: np.ndarray
    bound_slack: np.ndarray
    est_rows: np.ndarray | None = None
    clamps: np.ndarray | None = None
    epoch_index: np.ndarray | None = None

    @property
    def rounds(self) -> int:
        return self.dists.shape[0]

    @property
    def num_policies(self) -> int:
        return self.dists.shape[1]

    @property
    def algorithm_value(self) -> float:
        """Total expected payoff collected over the run, sum_k u_k . Q_k."""
        return float(np.sum(self.payoff_rows * self.dists))

    @property
    def expert_totals(self) -> np.ndarray:
        """Cumulative exact payoff each expert would have collected."""
        return self.payoff_rows.sum(axis=0)

    @property
    def clamp_total(self) -> int:
        return 0 if self.clamps is None else int(self.clamps.sum())


def check_payoff_range(values: np.ndarray) -> None:
    """Multiplicative updates need payoffs in [-1, 1]; name the worst entry."""
    worst = np.abs(values).max()
    if worst > 1.0 + PAYOFF_RANGE_TOL:
        i, m = np.unravel_index(int(np.abs(values).argmax()), values.shape)
        raise ValueError(
            f"payoff[{i}][{m}] = {values[i, m]!r} lies outside [-1, 1]; "
            "normalize rewards before running"
        )


def wma_run(
    payoff: PayoffMatrix,
    config: WmaConfig,
    restriction: RestrictedPriorSet | None = None,
) -> WmaTrace:
    """Run the full-information loop against best-responding nature.

    Nature minimizes over the whole belief simplex by default, or over a
    restricted prior set when one is supplied.  The sampled expert index is
    recorded for diagnostics but does not influence the update, which always
    uses the exact payoff row.
    """
    u_all = payoff.values
    check_payoff_range(u_all)
    n, m = u_all.shape
    k_rounds = config.rounds
    lr = config.learning_rate if config.learning_rate is not None else default_learning_rate(n, k_rounds)

    weights = np.empty((k_rounds, n))
    dists = np.empty((k_rounds, n))
    beliefs = np.empty((k_rounds, m))
    chosen_mdp = np.empty(k_rounds, dtype=np.int64)
    payoff_rows = np.empty((k_rounds, n))
    chosen_policy = np.empty(k_rounds, dtype=np.int64)
    realized = np.empty(k_rounds)
    cumulative_average = np.empty(k_rounds)
    bound_slack = np.empty(k_rounds)

    w = np.ones(n)
    value_sum = 0.0
    comparator_sum = np.zeros(n)  # running sum of u - lr * |u| per expert
    log_n_over_lr = math.log(n) / lr
    for k in range(k_rounds):
        q = w / w.sum()
        sampled = int(derive_rng(config.seed, STREAM_POLICY, k + 1).choice(n, p=q))
        if restriction is None:
            xi = nature_best_response(q, payoff)
        else:
            xi = nature_best_response_constrained(q, payoff, restriction)
        u = u_all @ xi

        weights[k] = w
        dists[k] = q
        beliefs[k] = xi
        chosen_mdp[k] = int(np.argmax(xi))
        payoff_rows[k] = u
        chosen_policy[k] = sampled
        realized[k] = u[sampled]

        value_sum += float(u @ q)
        comparator_sum += u - lr * np.abs(u)
        cumulative_average[k] = value_sum / (k + 1)
        bound_slack[k] = value_sum - comparator_sum.max() + log_n_over_lr

        w = w * (1.0 + lr * u)
    return WmaTrace(
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
    )


def wma_guarantee_check(
    trace: WmaTrace, comparison, learning_rate: float | None = None
) -> tuple[bool, float]:
    """Evaluate the multiplicative-weights guarantee against one comparator.

    Both sides are computed from the trace's exact expected payoffs, so with
    full information the inequality must hold outright.  Returns whether it
    holds and the (nonnegative, when it does) slack.
    """
    lr = trace.learning_rate if learning_rate is None else learning_rate
    cmp = check_distribution(comparison, trace.num_policies, "comparison")
    u = trace.payoff_rows
    lhs = float(np.sum(u * trace.dists))
    rhs = float((u - lr * np.abs(u)).sum(axis=0) @ cmp) - math.log(trace.num_policies) / lr
    slack = lhs - rhs
    return slack >= 0.0, slack
