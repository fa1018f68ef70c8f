"""Zero-sum matrix games between a policy mixture and a prior over worlds.

The payoff matrix tabulates the exact utility of every policy in every
candidate world.  The decision maker mixes rows to maximize; nature mixes
columns to minimize.  This module assembles the matrix, computes nature's
best responses (vertex and statistic-constrained), solves the game exactly by
linear programming, and provides fictitious play and brute-force simplex-grid
search as independent baselines.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np

from .mdp import check_distribution
from .policies import PolicySet, RestrictedPriorSet, policy_utilities
from .simplex import LpError, LpInfeasible, solve_standard_lp

THREADS_ENV = "MINIMAX_BAYES_THREADS"

# Duality gap allowed between the two sides of a solved game.
DUALITY_TOL = 1e-7


class GameSolverError(RuntimeError):
    """Exact solve failed; the message carries the LP diagnostics."""


class InfeasibleRestrictionError(RuntimeError):
    """No belief satisfies the restricted prior set's constraint band."""


@dataclass(frozen=True)
class PayoffMatrix:
    """Exact utilities; entry (i, m) is policy i's utility in world m."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"values must have shape (N, M), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def policy_count(self) -> int:
        return self.values.shape[0]

    @property
    def mdp_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GameSolution:
    """A solved (or approximately solved) game.

    ``duality_gap`` is the width between what the policy mixture guarantees
    and what the belief concedes; zero (up to tolerance) at an exact solution.
    """

    value: float
    policy_dist: np.ndarray
    belief: np.ndarray
    method: str
    duality_gap: float


def thread_cap() -> int:
    """Worker cap from the MINIMAX_BAYES_THREADS environment variable (0 = auto)."""
    raw = os.environ.get(THREADS_ENV, "0").strip()
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise ValueError(f"{THREADS_ENV} must be nonnegative, got {cap}")
    return cap if cap > 0 else (os.cpu_count() or 1)


def payoff_matrix(mdp_set, policy_set: PolicySet, init, max_threads: int | None = None) -> PayoffMatrix:
    """Tabulate exact utilities for every (policy, world) pair.

    Columns are independent, so they may be evaluated by a small thread pool;
    assembly order is fixed by index, making the result identical either way.
    """
    workers = min(max_threads if max_threads is not None else thread_cap(), len(mdp_set))
    if workers > 1 and len(mdp_set) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = list(pool.map(lambda m: policy_utilities(m, policy_set, init), mdp_set))
    else:
        columns = [policy_utilities(m, policy_set, init) for m in mdp_set]
    return PayoffMatrix(np.stack(columns, axis=1))


def nature_best_response(q, payoff: PayoffMatrix) -> np.ndarray:
    """Point-mass belief minimizing the mixture's expected payoff.

    The objective is linear in the belief, so some vertex attains the minimum;
    ties break toward the smallest world index.
    """
    q = check_distribution(q, payoff.policy_count, "policy distribution")
    column_values = q @ payoff.values
    belief = np.zeros(payoff.mdp_count)
    belief[int(np.argmin(column_values))] = 1.0
    return belief


def nature_best_response_constrained(
    q, payoff: PayoffMatrix, restriction: RestrictedPriorSet
) -> np.ndarray:
    """Belief minimizing the mixture's expected payoff inside a restricted set.

    Solved as a linear program over the simplex intersected with the band
    ``|statistic_values.T @ xi - target| <= tolerance``.
    """
    q = check_distribution(q, payoff.policy_count, "policy distribution")
    if restriction.num_worlds != payoff.mdp_count:
        raise ValueError(
            f"restriction covers {restriction.num_worlds} worlds, payoff has {payoff.mdp_count}"
        )
    m = payoff.mdp_count
    k = restriction.num_constraints
    phi = restriction.statistic_values
    # Variables: xi (m), upper slacks (k), lower surpluses (k).
    n_var = m + 2 * k
    a = np.zeros((2 * k + 1, n_var))
    b = np.zeros(2 * k + 1)
    for j in range(k):
        a[j, :m] = phi[:, j]
        a[j, m + j] = 1.0
        b[j] = restriction.target[j] + restriction.tolerance
        a[k + j, :m] = phi[:, j]
        a[k + j, m + k + j] = -1.0
        b[k + j] = restriction.target[j] - restriction.tolerance
    a[2 * k, :m] = 1.0
    b[2 * k] = 1.0
    c = np.zeros(n_var)
    c[:m] = q @ payoff.values
    try:
        solution = solve_standard_lp(c, a, b)
    except LpInfeasible as exc:
        raise InfeasibleRestrictionError(
            f"no belief satisfies the restriction: {exc}"
        ) from exc
    belief = np.clip(solution.x[:m], 0.0, None)
    return belief / belief.sum()


def _row_player_lp(u: np.ndarray):
    """max over row mixtures q of min over columns of q @ u, in standard form."""
    n, m = u.shape
    n_var = n + 2 + m  # q, v+, v-, surpluses
    a = np.zeros((m + 1, n_var))
    b = np.zeros(m + 1)
    for col in range(m):
        a[col, :n] = u[:, col]
        a[col, n] = -1.0
        a[col, n + 1] = 1.0
        a[col, n + 2 + col] = -1.0
        # reads: q @ u[:, col] - v - surplus = 0, surplus >= 0
    a[m, :n] = 1.0
    b[m] = 1.0
    c = np.zeros(n_var)
    c[n] = -1.0
    c[n + 1] = 1.0
    solution = solve_standard_lp(c, a, b)
    q = np.clip(solution.x[:n], 0.0, None)
    return -solution.objective, q / q.sum()


def _column_player_lp(u: np.ndarray):
    """min over column mixtures xi of max over rows of u @ xi, in standard form."""
    n, m = u.shape
    n_var = m + 2 + n  # xi, w+, w-, slacks
    a = np.zeros((n + 1, n_var))
    b = np.zeros(n + 1)
    for row in range(n):
        a[row, :m] = u[row]
        a[row, m] = -1.0
        a[row, m + 1] = 1.0
        a[row, m + 2 + row] = 1.0
        # reads: u[row] @ xi - w + slack = 0, slack >= 0
    a[n, :m] = 1.0
    b[n] = 1.0
    c = np.zeros(n_var)
    c[m] = 1.0
    c[m + 1] = -1.0
    solution = solve_standard_lp(c, a, b)
    xi = np.clip(solution.x[:m], 0.0, None)
    return solution.objective, xi / xi.sum()


def exact_game_value(payoff: PayoffMatrix) -> GameSolution:
    """Solve the matrix game exactly by linear programming.

    Solves both sides and checks that they agree: the value guaranteed by the
    maximin mixture must meet the value conceded by the minimax belief within
    ``DUALITY_TOL``.  An all-equal payoff matrix short-circuits to uniform
    mixtures on both sides.
    """
    u = payoff.values
    n, m = u.shape
    if np.all(u == u.flat[0]):
        return GameSolution(
            value=float(u.flat[0]),
            policy_dist=np.full(n, 1.0 / n),
            belief=np.full(m, 1.0 / m),
            method="exact-lp",
            duality_gap=0.0,
        )
    try:
        row_value, q = _row_player_lp(u)
        col_value, xi = _column_player_lp(u)
    except LpError as exc:
        raise GameSolverError(f"game LP failed: {exc}") from exc
    if abs(row_value - col_value) > DUALITY_TOL:
        raise GameSolverError(
            f"primal and dual game values disagree: {row_value!r} vs {col_value!r}"
        )
    guaranteed = float((q @ u).min())
    conceded = float((u @ xi).max())
    gap = conceded - guaranteed
    if abs(gap) > DUALITY_TOL:
        raise GameSolverError(
            f"complementary optimality violated: guaranteed {guaranteed!r}, conceded {conceded!r}"
        )
    return GameSolution(
        value=float(row_value),
        policy_dist=q,
        belief=xi,
        method="exact-lp",
        duality_gap=float(gap),
    )


def fictitious_play(payoff, rounds: int, record: bool = False):
    """Iterated simultaneous best responses against the opponent's history.

    ``payoff`` is a :class:`PayoffMatrix`, a plain array, or a callable
    ``round -> array`` supplying a per-round estimate of the matrix (the
    stream form; the reported interval then uses the final estimate).  Round
    one responds to uniform mixtures, so a game with a weakly dominant saddle
    locks onto it immediately.  Returns a :class:`GameSolution` whose
    ``duality_gap`` is the width of the bracket
    [what the empirical row mixture guarantees, what the empirical column
    mixture concedes]; with ``record=True`` also returns the per-round play.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be positive, got {rounds}")
    if isinstance(payoff, PayoffMatrix):
        static = payoff.values
    elif callable(payoff):
        static = None
    else:
        static = np.asarray(payoff, dtype=float)
    matrix_at = (lambda k: static) if static is not None else (lambda k: np.asarray(payoff(k), dtype=float))

    u = matrix_at(1)
    n, m = u.shape
    row_counts = np.zeros(n)
    col_counts = np.zeros(m)
    rows_played = np.empty(rounds, dtype=np.int64)
    cols_played = np.empty(rounds, dtype=np.int64)
    for k in range(1, rounds + 1):
        u = matrix_at(k)
        if k == 1:
            q_emp = np.full(n, 1.0 / n)
            xi_emp = np.full(m, 1.0 / m)
        else:
            q_emp = row_counts / (k - 1)
            xi_emp = col_counts / (k - 1)
        i = int(np.argmax(u @ xi_emp))
        j = int(np.argmin(q_emp @ u))
        row_counts[i] += 1
        col_counts[j] += 1
        rows_played[k - 1] = i
        cols_played[k - 1] = j
    q = row_counts / rounds
    xi = col_counts / rounds
    guaranteed = float((q @ u).min())
    conceded = float((u @ xi).max())
    solution = GameSolution(
        value=0.5 * (guaranteed + conceded),
        policy_dist=q,
        belief=xi,
        method="fictitious-play",
        duality_gap=conceded - guaranteed,
    )
    if record:
        return solution, {"rows": rows_played, "cols": cols_played}
    return solution


# ---------------------------------------------------------------------------
# Brute-force baselines.  These never touch the LP code, so they serve as an
# independent check on it.

_MAX_GRID_POINTS = 20_000_000


def simplex_grid(dim: int, steps: int, chunk: int = 65536):
    """Yield chunks of all lattice points k / steps on the (dim-1)-simplex."""
    total = math.comb(steps + dim - 1, dim - 1)
    if total > _MAX_GRID_POINTS:
        raise ValueError(
            f"simplex grid with {total} points is too large; coarsen the resolution"
        )
    dividers = combinations(range(steps + dim - 1), dim - 1)
    while True:
        block = list(islice(dividers, chunk))
        if not block:
            return
        edges = np.empty((len(block), dim + 1), dtype=np.int64)
        edges[:, 0] = -1
        edges[:, -1] = steps + dim - 1
        if dim > 1:
            edges[:, 1:dim] = np.asarray(block, dtype=np.int64)
        counts = np.diff(edges, axis=1) - 1
        yield counts / steps


def grid_game_value(payoff: PayoffMatrix, resolution: float = 0.01, side: str = "nature") -> float:
    """Brute-force the game value over a lattice on one player's simplex.

    ``side="policy"`` maximizes the exact column minimum over row mixtures and
    approaches the value from below; ``side="nature"`` minimizes the exact row
    maximum over column mixtures and approaches it from above.  Either way the
    lattice error is at most a constant times the resolution.
    """
    u = payoff.values
    steps = int(round(1.0 / resolution))
    if side == "policy":
        best = -np.inf
        for chunk in simplex_grid(payoff.policy_count, steps):
            best = max(best, float((chunk @ u).min(axis=1).max()))
        return best
    if side == "nature":
        best = np.inf
        for chunk in simplex_grid(payoff.mdp_count, steps):
            best = min(best, float((chunk @ u.T).max(axis=1).min()))
        return best
    raise ValueError(f"side must be 'policy' or 'nature', got {side!r}")
