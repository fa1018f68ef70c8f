"""Minimax-Bayes policy selection over finite sets of Markov decision processes.

The decision maker picks a distribution over a finite set of memoryless
deterministic policies; nature picks a prior over a finite set of candidate
MDPs.  This package evaluates policies exactly by linear solves, solves the
resulting zero-sum matrix game by linear programming, and approximates it
online with multiplicative-weights loops driven by exact or Monte Carlo
payoffs, with every guarantee checkable from the recorded traces.
"""

from .games import (
    GameSolution,
    GameSolverError,
    InfeasibleRestrictionError,
    PayoffMatrix,
    exact_game_value,
    fictitious_play,
    grid_game_value,
    nature_best_response,
    nature_best_response_constrained,
    payoff_matrix,
    simplex_grid,
)
from .mdp import (
    Mdp,
    belief_utility,
    check_distribution,
    discretization_bound,
    induced_chain,
    normalize_rewards,
    state_values,
    truncated_horizon,
    utility,
)
from .policies import (
    EnumerationCapError,
    PolicySet,
    RestrictedPriorSet,
    bayes_loss,
    bayes_optimal,
    enumerate_policies,
    linearity_residual,
    occupancy_statistic,
    occupancy_statistics,
    oracle_bound,
    oracle_loss,
    policy_utilities,
    satisfies_restriction,
)
from .rollouts import (
    GEOMETRIC,
    TRUNCATED,
    RolloutSample,
    derive_rng,
    rollout,
    sample_returns,
)
from .simplex import LpError, LpInfeasible, LpUnbounded, solve_standard_lp
from .wma import WmaConfig, WmaTrace, default_learning_rate, wma_guarantee_check, wma_run
from .wma_sr import (
    AzumaReport,
    EpochResult,
    EpochSchedule,
    ErrorLedger,
    azuma_check,
    mc_estimate,
    regret,
    regret_bound_check,
    run_epochs,
    wma_sr_run,
)

__all__ = [
    "AzumaReport",
    "EnumerationCapError",
    "EpochResult",
    "EpochSchedule",
    "ErrorLedger",
    "GEOMETRIC",
    "GameSolution",
    "GameSolverError",
    "InfeasibleRestrictionError",
    "LpError",
    "LpInfeasible",
    "LpUnbounded",
    "Mdp",
    "PayoffMatrix",
    "PolicySet",
    "RestrictedPriorSet",
    "RolloutSample",
    "TRUNCATED",
    "WmaConfig",
    "WmaTrace",
    "azuma_check",
    "bayes_loss",
    "bayes_optimal",
    "belief_utility",
    "check_distribution",
    "default_learning_rate",
    "derive_rng",
    "discretization_bound",
    "enumerate_policies",
    "exact_game_value",
    "fictitious_play",
    "grid_game_value",
    "induced_chain",
    "linearity_residual",
    "mc_estimate",
    "nature_best_response",
    "nature_best_response_constrained",
    "normalize_rewards",
    "occupancy_statistic",
    "occupancy_statistics",
    "oracle_bound",
    "oracle_loss",
    "payoff_matrix",
    "policy_utilities",
    "regret",
    "regret_bound_check",
    "rollout",
    "run_epochs",
    "sample_returns",
    "satisfies_restriction",
    "simplex_grid",
    "solve_standard_lp",
    "state_values",
    "truncated_horizon",
    "utility",
    "wma_guarantee_check",
    "wma_run",
    "wma_sr_run",
]

__version__ = "0.1.0"
