"""Command-line entry point: solve problems, enumerate policies, verify runs.

Exit codes: 0 success, 1 malformed input (message names the JSON path),
2 infeasible restriction or enumeration over the cap, 3 solver failure.
All randomness flows from the manifest seed; no wall clock or OS entropy.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .games import (
    GameSolution,
    GameSolverError,
    InfeasibleRestrictionError,
    PayoffMatrix,
    exact_game_value,
    fictitious_play,
    payoff_matrix,
)
from .io import (
    ProblemFormatError,
    load_problem,
    load_restriction,
    read_trace_csv,
    save_policy_set,
    save_solution,
    write_trace_csv,
)
from .policies import EnumerationCapError, enumerate_policies, oracle_bound
from .simplex import LpError
from .wma import WmaConfig, WmaTrace, default_learning_rate, wma_guarantee_check, wma_run
from .wma_sr import ErrorLedger, regret_bound_check, run_epochs, wma_sr_run

SOLVERS = ("exact", "wma", "wma-sr", "fictitious")
_CONSISTENCY_TOL = 1e-9


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimax-bayes",
        description="Minimax-Bayes policies for finite MDP sets via matrix games",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a problem file")
    solve.add_argument("problem", help="problem JSON file")
    solve.add_argument("--solver", choices=SOLVERS, default="exact")
    solve.add_argument("--rounds", type=int, default=1000)
    solve.add_argument("--learning-rate", type=float, default=None)
    solve.add_argument("--samples", type=int, default=64)
    solve.add_argument("--epochs", type=int, default=None)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--restriction", default=None, help="restricted prior set JSON file")
    solve.add_argument("--out", default=".", help="output directory")

    enum = sub.add_parser("enumerate", help="write all deterministic action maps")
    enum.add_argument("states", type=int)
    enum.add_argument("actions", type=int)
    enum.add_argument("--out", required=True, help="policy-set JSON file to write")
    enum.add_argument("--cap", type=int, default=1 << 16)

    verify = sub.add_parser("verify", help="re-check the inequalities behind a finished run")
    verify.add_argument("--out", default=".", help="directory holding the run artifacts")
    return parser


def _merge_traces(results) -> tuple[WmaTrace, ErrorLedger]:
    """Concatenate per-epoch traces into one row stream for the CSV."""
    traces = [r.trace for r in results]
    merged = WmaTrace(
        learning_rate=traces[-1].learning_rate,
        weights=np.concatenate([t.weights for t in traces]),
        dists=np.concatenate([t.dists for t in traces]),
        beliefs=np.concatenate([t.beliefs for t in traces]),
        chosen_mdp=np.concatenate([t.chosen_mdp for t in traces]),
        payoff_rows=np.concatenate([t.payoff_rows for t in traces]),
        chosen_policy=np.concatenate([t.chosen_policy for t in traces]),
        realized=np.concatenate([t.realized for t in traces]),
        cumulative_average=np.concatenate([t.cumulative_average for t in traces]),
        bound_slack=np.concatenate([t.bound_slack for t in traces]),
        est_rows=np.concatenate([t.est_rows for t in traces]),
        clamps=np.concatenate([t.clamps for t in traces]),
        epoch_index=np.concatenate([t.epoch_index for t in traces]),
    )
    ledger = ErrorLedger(np.concatenate([r.ledger.terms for r in results]))
    return merged, ledger


def _trace_solution(trace: WmaTrace, payoff: PayoffMatrix, method: str) -> GameSolution:
    """Equilibrium estimate from a finished run: time-averaged mixtures."""
    u = payoff.values
    q_bar = trace.dists.mean(axis=0)
    xi_bar = trace.beliefs.mean(axis=0)
    guaranteed = float((q_bar @ u).min())
    conceded = float((u @ xi_bar).max())
    return GameSolution(
        value=trace.algorithm_value / trace.rounds,
        policy_dist=q_bar,
        belief=xi_bar,
        method=method,
        duality_gap=conceded - guaranteed,
    )


def _fp_trace_csv(path, u: np.ndarray, play: dict) -> None:
    rows = play["rows"]
    cols = play["cols"]
    k = rows.size
    n, m = u.shape
    picked = u[rows, cols]
    running = np.cumsum(picked) / np.arange(1, k + 1)
    row_onehots = np.zeros((k, n))
    row_onehots[np.arange(k), rows] = 1.0
    col_onehots = np.zeros((k, m))
    col_onehots[np.arange(k), cols] = 1.0
    q_emp = np.cumsum(row_onehots, axis=0) / np.arange(1, k + 1)[:, None]
    xi_emp = np.cumsum(col_onehots, axis=0) / np.arange(1, k + 1)[:, None]
    lower = (q_emp @ u).min(axis=1)
    upper = (xi_emp @ u.T).max(axis=1)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write("round,chosen_mdp,chosen_policy,expected_payoff,cumulative_average,bound_slack\n")
        for i in range(k):
            handle.write(
                f"{i + 1},{int(cols[i])},{int(rows[i])},"
                f"{picked[i]:.17g},{running[i]:.17g},{upper[i] - lower[i]:.17g}\n"
            )


def cmd_solve(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem = load_problem(args.problem)
    mdps = problem.normalized_mdps()
    try:
        policy_set = enumerate_policies(problem.num_states, problem.num_actions)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    payoff = payoff_matrix(mdps, policy_set, problem.init)
    restriction = load_restriction(args.restriction) if args.restriction else None
    if restriction is not None and args.solver not in ("wma", "wma-sr"):
        print("error: --restriction is only supported for wma and wma-sr", file=sys.stderr)
        return 1

    learning_rate = args.learning_rate
    if args.solver in ("wma", "wma-sr") and learning_rate is None:
        learning_rate = default_learning_rate(policy_set.size, args.rounds)

    trace = None
    ledger = None
    if args.solver == "exact":
        solution = exact_game_value(payoff)
        rounds_used = 0
    elif args.solver == "fictitious":
        solution, play = fictitious_play(payoff, args.rounds, record=True)
        _fp_trace_csv(out_dir / "trace.csv", payoff.values, play)
        rounds_used = args.rounds
    elif args.solver == "wma":
        config = WmaConfig(rounds=args.rounds, learning_rate=learning_rate, seed=args.seed)
        trace = wma_run(payoff, config, restriction)
        solution = _trace_solution(trace, payoff, "wma")
        rounds_used = args.rounds
    else:  # wma-sr
        config = WmaConfig(rounds=args.rounds, learning_rate=learning_rate, seed=args.seed)
        if args.epochs:
            results = run_epochs(
                mdps, policy_set, problem.init, config, args.samples, args.epochs
            )
            trace, ledger = _merge_traces(results)
            solution = _trace_solution(results[-1].trace, payoff, "wma-sr")
            rounds_used = sum(r.length for r in results)
        else:
            trace, ledger = wma_sr_run(
                mdps, policy_set, problem.init, config, args.samples, restriction=restriction
            )
            solution = _trace_solution(trace, payoff, "wma-sr")
            rounds_used = args.rounds

    if trace is not None:
        write_trace_csv(out_dir / "trace.csv", trace, ledger)
    save_solution(solution, out_dir / "solution.json")
    manifest = {
        "problem": str(Path(args.problem).resolve()),
        "solver": args.solver,
        "rounds": args.rounds,
        "learning_rate": learning_rate,
        "samples": args.samples,
        "epochs": args.epochs,
        "seed": args.seed,
        "restriction": str(Path(args.restriction).resolve()) if args.restriction else None,
        "reward_scale": problem.reward_scale,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8", newline="\n") as handle:
        json.dump(manifest, handle, indent=2)
        handle.write("\n")
    print(f"value={solution.value:.17g} gap={solution.duality_gap:.17g} rounds={rounds_used}")
    return 0


def cmd_enumerate(args) -> int:
    try:
        policy_set = enumerate_policies(args.states, args.actions, cap=args.cap)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    save_policy_set(policy_set, args.out)
    print(f"wrote {policy_set.size} policies to {args.out}")
    return 0


def _replay_wma(payoff: PayoffMatrix, chosen_mdp: np.ndarray, learning_rate: float):
    """Deterministic reconstruction of mixtures and payoffs from nature's moves."""
    u_all = payoff.values
    n = payoff.policy_count
    k_rounds = chosen_mdp.size
    dists = np.empty((k_rounds, n))
    rows = np.empty((k_rounds, n))
    w = np.ones(n)
    for k in range(k_rounds):
        q = w / w.sum()
        u = u_all[:, int(chosen_mdp[k])]
        dists[k] = q
        rows[k] = u
        w = w * (1.0 + learning_rate * u)
    expected = np.sum(rows * dists, axis=1)
    return dists, rows, expected


def cmd_verify(args) -> int:
    out_dir = Path(args.out)
    manifest_path = out_dir / "manifest.json"
    solution_path = out_dir / "solution.json"
    if not manifest_path.exists() or not solution_path.exists():
        print(f"error: missing run artifacts in {out_dir}", file=sys.stderr)
        return 1
    with open(manifest_path, "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    with open(solution_path, "r", encoding="utf-8") as handle:
        solution = json.load(handle)
    problem = load_problem(manifest["problem"])
    mdps = problem.normalized_mdps()
    policy_set = enumerate_policies(problem.num_states, problem.num_actions)
    payoff = payoff_matrix(mdps, policy_set, problem.init)
    solver = manifest["solver"]

    checks: list[tuple[str, bool, float]] = []
    if solver in ("wma", "wma-sr"):
        trace_path = out_dir / "trace.csv"
        if not trace_path.exists():
            print(f"error: missing trace.csv in {out_dir}", file=sys.stderr)
            return 1
        csv_data = read_trace_csv(trace_path)

    if solver == "exact":
        resolved = exact_game_value(payoff)
        checks.append(("lp-duality", abs(resolved.duality_gap) <= 1e-7, 1e-7 - abs(resolved.duality_gap)))
        drift = abs(resolved.value - solution["value"])
        checks.append(("value-match", drift <= _CONSISTENCY_TOL, _CONSISTENCY_TOL - drift))
        lower, upper = oracle_bound(mdps, np.asarray(solution["belief"]), policy_set, problem.init)
        checks.append(("oracle-sandwich", lower <= upper + 1e-12, upper - lower))
    elif solver == "fictitious":
        q = np.asarray(solution["policy_distribution"])
        xi = np.asarray(solution["belief"])
        guaranteed = float((q @ payoff.values).min())
        conceded = float((payoff.values @ xi).max())
        exact_value = exact_game_value(payoff).value
        slack = min(exact_value - guaranteed, conceded - exact_value)
        checks.append(("fp-bracket", slack >= -1e-9, slack))
    elif solver == "wma":
        if manifest.get("restriction"):
            print("error: verify does not support restricted runs", file=sys.stderr)
            return 1
        dists, rows, expected = _replay_wma(
            payoff, csv_data["chosen_mdp"], manifest["learning_rate"]
        )
        drift = float(np.max(np.abs(expected - csv_data["expected_payoff"])))
        checks.append(("trace-consistency", drift <= _CONSISTENCY_TOL, _CONSISTENCY_TOL - drift))
        replayed = WmaTrace(
            learning_rate=manifest["learning_rate"],
            weights=dists,  # only dists and payoff_rows feed the check
            dists=dists,
            beliefs=np.zeros((dists.shape[0], payoff.mdp_count)),
            chosen_mdp=csv_data["chosen_mdp"],
            payoff_rows=rows,
            chosen_policy=csv_data["chosen_policy"],
            realized=np.zeros(dists.shape[0]),
            cumulative_average=csv_data["cumulative_average"],
            bound_slack=csv_data["bound_slack"],
        )
        worst = np.inf
        ok = True
        for i in range(policy_set.size):
            vertex = np.zeros(policy_set.size)
            vertex[i] = 1.0
            holds, slack = wma_guarantee_check(replayed, vertex)
            ok &= holds
            worst = min(worst, slack)
        checks.append(("mw-guarantee", bool(ok), float(worst)))
    else:  # wma-sr
        config = WmaConfig(
            rounds=manifest["rounds"],
            learning_rate=manifest["learning_rate"],
            seed=manifest["seed"],
        )
        if manifest.get("epochs"):
            results = run_epochs(
                mdps, policy_set, problem.init, config, manifest["samples"], manifest["epochs"]
            )
            trace, ledger = _merge_traces(results)
        else:
            trace, ledger = wma_sr_run(
                mdps, policy_set, problem.init, config, manifest["samples"]
            )
        expected = np.sum(trace.payoff_rows * trace.dists, axis=1)
        drift = float(np.max(np.abs(expected - csv_data["expected_payoff"])))
        drift = max(drift, float(np.max(np.abs(ledger.terms - csv_data["estimate_error_term"]))))
        checks.append(("trace-consistency", drift <= _CONSISTENCY_TOL, _CONSISTENCY_TOL - drift))
        if not manifest.get("epochs"):
            try:
                holds, slack = regret_bound_check(
                    trace, ledger, policy_set.size, manifest["rounds"], manifest["learning_rate"]
                )
                checks.append(("mw-sr-regret-bound", holds, slack))
            except ValueError:
                print("note: regret bound skipped (learning rate is not sqrt(ln N / K))")

    all_hold = True
    for name, holds, slack in checks:
        status = "HOLDS" if holds else "VIOLATED"
        all_hold &= holds
        print(f"check {name}: {status} slack={slack:.6g}")
    return 0 if all_hold else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"solve": cmd_solve, "enumerate": cmd_enumerate, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ProblemFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleRestrictionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GameSolverError, LpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
