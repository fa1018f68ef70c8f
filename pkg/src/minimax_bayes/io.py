"""File formats: problem sets, policy sets, restrictions, solutions, traces.

A problem file is a JSON document::

    {
      "gamma": 0.9,
      "states": 2,
      "actions": 2,
      "init": [0.5, 0.5],
      "mdps": [
        {"transitions": [[[...], ...], ...], "rewards": [...]},
        ...
      ]
    }

Validation failures name the offending JSON path (``$.mdps[1].transitions[0][2]``).
Loading keeps the file's raw rewards and records the normalization factor
separately, so emitting and reloading reproduces the same in-memory problem.

Trace CSVs use a dot decimal separator, 17 significant digits, and LF line
endings, so identical runs produce byte-identical files on every platform.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .games import GameSolution
from .mdp import Mdp, check_distribution
from .policies import PolicySet, RestrictedPriorSet
from .wma import WmaTrace
from .wma_sr import ErrorLedger


class ProblemFormatError(ValueError):
    """Malformed input file; ``path`` points at the offending JSON node."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class Problem:
    """A loaded problem: raw worlds, start distribution, and the reward scale.

    ``reward_scale`` is the factor that maps the file's rewards into the
    algorithm-facing [-1, 1] range; divide reported utilities by it to get
    back to the file's scale.
    """

    mdps: list[Mdp]
    init: np.ndarray
    reward_scale: float

    @property
    def gamma(self) -> float:
        return self.mdps[0].discount

    @property
    def num_states(self) -> int:
        return self.mdps[0].num_states

    @property
    def num_actions(self) -> int:
        return self.mdps[0].num_actions

    def normalized_mdps(self) -> list[Mdp]:
        return [
            Mdp(m.transitions, m.rewards * self.reward_scale, m.discount) for m in self.mdps
        ]


def _require(data: dict, key: str, path: str = "$"):
    if key not in data:
        raise ProblemFormatError(f"{path}.{key}", "missing required field")
    return data[key]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFormatError(path, f"expected a number, got {value!r}")
    return float(value)


def _as_positive_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ProblemFormatError(path, f"expected a positive integer, got {value!r}")
    return value


def _as_vector(value, length: int, path: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != length:
        raise ProblemFormatError(path, f"expected a list of {length} numbers")
    return np.array([_as_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def load_problem(source) -> Problem:
    """Load and validate a problem file (path, file object, or parsed dict)."""
    if isinstance(source, dict):
        data = source
    else:
        try:
            if hasattr(source, "read"):
                data = json.load(source)
            else:
                with open(source, "r", encoding="utf-8") as handle:
                    data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProblemFormatError("$", "top level must be an object")

    gamma = _as_number(_require(data, "gamma"), "$.gamma")
    if not 0.0 < gamma < 1.0:
        raise ProblemFormatError("$.gamma", f"must be in (0, 1), got {gamma}")
    states = _as_positive_int(_require(data, "states"), "$.states")
    actions = _as_positive_int(_require(data, "actions"), "$.actions")
    init = _as_vector(_require(data, "init"), states, "$.init")
    try:
        init = check_distribution(init, states, "init")
    except ValueError as exc:
        raise ProblemFormatError("$.init", str(exc)) from exc

    raw_mdps = _require(data, "mdps")
    if not isinstance(raw_mdps, list) or not raw_mdps:
        raise ProblemFormatError("$.mdps", "expected a nonempty list")
    mdps = []
    for idx, entry in enumerate(raw_mdps):
        base = f"$.mdps[{idx}]"
        if not isinstance(entry, dict):
            raise ProblemFormatError(base, "expected an object")
        rewards = _as_vector(_require(entry, "rewards", base), states, f"{base}.rewards")
        trans_raw = _require(entry, "transitions", base)
        if not isinstance(trans_raw, list) or len(trans_raw) != states:
            raise ProblemFormatError(f"{base}.transitions", f"expected {states} state entries")
        kernel = np.empty((states, actions, states))
        for s, per_state in enumerate(trans_raw):
            if not isinstance(per_state, list) or len(per_state) != actions:
                raise ProblemFormatError(
                    f"{base}.transitions[{s}]", f"expected {actions} action entries"
                )
            for a, row in enumerate(per_state):
                vec = _as_vector(row, states, f"{base}.transitions[{s}][{a}]")
                total = vec.sum()
                if vec.min() < -1e-9 or abs(total - 1.0) > 1e-9:
                    raise ProblemFormatError(
                        f"{base}.transitions[{s}][{a}]",
                        f"not a probability vector (sum {total!r})",
                    )
                kernel[s, a] = vec
        try:
            mdps.append(Mdp(kernel, rewards, gamma))
        except ValueError as exc:
            raise ProblemFormatError(base, str(exc)) from exc

    peak = max(float(np.max(np.abs(m.rewards))) for m in mdps)
    scale = (1.0 - gamma) / max(1.0, peak)
    return Problem(mdps=mdps, init=init, reward_scale=scale)


def problem_to_dict(problem: Problem) -> dict:
    return {
        "gamma": problem.gamma,
        "states": problem.num_states,
        "actions": problem.num_actions,
        "init": problem.init.tolist(),
        "mdps": [
            {"transitions": m.transitions.tolist(), "rewards": m.rewards.tolist()}
            for m in problem.mdps
        ],
    }


def save_problem(problem: Problem, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(problem_to_dict(problem), handle, indent=2)
        handle.write("\n")


def load_policy_set(path) -> PolicySet:
    """Policy-set file: a JSON list of integer action maps."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise ProblemFormatError("$", "expected a nonempty list of action maps")
    for i, row in enumerate(data):
        if not isinstance(row, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in row):
            raise ProblemFormatError(f"$[{i}]", "expected a list of integer actions")
    try:
        return PolicySet(np.asarray(data, dtype=np.int64))
    except ValueError as exc:
        raise ProblemFormatError("$", str(exc)) from exc


def save_policy_set(policy_set: PolicySet, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(policy_set.actions.tolist(), handle)
        handle.write("\n")


def load_restriction(path) -> RestrictedPriorSet:
    """Restriction file: statistic matrix (one row per world), target, tolerance."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ProblemFormatError("$", "top level must be an object")
    values = _require(data, "statistic_values")
    target = _require(data, "target")
    tolerance = _as_number(data.get("tolerance", 1e-7), "$.tolerance")
    try:
        return RestrictedPriorSet(
            np.asarray(values, dtype=float), np.asarray(target, dtype=float), tolerance
        )
    except ValueError as exc:
        raise ProblemFormatError("$", str(exc)) from exc


def solution_to_dict(solution: GameSolution) -> dict:
    return {
        "value": solution.value,
        "policy_distribution": solution.policy_dist.tolist(),
        "belief": solution.belief.tolist(),
        "method": solution.method,
        "duality_gap": solution.duality_gap,
    }


def save_solution(solution: GameSolution, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(solution_to_dict(solution), handle, indent=2)
        handle.write("\n")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


TRACE_COLUMNS = (
    "round",
    "chosen_mdp",
    "chosen_policy",
    "expected_payoff",
    "cumulative_average",
    "bound_slack",
)
TRACE_COLUMNS_SR = TRACE_COLUMNS + (
    "estimate_error_term",
    "cumulative_error",
    "epoch_index",
    "clamp_count",
)


def write_trace_csv(path, trace: WmaTrace, ledger: ErrorLedger | None = None) -> None:
    """One row per round; the sampled variant adds its error-ledger columns."""
    sampled = trace.est_rows is not None
    if sampled and ledger is None:
        raise ValueError("sampled traces need their error ledger")
    expected = np.sum(trace.payoff_rows * trace.dists, axis=1)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS_SR if sampled else TRACE_COLUMNS)
        cumulative_error = np.cumsum(ledger.terms) if sampled else None
        for k in range(trace.rounds):
            row = [
                str(k + 1),
                str(int(trace.chosen_mdp[k])),
                str(int(trace.chosen_policy[k])),
                _fmt(expected[k]),
                _fmt(trace.cumulative_average[k]),
                _fmt(trace.bound_slack[k]),
            ]
            if sampled:
                row += [
                    _fmt(ledger.terms[k]),
                    _fmt(cumulative_error[k]),
                    str(int(trace.epoch_index[k])),
                    str(int(trace.clamps[k])),
                ]
            writer.writerow(row)


def read_trace_csv(path) -> dict[str, np.ndarray]:
    """Columns of a trace file as float/int arrays keyed by header name."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = list(reader)
    out: dict[str, np.ndarray] = {}
    int_cols = {"round", "chosen_mdp", "chosen_policy", "epoch_index", "clamp_count"}
    for j, name in enumerate(header):
        column = [row[j] for row in rows]
        out[name] = np.array(
            [int(v) for v in column] if name in int_cols else [float(v) for v in column]
        )
    return out
