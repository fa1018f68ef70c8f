"""Dense two-phase simplex for small linear programs.

Solves ``min c @ x  subject to  A @ x = b, x >= 0`` on a dense tableau using
Bland's smallest-index pivoting rule, which cannot cycle.  Every problem in
this package has a handful of variables, so the design goal is determinism
and exact reproducibility of tie-breaking, not speed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-9
_FEAS_TOL = 1e-8


class LpError(Exception):
    """LP failure with iteration diagnostics attached."""

    def __init__(self, message: str, phase: int | None = None, iterations: int | None = None):
        if phase is not None:
            message = f"{message} (phase {phase} after {iterations} pivots)"
        super().__init__(message)
        self.phase = phase
        self.iterations = iterations


class LpInfeasible(LpError):
    pass


class LpUnbounded(LpError):
    pass


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    # Kill round-off dust so the basis column is an exact unit vector.
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0


def _run_pivots(tableau, basis, num_cols, phase, max_pivots):
    """Pivot until no reduced cost is negative.  Bland's rule throughout:
    the entering column is the smallest index with a negative reduced cost,
    and ratio-test ties leave the row whose basic variable has the smallest
    index."""
    m = tableau.shape[0] - 1
    iterations = 0
    while True:
        negatives = np.flatnonzero(tableau[-1, :num_cols] < -_PIVOT_TOL)
        if negatives.size == 0:
            return iterations
        col = int(negatives[0])
        pivots = tableau[:m, col]
        eligible = pivots > _PIVOT_TOL
        if not eligible.any():
            raise LpUnbounded("objective is unbounded below", phase, iterations)
        ratios = np.full(m, np.inf)
        ratios[eligible] = tableau[:m, -1][eligible] / pivots[eligible]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + 1e-12)
        row = int(ties[np.argmin(basis[ties])])
        _pivot(tableau, row, col)
        basis[row] = col
        iterations += 1
        if iterations > max_pivots:
            raise LpError("pivot limit exceeded", phase, iterations)


def solve_standard_lp(c, a_eq, b_eq, max_pivots: int = 100_000) -> LpSolution:
    """Minimize ``c @ x`` over ``a_eq @ x = b_eq, x >= 0``.

    Raises :class:`LpInfeasible` when the constraints admit no solution and
    :class:`LpUnbounded` when the objective has no minimum.
    """
    c = np.asarray(c, dtype=float)
    a = np.array(a_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"a_eq must be a matrix, got shape {a.shape}")
    m, n = a.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(
            f"shape mismatch: c {c.shape}, a_eq {a.shape}, b_eq {b.shape}"
        )
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial basis, minimize the sum of artificials.
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = a
    tableau[:m, n : n + m] = np.eye(m)
    tableau[:m, -1] = b
    tableau[-1, :n] = -a.sum(axis=0)
    tableau[-1, -1] = -b.sum()
    basis = np.arange(n, n + m)
    iterations = _run_pivots(tableau, basis, n + m, phase=1, max_pivots=max_pivots)
    residual = -tableau[-1, -1]
    if residual > _FEAS_TOL:
        raise LpInfeasible(
            f"constraints are infeasible (artificial residual {residual:.3e})",
            phase=1,
            iterations=iterations,
        )

    # Drive leftover artificials out of the basis; rows that cannot pivot on
    # any structural column are redundant and get dropped.
    keep = []
    for i in range(m):
        if basis[i] < n:
            keep.append(i)
            continue
        structural = np.flatnonzero(np.abs(tableau[i, :n]) > _PIVOT_TOL)
        if structural.size:
            col = int(structural[0])
            _pivot(tableau, i, col)
            basis[i] = col
            iterations += 1
            keep.append(i)

    # Phase 2: original costs over the structural columns only.
    rows = len(keep)
    phase2 = np.zeros((rows + 1, n + 1))
    phase2[:rows, :n] = tableau[keep, :n]
    phase2[:rows, -1] = tableau[keep, -1]
    basis2 = basis[keep].copy()
    phase2[-1, :n] = c
    for i, var in enumerate(basis2):
        coef = c[var]
        if coef != 0.0:
            phase2[-1] -= coef * phase2[i]
    iterations += _run_pivots(phase2, basis2, n, phase=2, max_pivots=max_pivots)

    x = np.zeros(n)
    x[basis2] = phase2[:rows, -1]
    np.maximum(x, 0.0, out=x)  # clip round-off dust
    return LpSolution(x=x, objective=float(c @ x), iterations=iterations)
