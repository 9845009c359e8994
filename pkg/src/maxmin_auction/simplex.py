"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves  min c'x  s.t.  Ax = b, x >= 0.  The tableaus here never exceed a
handful of rows, so a dense implementation with deterministic pivoting is
both simple and reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NumericalError, UnboundedError

PIVOT_TOL = 1e-10


@dataclass
class LPResult:
    x: np.ndarray          # primal solution
    value: float           # c'x at the optimum
    basis: np.ndarray      # column indices of the final basis, one per row
    duals: np.ndarray      # y with y'A <= c' and y'b == value


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, cost: np.ndarray,
                 max_iter: int) -> None:
    """Pivot in place until all reduced costs are nonnegative.

    Steepest reduced cost picks the entering column while progress is made;
    a run of degenerate pivots switches to Bland's rule, whose exact-tie
    comparisons cannot cycle, until the objective strictly moves again.
    """
    m = len(basis)
    ncols = tableau.shape[1] - 1
    stalled = 0
    for _ in range(max_iter):
        reduced = cost[:ncols] - tableau[:, :ncols].T @ cost[basis]
        candidates = np.flatnonzero(reduced < -PIVOT_TOL)
        if candidates.size == 0:
            return
        if stalled > 8:
            entering = int(candidates[0])           # Bland
        else:
            entering = int(candidates[np.argmin(reduced[candidates])])
        col = tableau[:, entering]
        rhs = tableau[:, -1]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > PIVOT_TOL:
                ratio = rhs[i] / col[i]
                if ratio < best_ratio or (ratio == best_ratio
                                          and basis[i] < basis[leaving]):
                    best_ratio, leaving = ratio, i
        if leaving < 0:
            raise UnboundedError("objective unbounded below")
        stalled = 0 if best_ratio > PIVOT_TOL else stalled + 1
        _pivot(tableau, basis, leaving, entering)
    raise NumericalError("simplex iteration limit exceeded")


def solve_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray,
             max_iter: int = 100_000) -> LPResult:
    """Solve min c'x s.t. Ax = b, x >= 0 and return primal/dual data."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0

    # Phase 1: artificial variables form the starting basis.
    tableau = np.zeros((m, n + m + 1))
    tableau[:, :n] = A
    tableau[:, n:n + m] = np.eye(m)
    tableau[:, -1] = b
    basis = np.arange(n, n + m)
    phase1_cost = np.concatenate([np.zeros(n), np.ones(m), [0.0]])
    _run_simplex(tableau, basis, phase1_cost, max_iter)
    if float(phase1_cost[basis] @ tableau[:, -1]) > 1e-9:
        raise InfeasibleError("no feasible point")

    # Drive artificials that remain basic at zero level out of the basis.
    for i in range(m):
        if basis[i] >= n:
            row = tableau[i, :n]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if nz.size:
                _pivot(tableau, basis, i, int(nz[0]))

    keep = np.flatnonzero(basis < n)       # rows left redundant keep artificials
    tableau = np.hstack([tableau[keep][:, :n], tableau[keep][:, -1:]])
    basis = basis[keep]

    # Phase 2 on the original costs.
    phase2_cost = np.concatenate([c, [0.0]])
    _run_simplex(tableau, basis, phase2_cost, max_iter)

    x = np.zeros(n)
    x[basis] = tableau[:, -1]
    value = float(c @ x)

    # Duals from the final basis: y'B = c_B', zero on redundant rows.
    duals = np.zeros(m)
    B = A[np.ix_(keep, basis)]
    duals[keep] = np.linalg.solve(B.T, c[basis])
    duals[flip] *= -1.0
    return LPResult(x=x, value=value, basis=basis.copy(), duals=duals)
