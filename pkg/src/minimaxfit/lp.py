"""Dense two-phase primal simplex and the sup-norm linear program.

For fixed basis matrix A and data b, minimizing ||A x - b||_inf over x is
the linear program

    min z   s.t.   z >= (A x - b)_i  and  z >= -(A x - b)_i,

which ``solve_chebyshev`` assembles in equality standard form and hands to
the simplex engine.  The engine is deliberately plain: dense tableau,
Bland's anti-cycling rule, artificial variables only for rows no slack
column can seed.  Problem sizes here (a few hundred rows) make this the
simple, dependable choice.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import InvalidInputError, as_point
from .numkit import as_matrix

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7


@dataclass
class StandardLp:
    """min c.x subject to A x = b, x >= 0, with b normalized nonnegative.

    Rows with negative right-hand side are sign-flipped at construction.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.b = as_point(self.b, "b")
        self.c = as_point(self.c, "c")
        k, n = self.A.shape
        if self.b.size != k:
            raise InvalidInputError(f"rhs has length {self.b.size}, expected {k}")
        if self.c.size != n:
            raise InvalidInputError(f"cost has length {self.c.size}, expected {n}")
        neg = self.b < 0
        if np.any(neg):
            self.A = self.A.copy()
            self.b = self.b.copy()
            self.A[neg] *= -1.0
            self.b[neg] *= -1.0


@dataclass(frozen=True)
class LpSolution:
    x: Optional[np.ndarray]
    z: float
    status: str  # "optimal" | "infeasible" | "unbounded" | "stalled" | "internal_error"
    pivot_count: int = 0


def _pivot(T: np.ndarray, basis: list[int], row: int, col: int) -> None:
    piv = T[row] / T[row, col]
    T[row] = piv
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, piv)
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _iterate(T: np.ndarray, basis: list[int], cost: np.ndarray, pivot_limit: int):
    """Primal simplex sweeps with Bland's rule on a canonical tableau."""
    pivots = 0
    while True:
        red = cost - cost[basis] @ T[:, :-1]
        red[basis] = 0.0
        candidates = np.nonzero(red < -PIVOT_TOL)[0]
        # Reduced costs accumulate rounding proportional to the objective
        # scale; only a decisively negative one may prove unboundedness.
        noise = FEAS_TOL * (1.0 + abs(float(cost[basis] @ T[:, -1])))
        enter = -1
        unbounded_col = -1
        for j in candidates:  # Bland: smallest eligible index
            colv = T[:, j]
            if np.any(colv > PIVOT_TOL):
                enter = int(j)
                break
            # No admissible pivot row: either a genuine ray (decisive
            # reduced cost) or rounding debris to be skipped.
            if red[j] < -noise and float(np.max(np.abs(colv))) > 1e3 * PIVOT_TOL:
                unbounded_col = int(j)
                break
        if enter < 0:
            if unbounded_col >= 0:
                return "unbounded", pivots
            return "optimal", pivots
        colv = T[:, enter]
        rows = np.nonzero(colv > PIVOT_TOL)[0]
        ratios = T[rows, -1] / colv[rows]
        rmin = float(np.min(ratios))
        ties = rows[ratios <= rmin + 1e-12 * (1.0 + abs(rmin))]
        leave = int(ties[int(np.argmin([basis[i] for i in ties]))])
        _pivot(T, basis, leave, enter)
        pivots += 1
        if pivots > pivot_limit:
            return "stalled", pivots


def simplex_solve(lp: StandardLp) -> LpSolution:
    """Two-phase primal simplex returning an optimal basic solution.

    Numerical trouble is reported through the status field, never an
    exception.  Columns are equilibrated by powers of two (exact in
    floating point) so the pivot tolerance is meaningful across badly
    scaled inputs, and slack-like unit columns seed the phase-1 basis so
    artificial variables are only created for rows that need them.
    """
    k, n = lp.A.shape
    pivot_limit = 200 * (k + n + 10)

    col_max = np.max(np.abs(lp.A), axis=0)
    col_scale = np.where(col_max > 0, 2.0 ** np.round(np.log2(np.maximum(col_max, 1e-300))), 1.0)
    A = lp.A / col_scale
    c = lp.c / col_scale

    # Seed with existing unit columns (one per row at most).
    basis_seed: list[int] = [-1] * k
    used: set[int] = set()
    for j in range(n):
        col = A[:, j]
        nz = np.nonzero(np.abs(col) > 0)[0]
        if nz.size == 1 and abs(col[nz[0]] - 1.0) < 1e-12:
            i = int(nz[0])
            if basis_seed[i] < 0 and j not in used:
                basis_seed[i] = j
                used.add(j)

    art_rows = [i for i in range(k) if basis_seed[i] < 0]
    n_art = len(art_rows)
    T = np.zeros((k, n + n_art + 1))
    T[:, :n] = A
    for a, i in enumerate(art_rows):
        T[i, n + a] = 1.0
    T[:, -1] = lp.b
    basis = basis_seed.copy()
    for a, i in enumerate(art_rows):
        basis[i] = n + a

    total_pivots = 0
    if n_art > 0:
        cost1 = np.concatenate([np.zeros(n), np.ones(n_art)])
        status1, p1 = _iterate(T, basis, cost1, pivot_limit)
        total_pivots += p1
        if status1 != "optimal":
            return LpSolution(x=None, z=np.nan, status=status1, pivot_count=total_pivots)
        if float(cost1[basis] @ T[:, -1]) > FEAS_TOL:
            return LpSolution(x=None, z=np.nan, status="infeasible", pivot_count=total_pivots)
        # Drive leftover artificials out of the basis where possible.
        for i in range(k):
            if basis[i] >= n:
                row = np.abs(T[i, :n])
                cand = np.nonzero(row > PIVOT_TOL)[0]
                if cand.size:
                    _pivot(T, basis, i, int(cand[0]))
                    total_pivots += 1
        keep = [i for i in range(k) if basis[i] < n]
        if len(keep) < k:  # redundant rows stay basic in an artificial at value 0
            T = T[keep]
            basis = [basis[i] for i in keep]
        T = np.hstack([T[:, :n], T[:, -1:]])

    status2, p2 = _iterate(T, basis, c, pivot_limit)
    total_pivots += p2
    if status2 != "optimal":
        return LpSolution(x=None, z=np.nan, status=status2, pivot_count=total_pivots)
    x = np.zeros(n)
    for i, bi in enumerate(basis):
        x[bi] = T[i, -1]
    # Re-solve the basic system from the original data; the tableau drifts
    # by rounding over hundreds of pivots and this pulls feasibility back
    # to machine level.  Keep the refined solution only when it actually
    # fits the constraints better.
    B = A[:, basis]
    try:
        xb = np.linalg.solve(B, lp.b)
    except np.linalg.LinAlgError:
        xb = np.linalg.lstsq(B, lp.b, rcond=None)[0]
    if np.all(np.isfinite(xb)) and np.min(xb) > -FEAS_TOL:
        refined = np.zeros(n)
        for i, bi in enumerate(basis):
            refined[bi] = max(xb[i], 0.0)
        if np.max(np.abs(A @ refined - lp.b)) < np.max(np.abs(A @ x - lp.b)):
            x = refined
    x /= col_scale
    return LpSolution(x=x, z=float(lp.c @ x), status="optimal", pivot_count=total_pivots)


def chebyshev_lp(A, b) -> StandardLp:
    """Standard-form LP whose optimum is min_x ||A x - b||_inf.

    Variables are [x+, x-, z, s] with x = x+ - x- free via splitting, z the
    sup-norm bound (implied nonnegative), and 2m slacks.
    """
    M = as_matrix(A, "A")
    v = as_point(b, "b")
    m, n = M.shape
    if v.size != m:
        raise InvalidInputError(f"data has length {v.size}, expected {m}")
    ncols = 2 * n + 1 + 2 * m
    G = np.zeros((2 * m, ncols))
    G[:m, :n] = M
    G[:m, n : 2 * n] = -M
    G[m:, :n] = -M
    G[m:, n : 2 * n] = M
    G[:, 2 * n] = -1.0
    G[:, 2 * n + 1 :] = np.eye(2 * m)
    rhs = np.concatenate([v, -v])
    cost = np.zeros(ncols)
    cost[2 * n] = 1.0
    return StandardLp(G, rhs, cost)


def solve_chebyshev(A, b) -> LpSolution:
    """Global minimizer of x -> ||A x - b||_inf via the simplex engine.

    The z >= +/-(Ax - b)_i constraints force z >= 0, so an unbounded status
    can only be numerical breakage and is surfaced as "internal_error".
    """
    M = as_matrix(A, "A")
    n = M.shape[1]
    sol = simplex_solve(chebyshev_lp(M, b))
    if sol.status == "unbounded":
        return LpSolution(x=None, z=np.nan, status="internal_error", pivot_count=sol.pivot_count)
    if sol.status != "optimal":
        return sol
    x = sol.x[:n] - sol.x[n : 2 * n]
    # Report the sup norm actually achieved by x; it matches the simplex
    # bound to rounding and is exact (for one, exactly zero on
    # interpolating systems).
    z = float(np.max(np.abs(M @ x - np.asarray(b, dtype=float).reshape(-1))))
    return LpSolution(x=x, z=z, status="optimal", pivot_count=sol.pivot_count)
