"""Alternating minimization for separable sup-norm problems.

For residuals A(y) x - b(y) each outer iteration solves the fixed-y
subproblem in x exactly as a linear program, attacks the reduced nonlinear
subproblem in y with a general sup-norm solver, then line-searches the
joint segment between the old pair and the candidate pair.  Zero is always
on the line-search grid, so the outer objective never increases; one is
always on it, so the result is never worse than the naive update.

Two engineering details matter in practice.  First, the reduced problem is
often pinned: when the linear step has just re-fitted x to the current y,
no y-only move can help, and an exactly solved subproblem returns the
current point.  The subproblem solver's last reweighted iterate is used as
the candidate in that case, which keeps the joint search direction alive.
Second, the line search also considers the pair produced by a plain
least-squares polish of (x, y) jointly; on problems whose optimum has small
residuals this pulls iterates into the flat joint basin that the
alternating structure alone circles slowly.  Both candidates go through
the same safeguarded line search, so monotonicity is never at risk.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import (
    EvaluationError,
    InvalidInputError,
    MinimaxFitError,
    ResidualMap,
    SeparableProblem,
    as_point,
    inf_norm,
)
from .dual import DualOptions, solve_dual
from .lp import solve_chebyshev
from .nlls import NllsOptions, solve_weighted_nlls
from .numkit import LineSearchError, lstsq, min_scalar
from .smoothmin import PnormSchedule, solve_pnorm_sequence

_STALL_ITERS = 3  # consecutive quiet outer iterations before stopping


@dataclass(frozen=True)
class AltOptions:
    max_outer: int = 50
    stop_tol: float = 1e-4
    subproblem_method: str = "dual"  # "dual" | "pnorm"
    ls_lo: float = 0.0
    ls_hi: float = 1.5
    ls_grid_points: int = 76
    ls_refine_tol: float = 1e-6
    # Budget for the embedded dual subsolver; deliberately tighter than the
    # standalone default since it runs once per outer iteration.
    dual: DualOptions = DualOptions(
        max_outer_iters=8, stop_tol=1e-6, inner=NllsOptions(max_iters=60)
    )
    pnorm: PnormSchedule = PnormSchedule()
    # Extra deterministic exploration starts; used only when a sampler is
    # given.  The sampler receives the current nonlinear iterate and
    # returns a trial start (e.g. local jitter or a draw from a known box).
    subproblem_restarts: int = 8
    restart_sampler: Optional[Callable[[np.ndarray], np.ndarray]] = None
    # Offer the joint least-squares polish of (x, y) to the line search.
    joint_polish: bool = True
    polish: NllsOptions = NllsOptions(max_iters=150)

    def __post_init__(self):
        if self.max_outer < 1:
            raise InvalidInputError("max_outer must be >= 1")
        if self.stop_tol <= 0 or self.ls_refine_tol <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.subproblem_method not in ("dual", "pnorm"):
            raise InvalidInputError("subproblem_method must be 'dual' or 'pnorm'")
        if not self.ls_lo <= 0.0 <= self.ls_hi:
            raise InvalidInputError("line-search interval must contain 0")
        if self.subproblem_restarts < 0:
            raise InvalidInputError("subproblem_restarts must be >= 0")


@dataclass(frozen=True)
class AltTraceEntry:
    lp_objective: float  # after the exact linear step
    subproblem_objective: float  # at the naive update (x1, y1)
    objective: float  # after the joint line search
    beta: float


@dataclass(frozen=True)
class AltResult:
    x: np.ndarray
    y: np.ndarray
    objective: float
    outer_iterations: int
    trace: list[AltTraceEntry] = field(default_factory=list)
    status: str = "max_outer"  # "converged" | "max_outer" | "aborted"


def reduced_map(P: SeparableProblem, x_fixed) -> ResidualMap:
    """The n2-dimensional map y -> A(y) x - b(y) for frozen x.

    Uses the problem's analytic basis derivatives when present; otherwise
    the returned map carries no Jacobian and solvers fall back to finite
    differences.
    """
    x = as_point(x_fixed, "x")
    if x.size != P.n1:
        raise InvalidInputError(f"x has length {x.size}, expected {P.n1}")

    def fun(y):
        return P.matrix(y) @ x - P.data(y)

    jac = None
    if P.basis_jac is not None:

        def jac(y):
            J = np.einsum("ijk,j->ik", P.basis_jac_at(y), x)
            if P.rhs_jac is not None:
                J = J - P.rhs_jac_at(y)
            return J

    return ResidualMap(n=P.n2, m=P.m, fun=fun, jac=jac)


def joint_map(P: SeparableProblem) -> ResidualMap:
    """The full residual as a plain map of the stacked vector (x, y)."""

    def fun(v):
        return P.matrix(v[P.n1 :]) @ v[: P.n1] - P.data(v[P.n1 :])

    jac = None
    if P.basis_jac is not None:

        def jac(v):
            x, y = v[: P.n1], v[P.n1 :]
            Jy = np.einsum("ijk,j->ik", P.basis_jac_at(y), x)
            if P.rhs_jac is not None:
                Jy = Jy - P.rhs_jac_at(y)
            return np.hstack([P.matrix(y), Jy])

    return ResidualMap(n=P.n1 + P.n2, m=P.m, fun=fun, jac=jac)


def _solve_reduced(rm: ResidualMap, y_start, opts: AltOptions):
    """Run the chosen subproblem solver; returns (y_best, value, y_jiggle).

    y_jiggle is the point used when the subproblem is pinned at the start:
    the dual solver's last reweighted iterate (which moves even without a
    sup-norm improvement), or the surrogate method's best staged point.
    """
    if opts.subproblem_method == "dual":
        res = solve_dual(rm, y_start, opts.dual)
        return res.y_best, res.primal_best, res.y_final
    res = solve_pnorm_sequence(rm, y_start, opts.pnorm)
    return res.y, res.objective, res.y


def solve_separable(
    P: SeparableProblem,
    x0,
    y0,
    opts: AltOptions = AltOptions(),
    progress: Optional[Callable[[int, AltTraceEntry], None]] = None,
) -> AltResult:
    """Alternate exact linear solves, nonlinear subproblem solves, and a
    safeguarded joint line search until the sup-norm objective settles.

    ``x0`` may be None, in which case the starting x is the exact linear
    optimum at y0.  Stops after three consecutive outer iterations whose
    objective change is below ``stop_tol``, or at ``max_outer``.  A linear
    program failure or a subproblem evaluation failure aborts, returning
    the best iterate so far with the partial trace.
    """
    y = as_point(y0, "y0")
    if y.size != P.n2:
        raise InvalidInputError(f"y0 has length {y.size}, expected {P.n2}")
    if x0 is None:
        first = solve_chebyshev(P.matrix(y), P.data(y))
        if first.status != "optimal":
            raise MinimaxFitError(
                f"initial linear solve failed with status {first.status}"
            )
        x = first.x
    else:
        x = as_point(x0, "x0")
        if x.size != P.n1:
            raise InvalidInputError(f"x0 has length {x.size}, expected {P.n1}")

    jm = joint_map(P) if opts.joint_polish else None
    f_cur = inf_norm(P.residual(x, y))
    trace: list[AltTraceEntry] = []
    status = "max_outer"
    quiet = 0
    for it in range(opts.max_outer):
        lp = solve_chebyshev(P.matrix(y), P.data(y))
        if lp.status != "optimal":
            status = "aborted"
            break
        x1 = lp.x

        try:
            rm = reduced_map(P, x1)
            y_cand, best_val, y_jiggle = _solve_reduced(rm, y, opts)
            # A subproblem that cannot beat the fresh linear optimum is
            # pinned at y; keep the reweighted iterate so the joint
            # direction still moves.
            y1 = y_cand if best_val < lp.z - 1e-10 else y_jiggle
            f_sub = inf_norm(P.residual(x1, y1))
        except EvaluationError:
            status = "aborted"
            break

        def try_pair(xa, ya, best_move):
            dx = xa - x
            dy = ya - y

            def phi(beta, dx=dx, dy=dy):
                return inf_norm(P.residual(x + beta * dx, y + beta * dy))

            try:
                beta, f_new = min_scalar(
                    phi, opts.ls_lo, opts.ls_hi, opts.ls_grid_points, opts.ls_refine_tol
                )
            except LineSearchError:
                return best_move
            if best_move is None or f_new < best_move[1]:
                return (beta, f_new, dx, dy)
            return best_move

        def polish_pair(x_from, y_from):
            if jm is None:
                return None
            try:
                pol = solve_weighted_nlls(
                    jm, np.ones(P.m), np.concatenate([x_from, y_from]), opts.polish
                )
            except EvaluationError:
                return None
            return pol.y[: P.n1], pol.y[P.n1 :]

        best_move = try_pair(x1, y1, None)
        pol = polish_pair(x, y)
        if pol is not None:
            best_move = try_pair(*pol, best_move)

        # Exploration kicks in only when the iteration is otherwise stuck:
        # pair each sampled start with its own linear fit, polish jointly,
        # and stop at the first real improvement.
        if opts.restart_sampler is not None:
            for _ in range(opts.subproblem_restarts):
                if best_move is not None and f_cur - best_move[1] >= opts.stop_tol:
                    break
                try:
                    ys = as_point(opts.restart_sampler(y), "restart point")
                    xs = lstsq(P.matrix(ys), P.data(ys))
                except (EvaluationError, InvalidInputError):
                    continue
                pol = polish_pair(xs, ys)
                if pol is not None:
                    best_move = try_pair(*pol, best_move)

        if best_move is None:
            status = "aborted"
            break
        beta, f_new, dx, dy = best_move
        x = x + beta * dx
        y = y + beta * dy
        entry = AltTraceEntry(
            lp_objective=lp.z, subproblem_objective=f_sub, objective=f_new, beta=beta
        )
        trace.append(entry)
        if progress is not None:
            progress(it, entry)
        change = f_cur - f_new
        f_cur = f_new
        quiet = quiet + 1 if abs(change) < opts.stop_tol else 0
        # Without a sampler the loop is a deterministic function of (x, y);
        # an iteration that moved nothing would repeat itself forever.
        deterministic_fixed_point = (
            beta == 0.0 and change == 0.0 and opts.restart_sampler is None
        )
        if quiet >= _STALL_ITERS or deterministic_fixed_point:
            status = "converged"
            break
    return AltResult(
        x=x,
        y=y,
        objective=f_cur,
        outer_iterations=len(trace),
        trace=trace,
        status=status,
    )


def with_method(opts: AltOptions, method: str) -> AltOptions:
    """Copy of ``opts`` using the given nonlinear subproblem method."""
    return replace(opts, subproblem_method=method)
