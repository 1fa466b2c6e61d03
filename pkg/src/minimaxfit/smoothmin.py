"""Smooth surrogate minimization of the sup norm via even-power objectives.

The baseline method minimizes sum_i F_i(y)**(2p) for an increasing ladder
of exponents p, warm-starting each stage from the previous one.  Each stage
is an unconstrained smooth problem handled by a BFGS quasi-Newton loop with
Armijo backtracking.  Residuals are rescaled by their current sup norm
before exponentiation so large p does not overflow; by homogeneity this
does not move the minimizer of a stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import EvaluationError, InvalidInputError, MinimaxFitError, ResidualMap, as_point, inf_norm

_ARMIJO_C1 = 1e-4
_BACKTRACK = 0.5
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class PnormSchedule:
    """Exponent ladder and stopping rule for the staged surrogate."""

    p_sequence: tuple[int, ...] = (1, 2, 3, 4, 6, 8, 12, 16)
    stage_max_iters: int = 150
    stop_tol: float = 1e-4

    def __post_init__(self):
        if len(self.p_sequence) == 0 or self.p_sequence[0] < 1:
            raise InvalidInputError("p_sequence must hold positive integers")
        if any(b <= a for a, b in zip(self.p_sequence, self.p_sequence[1:])):
            raise InvalidInputError("p_sequence must be strictly increasing")
        if self.stage_max_iters < 1 or self.stop_tol <= 0:
            raise InvalidInputError("stage_max_iters and stop_tol must be positive")


@dataclass(frozen=True)
class BfgsResult:
    y: np.ndarray
    fval: float
    iterations: int
    status: str  # "converged" | "max_iters" | "stalled"


@dataclass(frozen=True)
class PnormStage:
    p: int
    objective: float  # sup norm at the stage minimizer
    iterations: int
    status: str


@dataclass(frozen=True)
class PnormResult:
    y: np.ndarray
    objective: float  # sup norm at the returned point
    trace: list[PnormStage] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return sum(s.iterations for s in self.trace)


def bfgs_min(
    f: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    y0,
    tol: float = 1e-8,
    max_iters: int = 500,
) -> BfgsResult:
    """BFGS with Armijo backtracking line search.

    Stops when the gradient norm falls below tol * (1 + |f|), after
    ``max_iters`` updates, or as "stalled" when 60 backtracking halvings
    cannot produce sufficient decrease.  Non-finite trial values are
    treated as failed trials, so f may return inf to reject a region.
    The final value never exceeds f(y0).
    """
    y = as_point(y0, "y0")
    fy = float(f(y))
    if not np.isfinite(fy):
        raise EvaluationError("objective is non-finite at the initial point", point=y)
    g = np.asarray(grad(y), dtype=float)
    if g.shape != y.shape or not np.all(np.isfinite(g)):
        raise EvaluationError("gradient is non-finite at the initial point", point=y)
    n = y.size
    H = np.eye(n)
    status = "max_iters"
    it = 0
    while it < max_iters:
        if np.linalg.norm(g) <= tol * (1.0 + abs(fy)):
            status = "converged"
            break
        it += 1
        d = -H @ g
        slope = float(g @ d)
        if slope >= 0.0:
            # Curvature information went bad; restart from steepest descent.
            H = np.eye(n)
            d = -g
            slope = -float(g @ g)
        alpha = 1.0
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            y_new = y + alpha * d
            try:
                f_new = float(f(y_new))
            except MinimaxFitError:
                f_new = np.inf
            if np.isfinite(f_new) and f_new <= fy + _ARMIJO_C1 * alpha * slope:
                accepted = True
                break
            alpha *= _BACKTRACK
        if not accepted:
            status = "stalled"
            break
        g_new = np.asarray(grad(y_new), dtype=float)
        if not np.all(np.isfinite(g_new)):
            y, fy = y_new, f_new
            status = "stalled"
            break
        s = y_new - y
        yk = g_new - g
        sy = float(s @ yk)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(yk):
            rho = 1.0 / sy
            V = np.eye(n) - rho * np.outer(s, yk)
            H = V @ H @ V.T + rho * np.outer(s, s)
        y, fy, g = y_new, f_new, g_new
    return BfgsResult(y=y, fval=fy, iterations=it, status=status)


def _stage_objective(F: ResidualMap, p: int, scale: float):
    """Scaled stage objective sum (F_i/scale)**(2p) and its gradient."""

    def fval(y):
        try:
            u = F.residual(y) / scale
        except MinimaxFitError:
            return np.inf
        with np.errstate(over="ignore"):
            v = float(np.sum(u ** (2 * p)))
        return v if np.isfinite(v) else np.inf

    def gval(y):
        u = F.residual(y) / scale
        J = F.jacobian_at(y)
        with np.errstate(over="ignore"):
            wvec = (2.0 * p / scale) * u ** (2 * p - 1)
        return J.T @ wvec

    return fval, gval


def solve_pnorm_sequence(
    F: ResidualMap, y0, sched: PnormSchedule = PnormSchedule()
) -> PnormResult:
    """Minimize the sup norm of F by the staged even-power surrogate.

    Each stage p minimizes sum_i F_i(y)**(2p), warm-started from the
    previous stage and reported on the sup-norm scale.  Stages stop early
    once successive reported sup norms differ by less than the schedule's
    stop_tol.  A stage whose rescaled objective is already non-finite at
    its start point is abandoned and the best earlier point is returned.
    """
    y = as_point(y0, "y0")
    if y.size != F.n:
        raise InvalidInputError(f"y0 has length {y.size}, expected {F.n}")
    best_y = y.copy()
    best_val = inf_norm(F.residual(y))
    trace: list[PnormStage] = []
    prev_val = None
    for p in sched.p_sequence:
        scale = max(1.0, inf_norm(F.residual(y)))
        fval, gval = _stage_objective(F, p, scale)
        if not np.isfinite(fval(y)):
            break
        res = bfgs_min(fval, gval, y, tol=1e-8, max_iters=sched.stage_max_iters)
        y = res.y
        val = inf_norm(F.residual(y))
        trace.append(PnormStage(p=p, objective=val, iterations=res.iterations, status=res.status))
        if val < best_val:
            best_y, best_val = y.copy(), val
        if prev_val is not None and abs(prev_val - val) < sched.stop_tol:
            break
        prev_val = val
    return PnormResult(y=best_y, objective=best_val, trace=trace)
