"""Projected supergradient ascent on the weighted-least-squares dual.

The sup-norm problem min_y ||F(y)||_inf has the concave dual

    max { q(lambda) : lambda >= 0, sum lambda = 1 },
    q(lambda) = min_y sum_i lambda_i F_i(y)^2,

whose value lower-bounds the squared primal optimum, with equality for
linear residuals and for residuals of uniform sign and curvature.  Each
ascent step solves the inner weighted least-squares problem (warm-started
from the previous minimizer), reads off the supergradient g_i = F_i(y)^2,
and projects the updated multipliers back onto the simplex.  The best
inner minimizer doubles as the primal candidate, so one run yields both a
certified-in-the-convex-case lower bound and a feasible upper bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import EvaluationError, InvalidInputError, ResidualMap, as_point, inf_norm
from .nlls import NllsOptions, solve_weighted_nlls
from .numkit import project_simplex

_STABLE_ITERS = 3  # consecutive quiet iterations required to stop


@dataclass(frozen=True)
class DualOptions:
    max_outer_iters: int = 200
    stop_tol: float = 1e-4
    step_rule: str = "polyak"  # "polyak" (with diminishing fallback) | "diminishing"
    lambda0: Optional[np.ndarray] = None
    inner: NllsOptions = NllsOptions()

    def __post_init__(self):
        if self.max_outer_iters < 1:
            raise InvalidInputError("max_outer_iters must be >= 1")
        if self.stop_tol <= 0:
            raise InvalidInputError("stop_tol must be positive")
        if self.step_rule not in ("polyak", "diminishing"):
            raise InvalidInputError("step_rule must be 'polyak' or 'diminishing'")


@dataclass(frozen=True)
class DualTraceEntry:
    dual_value: float
    primal_value: float
    primal_best: float
    step_size: float
    inner_status: str


@dataclass(frozen=True)
class DualResult:
    lam: np.ndarray  # multipliers attaining the best dual value
    y_best: np.ndarray
    primal_best: float  # best sup-norm value seen (upper bound)
    dual_best: float  # best inner objective seen (squared scale)
    gap: float  # primal_best**2 - dual_best
    y_final: np.ndarray = None  # last inner minimizer (reweighted fit)
    trace: list[DualTraceEntry] = field(default_factory=list)
    status: str = "max_iters"  # "converged" | "max_iters" | "aborted"

    @property
    def iterations(self) -> int:
        return len(self.trace)


@dataclass(frozen=True)
class DualityReport:
    lower_bound: float  # sup-norm scale
    upper_bound: float
    relative_gap: float
    heuristic: bool  # True unless every inner solve converged


def solve_dual(F: ResidualMap, y0, opts: DualOptions = DualOptions()) -> DualResult:
    """Maximize the simplex-weighted least-squares dual of min ||F(y)||_inf.

    Per iteration: inner weighted solve warm-started at the previous
    minimizer, dual value q = sum lam_i F_i(y)^2, supergradient
    g_i = F_i(y)^2, Polyak step (primal_best^2 - q)/||g||^2 when positive
    with a diminishing fallback, then simplex projection.  Stops after
    three consecutive iterations whose dual and primal values both move
    less than stop_tol, mirroring the benchmark stopping rule.

    An inner evaluation failure aborts with the partial trace; the first
    evaluation happens at y0, so a result always carries finite values.
    """
    y = as_point(y0, "y0")
    if y.size != F.n:
        raise InvalidInputError(f"y0 has length {y.size}, expected {F.n}")
    if opts.lambda0 is not None:
        lam = as_point(opts.lambda0, "lambda0")
        if lam.size != F.m:
            raise InvalidInputError(f"lambda0 has length {lam.size}, expected {F.m}")
        if np.any(lam < 0) or abs(float(np.sum(lam)) - 1.0) > 1e-10:
            raise InvalidInputError("lambda0 must lie on the unit simplex")
    else:
        lam = np.full(F.m, 1.0 / F.m)

    r0 = F.residual(y)
    primal_best = inf_norm(r0)
    y_best = y.copy()
    y_final = y.copy()
    dual_best = 0.0  # trivial lower bound; every dual value is >= 0
    lam_best = lam.copy()
    trace: list[DualTraceEntry] = []
    status = "max_iters"
    quiet = 0
    prev_q = prev_p = None
    for k in range(opts.max_outer_iters):
        try:
            inner = solve_weighted_nlls(F, lam, y, opts.inner)
            y = inner.y
            r = F.residual(y)
        except EvaluationError:
            status = "aborted"
            break
        y_final = y.copy()
        with np.errstate(over="ignore"):
            sq = r * r
            q = float(lam @ sq)
        p = float(np.max(np.abs(r)))
        if p < primal_best:
            primal_best = p
            y_best = y.copy()
        if np.isfinite(q) and q > dual_best:
            dual_best = q
            lam_best = lam.copy()
        with np.errstate(over="ignore"):
            gnorm2 = float(sq @ sq)
        if not np.all(np.isfinite(sq)):
            step = 0.0  # squared residuals overflowed; hold the multipliers
        elif opts.step_rule == "polyak" and primal_best**2 - q > 0 and gnorm2 > 0:
            step = (primal_best**2 - q) / gnorm2
        else:
            step = 1.0 / ((k + 1) * max(1.0, np.sqrt(gnorm2)))
        if step > 0.0:
            lam = project_simplex(lam + step * sq)
        trace.append(
            DualTraceEntry(
                dual_value=q,
                primal_value=p,
                primal_best=primal_best,
                step_size=step,
                inner_status=inner.status,
            )
        )
        if prev_q is not None and abs(q - prev_q) < opts.stop_tol and abs(p - prev_p) < opts.stop_tol:
            quiet += 1
        else:
            quiet = 0
        prev_q, prev_p = q, p
        if quiet >= _STABLE_ITERS:
            status = "converged"
            break
    return DualResult(
        lam=lam_best,
        y_best=y_best,
        primal_best=primal_best,
        dual_best=dual_best,
        gap=primal_best**2 - dual_best,
        y_final=y_final,
        trace=trace,
        status=status,
    )


def duality_report(res: DualResult) -> DualityReport:
    """Bounds on the sup-norm optimum implied by a dual run.

    The lower bound sqrt(max(dual_best, 0)) is rigorous only when every
    inner problem was solved globally; a merely locally converged inner
    solve over-estimates the true inner minimum, so the report flags the
    bound as heuristic unless all inner solves at least reported
    convergence.
    """
    lower = float(np.sqrt(max(res.dual_best, 0.0)))
    upper = float(res.primal_best)
    rel_gap = float((upper**2 - res.dual_best) / (1.0 + upper**2))
    heuristic = not all(t.inner_status == "converged" for t in res.trace)
    return DualityReport(
        lower_bound=lower, upper_bound=upper, relative_gap=rel_gap, heuristic=heuristic
    )
