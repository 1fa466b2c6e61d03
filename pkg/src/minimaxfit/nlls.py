"""Levenberg-Marquardt solver for weighted nonlinear least squares.

Minimizes sum_i w_i * F_i(y)**2 for a ResidualMap F and nonnegative
weights w.  This is the inner engine of the dual solver, where the weights
are simplex multipliers, so zero weights are routine and their rows are
dropped from the linearized system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import EvaluationError, InvalidInputError, ResidualMap, as_point
from .numkit import as_matrix, lstsq


@dataclass(frozen=True)
class NllsOptions:
    max_iters: int = 200
    grad_tol: float = 1e-8
    step_tol: float = 1e-10
    initial_damping: float = 1e-3
    damping_up: float = 2.0
    damping_down: float = 1.0 / 3.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be >= 1")
        if self.grad_tol <= 0 or self.step_tol <= 0:
            raise InvalidInputError("tolerances must be positive")
        if self.initial_damping < 0:
            raise InvalidInputError("initial damping must be >= 0")
        if not self.damping_up > 1.0 > self.damping_down > 0.0:
            raise InvalidInputError("need damping_up > 1 > damping_down > 0")


@dataclass(frozen=True)
class NllsResult:
    y: np.ndarray
    objective: float
    iterations: int
    status: str  # "converged" | "max_iters" | "stalled"


def gauss_newton_step(J, r, damping: float) -> np.ndarray:
    """Damped step: argmin_s || [J; sqrt(damping) I] s + [r; 0] ||_2.

    With damping 0 and full-rank J this is the plain Gauss-Newton step;
    positive damping regularizes toward shorter steps.
    """
    Jm = as_matrix(J, "J")
    rv = as_point(r, "r")
    if damping < 0:
        raise InvalidInputError("damping must be >= 0")
    m, n = Jm.shape
    if rv.size != m:
        raise InvalidInputError(f"residual has length {rv.size}, expected {m}")
    A = np.vstack([Jm, np.sqrt(damping) * np.eye(n)])
    b = np.concatenate([-rv, np.zeros(n)])
    return lstsq(A, b)


def solve_weighted_nlls(
    F: ResidualMap, weights, y0, opts: NllsOptions = NllsOptions()
) -> NllsResult:
    """Levenberg-Marquardt on the residuals sqrt(w_i) * F_i(y).

    A step is accepted when the weighted objective decreases, shrinking the
    damping by ``damping_down``; otherwise it is rejected and the damping
    grows by ``damping_up``, so a singular linearization only ever slows
    progress.  Terminates on a small gradient (relative to 1 + objective),
    a step below ``step_tol`` (reported as stalled), or ``max_iters``.
    """
    w = as_point(weights, "weights")
    if w.size != F.m:
        raise InvalidInputError(f"weights have length {w.size}, expected {F.m}")
    if np.any(w < 0):
        raise InvalidInputError("weights must be nonnegative")
    y = as_point(y0, "y0")
    if y.size != F.n:
        raise InvalidInputError(f"y0 has length {y.size}, expected {F.n}")

    active = w > 0.0
    sw = np.sqrt(w[active])

    r = F.residual(y)
    J = F.jacobian_at(y)
    obj = float(np.dot(w, r * r))
    damping = opts.initial_damping
    up = opts.damping_up
    status = "max_iters"
    it = 0
    while it < opts.max_iters:
        grad = J.T @ (w * r)
        if np.linalg.norm(grad) <= opts.grad_tol * (1.0 + obj):
            status = "converged"
            break
        it += 1
        step = gauss_newton_step(sw[:, None] * J[active], sw * r[active], damping)
        rejected = not np.all(np.isfinite(step))
        if not rejected:
            if np.linalg.norm(step) <= opts.step_tol * (1.0 + np.linalg.norm(y)):
                status = "stalled"
                break
            try:
                y_new = y + step
                r_new = F.residual(y_new)
                with np.errstate(over="ignore"):
                    obj_new = float(np.dot(w, r_new * r_new))
            except EvaluationError:
                rejected = True
        if not rejected and obj_new < obj:
            y, r, obj = y_new, r_new, obj_new
            J = F.jacobian_at(y)
            damping *= opts.damping_down
            up = opts.damping_up
        else:
            # Escalate on consecutive rejections so a tiny damping recovers
            # in a handful of steps instead of one doubling at a time.
            damping = max(damping, np.finfo(float).tiny) * up
            up *= opts.damping_up
    return NllsResult(y=y, objective=obj, iterations=it, status=status)
