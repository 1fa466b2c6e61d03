"""Problem containers and the numerical primitives shared by every solver.

A ResidualMap wraps a nonlinear map F: R^n -> R^m together with an optional
analytic Jacobian; a SeparableProblem holds the special structure
A(y) x - b(y), which is linear in x for fixed y.  Both validate every
evaluation: residuals must come back as finite vectors of the declared
length, and anything non-finite raises EvaluationError carrying the point
that triggered it.  Nothing here is ever clamped or silently repaired.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

# Central-difference step scale, cbrt(machine epsilon).
FD_STEP_SCALE = float(np.finfo(float).eps) ** (1.0 / 3.0)


class MinimaxFitError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(MinimaxFitError, ValueError):
    """An argument failed validation (shape, finiteness, or range)."""


class EvaluationError(MinimaxFitError):
    """A residual or Jacobian evaluation failed or came back non-finite.

    The offending point is kept in ``point`` for diagnostics.
    """

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, dtype=float)


def as_point(x, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array (scalars become length 1)."""
    try:
        v = np.atleast_1d(np.array(x, dtype=float))
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: {exc}") from exc
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 1-D real vector")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return v


@dataclass(frozen=True)
class ResidualMap:
    """A map F: R^n -> R^m with an optional analytic Jacobian.

    ``fun`` must be pure: evaluating the same point twice returns the same
    vector.  ``jac``, when present, returns the m-by-n matrix of partial
    derivatives; otherwise solvers fall back to ``fd_jacobian``.
    """

    n: int
    m: int
    fun: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise InvalidInputError("ResidualMap needs n >= 1 and m >= 1")

    def residual(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size != self.n:
            raise InvalidInputError(f"point has length {y.size}, expected {self.n}")
        if not np.all(np.isfinite(y)):
            raise EvaluationError("evaluation requested at a non-finite point", point=y)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            r = np.array(self.fun(y), dtype=float).reshape(-1)
        if r.size != self.m:
            raise EvaluationError(
                f"residual has length {r.size}, expected {self.m}", point=y
            )
        if not np.all(np.isfinite(r)):
            raise EvaluationError("residual is non-finite", point=y)
        return r

    def jacobian_at(self, y) -> np.ndarray:
        if self.jac is None:
            return fd_jacobian(self, y)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size != self.n:
            raise InvalidInputError(f"point has length {y.size}, expected {self.n}")
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            J = np.array(self.jac(y), dtype=float)
        if J.shape != (self.m, self.n):
            raise EvaluationError(
                f"jacobian has shape {J.shape}, expected {(self.m, self.n)}", point=y
            )
        if not np.all(np.isfinite(J)):
            raise EvaluationError("jacobian is non-finite", point=y)
        return J


@dataclass(frozen=True)
class SeparableProblem:
    """Residual A(y) x - b(y) with x in R^n1 and y in R^n2.

    ``basis`` maps y to the m-by-n1 matrix A(y) and ``rhs`` maps y to the
    length-m vector b(y); both must be pure.  Analytic derivatives are
    optional: ``basis_jac`` returns dA/dy with shape (m, n1, n2) and
    ``rhs_jac`` returns db/dy with shape (m, n2).  ``rhs_jac`` may be
    omitted when b does not depend on y.
    """

    n1: int
    n2: int
    m: int
    basis: Callable[[np.ndarray], np.ndarray]
    rhs: Callable[[np.ndarray], np.ndarray]
    basis_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    rhs_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.m < 1 or self.n1 < 1 or self.n2 < 1:
            raise InvalidInputError("SeparableProblem needs m, n1, n2 >= 1")

    def _check_y(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size != self.n2:
            raise InvalidInputError(f"y has length {y.size}, expected {self.n2}")
        if not np.all(np.isfinite(y)):
            raise EvaluationError("evaluation requested at a non-finite point", point=y)
        return y

    def matrix(self, y) -> np.ndarray:
        y = self._check_y(y)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            A = np.array(self.basis(y), dtype=float)
        if A.shape != (self.m, self.n1):
            raise EvaluationError(
                f"basis matrix has shape {A.shape}, expected {(self.m, self.n1)}",
                point=y,
            )
        if not np.all(np.isfinite(A)):
            raise EvaluationError("basis matrix is non-finite", point=y)
        return A

    def data(self, y) -> np.ndarray:
        y = self._check_y(y)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            b = np.array(self.rhs(y), dtype=float).reshape(-1)
        if b.size != self.m:
            raise EvaluationError(
                f"rhs has length {b.size}, expected {self.m}", point=y
            )
        if not np.all(np.isfinite(b)):
            raise EvaluationError("rhs is non-finite", point=y)
        return b

    def basis_jac_at(self, y) -> np.ndarray:
        y = self._check_y(y)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            BJ = np.array(self.basis_jac(y), dtype=float)
        if BJ.shape != (self.m, self.n1, self.n2):
            raise EvaluationError(
                f"basis jacobian has shape {BJ.shape}, expected "
                f"{(self.m, self.n1, self.n2)}",
                point=y,
            )
        if not np.all(np.isfinite(BJ)):
            raise EvaluationError("basis jacobian is non-finite", point=y)
        return BJ

    def rhs_jac_at(self, y) -> np.ndarray:
        y = self._check_y(y)
        RJ = np.array(self.rhs_jac(y), dtype=float)
        if RJ.shape != (self.m, self.n2):
            raise EvaluationError(
                f"rhs jacobian has shape {RJ.shape}, expected {(self.m, self.n2)}",
                point=y,
            )
        if not np.all(np.isfinite(RJ)):
            raise EvaluationError("rhs jacobian is non-finite", point=y)
        return RJ

    def residual(self, x, y) -> np.ndarray:
        """A(y) x - b(y), validated entrywise."""
        x = as_point(x, "x")
        if x.size != self.n1:
            raise InvalidInputError(f"x has length {x.size}, expected {self.n1}")
        return self.matrix(y) @ x - self.data(y)


def inf_norm(r) -> float:
    """Maximum absolute entry of a nonempty finite vector.

    Returns exactly 0 only when every entry is 0.
    """
    v = as_point(r, "r")
    return float(np.max(np.abs(v)))


def weighted_sq(r, lam) -> float:
    """Weighted sum of squared residuals, sum_i lam_i * r_i**2.

    Weights must be nonnegative and match the residual length.
    """
    rv = as_point(r, "r")
    lv = as_point(lam, "lambda")
    if rv.size != lv.size:
        raise InvalidInputError(
            f"length mismatch: residual {rv.size}, weights {lv.size}"
        )
    if np.any(lv < 0):
        raise InvalidInputError("weights must be nonnegative")
    return float(np.dot(lv, rv * rv))


def pnorm_pow_objective(r, p: int) -> float:
    """Even-power surrogate sum_i r_i**(2p) of the squared sup norm.

    The outer 1/(2p) root is dropped; minimizers are unchanged because
    t -> t**(1/(2p)) is increasing on nonnegative values.
    """
    rv = as_point(r, "r")
    if int(p) != p or p < 1:
        raise InvalidInputError("p must be a positive integer")
    return float(np.sum(rv ** (2 * int(p))))


def fd_jacobian(F: ResidualMap, y) -> np.ndarray:
    """Central-difference Jacobian of a ResidualMap.

    Per-coordinate step cbrt(eps) * max(1, |y_j|), which balances
    truncation against rounding for double precision.
    """
    y = as_point(y, "y")
    if y.size != F.n:
        raise InvalidInputError(f"point has length {y.size}, expected {F.n}")
    J = np.empty((F.m, F.n))
    for j in range(F.n):
        h = FD_STEP_SCALE * max(1.0, abs(y[j]))
        yp = y.copy()
        yp[j] += h
        ym = y.copy()
        ym[j] -= h
        J[:, j] = (F.residual(yp) - F.residual(ym)) / (2.0 * h)
    return J
