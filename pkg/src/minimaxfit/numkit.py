"""Dense linear algebra and scalar search utilities used by the solvers.

Three workhorses live here: a least-squares solve backed by column-pivoted
QR, the Euclidean projection onto the unit simplex, and a one-dimensional
grid-plus-golden-section minimizer for line searches.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg

from .core import InvalidInputError, MinimaxFitError, as_point

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class LineSearchError(MinimaxFitError):
    """The scalar search could not find a single finite value."""


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a finite 2-D float array."""
    try:
        M = np.array(A, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"{name}: {exc}") from exc
    if M.ndim != 2 or M.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D real matrix")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return M


def lstsq(A, b) -> np.ndarray:
    """Least-squares solution of A x = b for a tall (m >= n) system.

    Uses a column-pivoted orthogonal factorization, so rank-deficient
    systems still return a minimizer rather than failing.
    """
    M = as_matrix(A, "A")
    v = as_point(b, "b")
    m, n = M.shape
    if m < n:
        raise InvalidInputError(f"need m >= n, got shape {m}x{n}")
    if v.size != m:
        raise InvalidInputError(f"rhs has length {v.size}, expected {m}")
    x, _, _, _ = scipy.linalg.lstsq(M, v, lapack_driver="gelsy")
    return x


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto the unit simplex {x : x >= 0, sum x = 1}.

    Sort-and-threshold algorithm: with entries sorted in decreasing order,
    find the largest j such that u_j - (cumsum_j - 1)/j > 0, then shift by
    that threshold and clip at zero.
    """
    w = as_point(v, "v")
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, w.size + 1)
    rho = int(np.nonzero(u - (css - 1.0) / j > 0)[0][-1])
    tau = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(w - tau, 0.0)


def _safe_eval(phi: Callable[[float], float], t: float) -> float:
    """Evaluate phi(t), mapping evaluation failures and non-finite values to +inf."""
    try:
        v = float(phi(t))
    except MinimaxFitError:
        return np.inf
    return v if np.isfinite(v) else np.inf


def _golden_section(phi, a, b, tol, max_iters=200):
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = _safe_eval(phi, c)
    fd = _safe_eval(phi, d)
    best_t, best_v = (c, fc) if fc <= fd else (d, fd)
    it = 0
    while (b - a) > tol and it < max_iters:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = _safe_eval(phi, c)
            if fc < best_v:
                best_t, best_v = c, fc
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = _safe_eval(phi, d)
            if fd < best_v:
                best_t, best_v = d, fd
        it += 1
    return float(best_t), float(best_v)


def min_scalar(
    phi: Callable[[float], float],
    lo: float,
    hi: float,
    grid_points: int = 76,
    refine_tol: float = 1e-6,
) -> tuple[float, float]:
    """Minimize a scalar function by grid scan plus golden-section refinement.

    The grid always contains lo and hi, plus the points 0 and 1 whenever
    they fall inside [lo, hi].  The best grid point is refined between its
    neighbours down to an interval of width ``refine_tol``.  The returned
    value is never worse than the best grid value; individual non-finite
    evaluations are skipped, and only an all-non-finite grid is an error.
    """
    if not lo < hi:
        raise InvalidInputError("need lo < hi")
    if grid_points < 2:
        raise InvalidInputError("need at least 2 grid points")
    grid = np.linspace(lo, hi, int(grid_points))
    forced = [t for t in (0.0, 1.0) if lo <= t <= hi]
    if forced:
        grid = np.unique(np.concatenate([grid, forced]))
    vals = np.array([_safe_eval(phi, t) for t in grid])
    if not np.any(np.isfinite(vals)):
        raise LineSearchError("objective is non-finite at every grid point")
    i = int(np.argmin(vals))
    best_t, best_v = float(grid[i]), float(vals[i])
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, grid.size - 1)])
    t, v = _golden_section(phi, a, b, refine_tol)
    if v < best_v:
        best_t, best_v = t, v
    return best_t, best_v
