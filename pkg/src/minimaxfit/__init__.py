"""Minimax (sup-norm) residual minimization.

Library surface: problem containers in ``core``, a dual ascent solver in
``dual``, the staged even-power baseline in ``smoothmin``, an exact linear
sup-norm solver in ``lp``, the alternating algorithm for separable
problems in ``separable``, and a seeded benchmark harness in ``bench``.
"""

from .core import (
    EvaluationError,
    InvalidInputError,
    MinimaxFitError,
    ResidualMap,
    SeparableProblem,
    as_point,
    fd_jacobian,
    inf_norm,
    pnorm_pow_objective,
    weighted_sq,
)
from .dual import DualOptions, DualResult, DualityReport, duality_report, solve_dual
from .lp import LpSolution, StandardLp, simplex_solve, solve_chebyshev
from .nlls import NllsOptions, NllsResult, gauss_newton_step, solve_weighted_nlls
from .numkit import lstsq, min_scalar, project_simplex
from .separable import (
    AltOptions,
    AltResult,
    joint_map,
    reduced_map,
    solve_separable,
)
from .smoothmin import BfgsResult, PnormResult, PnormSchedule, bfgs_min, solve_pnorm_sequence
from .bench import (
    MODELS,
    BenchRecord,
    BenchSummary,
    Instance,
    ModelSpec,
    eval_model,
    generate_instance,
    perturbed_start,
    run_benchmark,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "AltOptions",
    "AltResult",
    "BenchRecord",
    "BenchSummary",
    "BfgsResult",
    "DualOptions",
    "DualResult",
    "DualityReport",
    "EvaluationError",
    "Instance",
    "InvalidInputError",
    "LpSolution",
    "MODELS",
    "MinimaxFitError",
    "ModelSpec",
    "NllsOptions",
    "NllsResult",
    "PnormResult",
    "PnormSchedule",
    "ResidualMap",
    "SeparableProblem",
    "StandardLp",
    "as_point",
    "bfgs_min",
    "duality_report",
    "eval_model",
    "fd_jacobian",
    "gauss_newton_step",
    "generate_instance",
    "inf_norm",
    "joint_map",
    "lstsq",
    "min_scalar",
    "perturbed_start",
    "pnorm_pow_objective",
    "project_simplex",
    "reduced_map",
    "run_benchmark",
    "simplex_solve",
    "solve_chebyshev",
    "solve_dual",
    "solve_pnorm_sequence",
    "solve_separable",
    "solve_weighted_nlls",
    "summarize",
    "weighted_sq",
]
