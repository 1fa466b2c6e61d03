"""Seeded benchmark suite over three separable curve-fitting models.

Each model is a linear combination of nonlinear basis functions of a
scalar sample point t:

    exp3      a1 + a2*exp(-alpha1*t) + a3*exp(-alpha2*t)
    gauss4    a1*exp(-alpha1*t) + three Gaussians a_j*exp(-w*(t-c)^2)
    lorentz6  quadratic background minus two Lorentzian doublets and one
              single Lorentzian peak (the minus signs live in the basis)

Instances are generated with zero optimal objective: parameters are drawn
from fixed ranges with a seeded generator and the data is the exact model
evaluation, so every solver can in principle drive the sup norm to zero.
All randomness flows from explicit seeds; runs are reproducible bit for
bit.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

import numpy as np

from .core import InvalidInputError, MinimaxFitError, SeparableProblem, as_point, inf_norm
from .separable import AltOptions, AltResult, solve_separable

ZERO_OPTIMUM_TOL = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    id: str
    n1: int
    n2: int
    t_range: tuple[float, float]
    linear_ranges: np.ndarray  # (n1, 2) sampling intervals for the truth
    nonlinear_ranges: np.ndarray  # (n2, 2)
    basis: Callable[[np.ndarray, np.ndarray], np.ndarray]  # (alpha, t) -> (m, n1)
    basis_jac: Callable[[np.ndarray, np.ndarray], np.ndarray]  # -> (m, n1, n2)


@dataclass(frozen=True)
class Instance:
    model: str
    m: int
    t: np.ndarray
    data: np.ndarray
    true_linear: np.ndarray
    true_nonlinear: np.ndarray
    seed: int

    def to_problem(self) -> SeparableProblem:
        spec = MODELS[self.model]
        t = self.t
        data = self.data

        def rhs_jac(y):
            return np.zeros((t.size, spec.n2))

        return SeparableProblem(
            n1=spec.n1,
            n2=spec.n2,
            m=self.m,
            basis=lambda y: spec.basis(y, t),
            rhs=lambda y: data.copy(),
            basis_jac=lambda y: spec.basis_jac(y, t),
            rhs_jac=rhs_jac,
        )


@dataclass(frozen=True)
class BenchRecord:
    model: str
    method: str
    run: int
    seed: int
    objective: float  # sup norm at the returned iterate; NaN on failure
    seconds: float
    iterations: int
    status: str


@dataclass(frozen=True)
class BenchSummary:
    model: str
    method: str
    runs: int
    failures: int
    avg_objective: float
    avg_seconds: float
    avg_iterations: float


# ---------------------------------------------------------------------------
# Model bases and their analytic derivatives.


def _exp3_basis(alpha, t):
    a1, a2 = alpha
    return np.column_stack([np.ones_like(t), np.exp(-a1 * t), np.exp(-a2 * t)])


def _exp3_basis_jac(alpha, t):
    a1, a2 = alpha
    J = np.zeros((t.size, 3, 2))
    J[:, 1, 0] = -t * np.exp(-a1 * t)
    J[:, 2, 1] = -t * np.exp(-a2 * t)
    return J


_GAUSS4_TERMS = ((1, 1, 2), (2, 3, 4), (3, 5, 6))  # (column, width index, center index)


def _gauss4_basis(alpha, t):
    cols = [np.exp(-alpha[0] * t)]
    for _, wi, ci in _GAUSS4_TERMS:
        d = t - alpha[ci]
        cols.append(np.exp(-alpha[wi] * d * d))
    return np.column_stack(cols)


def _gauss4_basis_jac(alpha, t):
    J = np.zeros((t.size, 4, 7))
    J[:, 0, 0] = -t * np.exp(-alpha[0] * t)
    for col, wi, ci in _GAUSS4_TERMS:
        d = t - alpha[ci]
        e = np.exp(-alpha[wi] * d * d)
        J[:, col, wi] = -d * d * e
        J[:, col, ci] = 2.0 * alpha[wi] * d * e
    return J


def _lorentz(c, w, t):
    u = (c - t) / w
    return 1.0 / (1.0 + u * u)


def _lorentz_dc(c, w, t):
    u = (c - t) / w
    return -2.0 * u / (w * (1.0 + u * u) ** 2)


def _lorentz_dw(c, w, t):
    u = (c - t) / w
    return 2.0 * u * u / (w * (1.0 + u * u) ** 2)


_LORENTZ6_DOUBLETS = ((3, 0, 1, 2), (4, 3, 4, 5))  # (column, center, splitting, width)


def _lorentz6_check(alpha):
    if alpha[2] == 0.0 or alpha[5] == 0.0 or alpha[7] == 0.0:
        raise InvalidInputError("lorentz6 width parameters must be nonzero")


def _lorentz6_basis(alpha, t):
    _lorentz6_check(alpha)
    cols = [np.ones_like(t), t, t * t]
    for _, ci, si, wi in _LORENTZ6_DOUBLETS:
        c, s, w = alpha[ci], alpha[si], alpha[wi]
        cols.append(-(_lorentz(c + 0.5 * s, w, t) + _lorentz(c - 0.5 * s, w, t)))
    cols.append(-_lorentz(alpha[6], alpha[7], t))
    return np.column_stack(cols)


def _lorentz6_basis_jac(alpha, t):
    _lorentz6_check(alpha)
    J = np.zeros((t.size, 6, 8))
    for col, ci, si, wi in _LORENTZ6_DOUBLETS:
        c, s, w = alpha[ci], alpha[si], alpha[wi]
        for half in (0.5, -0.5):
            cc = c + half * s
            J[:, col, ci] -= _lorentz_dc(cc, w, t)
            J[:, col, si] -= half * _lorentz_dc(cc, w, t)
            J[:, col, wi] -= _lorentz_dw(cc, w, t)
    J[:, 5, 6] = -_lorentz_dc(alpha[6], alpha[7], t)
    J[:, 5, 7] = -_lorentz_dw(alpha[6], alpha[7], t)
    return J


def _ranges(pairs) -> np.ndarray:
    return np.array(pairs, dtype=float)


MODELS: dict[str, ModelSpec] = {
    "exp3": ModelSpec(
        id="exp3",
        n1=3,
        n2=2,
        t_range=(0.0, 4.0),
        linear_ranges=_ranges([(-5, 5)] * 3),
        nonlinear_ranges=_ranges([(0.5, 5)] * 2),
        basis=_exp3_basis,
        basis_jac=_exp3_basis_jac,
    ),
    "gauss4": ModelSpec(
        id="gauss4",
        n1=4,
        n2=7,
        t_range=(0.0, 4.0),
        linear_ranges=_ranges([(1, 5)] * 4),
        nonlinear_ranges=_ranges(
            [(0.2, 2), (1, 10), (0.5, 3.5), (1, 10), (0.5, 3.5), (1, 10), (0.5, 3.5)]
        ),
        basis=_gauss4_basis,
        basis_jac=_gauss4_basis_jac,
    ),
    "lorentz6": ModelSpec(
        id="lorentz6",
        n1=6,
        n2=8,
        t_range=(0.0, 10.0),
        linear_ranges=_ranges([(-1, 1)] * 3 + [(1, 5)] * 3),
        nonlinear_ranges=_ranges(
            [(2, 8), (0.5, 2), (0.3, 1.5), (2, 8), (0.5, 2), (0.3, 1.5), (2, 8), (0.3, 1.5)]
        ),
        basis=_lorentz6_basis,
        basis_jac=_lorentz6_basis_jac,
    ),
}


def eval_model(spec: ModelSpec, a, alpha, t):
    """Model value sum_j a_j * phi_j(alpha, t) at scalar or vector t."""
    av = as_point(a, "a")
    alphav = as_point(alpha, "alpha")
    if av.size != spec.n1:
        raise InvalidInputError(f"a has length {av.size}, expected {spec.n1}")
    if alphav.size != spec.n2:
        raise InvalidInputError(f"alpha has length {alphav.size}, expected {spec.n2}")
    tv = np.atleast_1d(np.asarray(t, dtype=float))
    out = spec.basis(alphav, tv) @ av
    return float(out[0]) if np.isscalar(t) or np.ndim(t) == 0 else out


def generate_instance(spec: ModelSpec, m: int, seed: int) -> Instance:
    """Zero-optimum instance: data is the exact model at sampled truth.

    Sample points are equispaced over the model's t range; true parameters
    come from a generator seeded only by ``seed``, so identical seeds give
    bitwise-identical instances.
    """
    if m < spec.n1 + spec.n2 + 1:
        raise InvalidInputError(f"m must be at least n1 + n2 + 1 = {spec.n1 + spec.n2 + 1}")
    rng = np.random.default_rng([int(seed), 0])
    t = np.linspace(spec.t_range[0], spec.t_range[1], m)
    a = rng.uniform(spec.linear_ranges[:, 0], spec.linear_ranges[:, 1])
    alpha = rng.uniform(spec.nonlinear_ranges[:, 0], spec.nonlinear_ranges[:, 1])
    data = spec.basis(alpha, t) @ a
    inst = Instance(
        model=spec.id,
        m=m,
        t=t,
        data=data,
        true_linear=a,
        true_nonlinear=alpha,
        seed=int(seed),
    )
    verify_zero_optimum(inst)
    return inst


def verify_zero_optimum(inst: Instance) -> float:
    """Check the residual vanishes at the generating truth; returns it."""
    r = inst.to_problem().residual(inst.true_linear, inst.true_nonlinear)
    value = inf_norm(r)
    if value > ZERO_OPTIMUM_TOL:
        raise MinimaxFitError(
            f"instance {inst.model}/seed {inst.seed} is not zero-optimum "
            f"(residual {value:g} at truth)"
        )
    return value


def perturbed_start(inst: Instance) -> np.ndarray:
    """Starting nonlinear parameters: truth plus U[-0.2, 0.2] of range width.

    Drawn from a generator keyed off the instance seed (distinct stream
    from generation), so solve runs are reproducible from the file alone.
    """
    spec = MODELS[inst.model]
    rng = np.random.default_rng([int(inst.seed), 1])
    width = spec.nonlinear_ranges[:, 1] - spec.nonlinear_ranges[:, 0]
    return inst.true_nonlinear + rng.uniform(-0.2, 0.2, size=spec.n2) * width


def restart_sampler(
    spec: ModelSpec, seed: int, local_width: float = 0.3
) -> Callable[[np.ndarray], np.ndarray]:
    """Deterministic stream of exploration starts for the solver.

    Alternates between jitter around the current iterate (scaled by the
    model's sampling ranges) and box-wide draws; the local draws matter
    most because benchmark starts sit within a fraction of the box of the
    generating truth.
    """
    rng = np.random.default_rng([int(seed), 2])
    lo = spec.nonlinear_ranges[:, 0]
    hi = spec.nonlinear_ranges[:, 1]
    width = hi - lo
    state = {"count": 0}

    def sample(y_current) -> np.ndarray:
        state["count"] += 1
        if state["count"] % 2 == 1:
            return y_current + rng.uniform(-local_width, local_width, size=spec.n2) * width
        return rng.uniform(lo, hi)

    return sample


def _single_run(
    model_id: str, m: int, seed: int, run_idx: int, method: str, options: AltOptions
) -> BenchRecord:
    spec = MODELS[model_id]
    inst = generate_instance(spec, m, seed)
    y0 = perturbed_start(inst)
    opts = replace(
        options,
        subproblem_method=method,
        restart_sampler=restart_sampler(spec, seed),
    )
    t0 = time.perf_counter()
    try:
        res: AltResult = solve_separable(inst.to_problem(), None, y0, opts)
        seconds = time.perf_counter() - t0
        failed = res.status == "aborted"
        return BenchRecord(
            model=model_id,
            method=method,
            run=run_idx,
            seed=seed,
            objective=float("nan") if failed else float(res.objective),
            seconds=seconds,
            iterations=res.outer_iterations,
            status=res.status,
        )
    except MinimaxFitError:
        seconds = time.perf_counter() - t0
        return BenchRecord(
            model=model_id,
            method=method,
            run=run_idx,
            seed=seed,
            objective=float("nan"),
            seconds=seconds,
            iterations=0,
            status="error",
        )


def _single_run_star(args) -> BenchRecord:
    return _single_run(*args)


def is_failure(rec: BenchRecord) -> bool:
    return rec.status in ("aborted", "error") or not np.isfinite(rec.objective)


def summarize(records: Iterable[BenchRecord]) -> list[BenchSummary]:
    """Per (model, method) averages over successful runs, failures counted."""
    groups: dict[tuple[str, str], list[BenchRecord]] = {}
    for rec in records:
        groups.setdefault((rec.model, rec.method), []).append(rec)
    out = []
    for (model, method), recs in groups.items():
        good = [r for r in recs if not is_failure(r)]
        out.append(
            BenchSummary(
                model=model,
                method=method,
                runs=len(recs),
                failures=len(recs) - len(good),
                avg_objective=float(np.mean([r.objective for r in good])) if good else float("nan"),
                avg_seconds=float(np.mean([r.seconds for r in good])) if good else float("nan"),
                avg_iterations=float(np.mean([r.iterations for r in good])) if good else float("nan"),
            )
        )
    return out


def run_benchmark(
    spec: ModelSpec,
    runs: int,
    m: int,
    methods: tuple[str, ...] = ("dual", "pnorm"),
    seed_base: int = 100,
    options: Optional[AltOptions] = None,
    parallel: bool = False,
) -> tuple[list[BenchRecord], list[BenchSummary]]:
    """Run ``runs`` seeded instances of one model with each method.

    Run r uses seed seed_base + r for both instance generation and the
    perturbed start.  Sequential execution keeps timings comparable;
    ``parallel`` fans runs out over processes (results still merge in run
    order, but wall times then overlap).
    """
    if runs < 1:
        raise InvalidInputError("runs must be >= 1")
    if not methods:
        raise InvalidInputError("need at least one method")
    for meth in methods:
        if meth not in ("dual", "pnorm"):
            raise InvalidInputError(f"unknown method '{meth}'")
    base = options if options is not None else AltOptions()
    # Each run builds its own sampler from its seed; a caller-supplied one
    # would be wrong here and may not survive pickling under parallel.
    base = replace(base, restart_sampler=None)
    jobs = [
        (spec.id, m, seed_base + r, r, meth, base)
        for r in range(runs)
        for meth in methods
    ]
    if parallel:
        with ProcessPoolExecutor() as pool:
            records = list(pool.map(_single_run_star, jobs))
    else:
        records = [_single_run(*job) for job in jobs]
    return records, summarize(records)
