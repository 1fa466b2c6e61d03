"""Command-line front end: instance generation, single solves, benchmarks.

Exit codes are a stable contract: 0 success, 2 usage or configuration
error, 3 solver failure, 4 I/O or file-format error.

File formats owned here:
  instance files   JSON with fields model, m, n1, n2, t[], data[],
                   true_linear[], true_nonlinear[], seed, format_version
  result files     JSON with the echoed configuration, final iterate,
                   objective, timing, and the full per-iteration trace
  records files    CSV with header
                   model,method,run,seed,objective,seconds,iterations,status
                   one row per run plus one summary row per method
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import asdict, replace
from typing import Optional

import numpy as np

from .bench import (
    MODELS,
    BenchRecord,
    BenchSummary,
    Instance,
    generate_instance,
    perturbed_start,
    restart_sampler,
    run_benchmark,
    verify_zero_optimum,
)
from .core import InvalidInputError, MinimaxFitError
from .dual import DualOptions
from .separable import AltOptions, solve_separable
from .smoothmin import PnormSchedule

FORMAT_VERSION = 1


class FileFormatError(MinimaxFitError):
    """An instance or result file failed to parse or validate."""


# ---------------------------------------------------------------------------
# Instance files.


def instance_to_dict(inst: Instance) -> dict:
    spec = MODELS[inst.model]
    return {
        "format_version": FORMAT_VERSION,
        "model": inst.model,
        "m": inst.m,
        "n1": spec.n1,
        "n2": spec.n2,
        "seed": inst.seed,
        "t": [float(v) for v in inst.t],
        "data": [float(v) for v in inst.data],
        "true_linear": [float(v) for v in inst.true_linear],
        "true_nonlinear": [float(v) for v in inst.true_nonlinear],
    }


def save_instance(inst: Instance, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise FileFormatError(f"{path}: missing field '{key}'")
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise FileFormatError(f"{path}: field '{key}' has wrong type")
    return value


def _float_list(doc: dict, key: str, length: int, path: str) -> np.ndarray:
    raw = _require(doc, key, list, path)
    if len(raw) != length:
        raise FileFormatError(f"{path}: field '{key}' must have length {length}")
    try:
        return np.array([float(v) for v in raw])
    except (TypeError, ValueError):
        raise FileFormatError(f"{path}: field '{key}' must be an array of numbers")


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(
                f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"
            ) from exc
    if not isinstance(doc, dict):
        raise FileFormatError(f"{path}: top level must be an object")
    version = _require(doc, "format_version", int, path)
    if version != FORMAT_VERSION:
        raise FileFormatError(f"{path}: field 'format_version' must be {FORMAT_VERSION}")
    model = _require(doc, "model", str, path)
    if model not in MODELS:
        raise FileFormatError(f"{path}: field 'model' names unknown model '{model}'")
    spec = MODELS[model]
    m = _require(doc, "m", int, path)
    if m < 1:
        raise FileFormatError(f"{path}: field 'm' must be positive")
    for key, expect in (("n1", spec.n1), ("n2", spec.n2)):
        if _require(doc, key, int, path) != expect:
            raise FileFormatError(f"{path}: field '{key}' must be {expect} for {model}")
    seed = _require(doc, "seed", int, path)
    return Instance(
        model=model,
        m=m,
        t=_float_list(doc, "t", m, path),
        data=_float_list(doc, "data", m, path),
        true_linear=_float_list(doc, "true_linear", spec.n1, path),
        true_nonlinear=_float_list(doc, "true_nonlinear", spec.n2, path),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Result and records files.


def save_result(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_result(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(
                f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}"
            ) from exc


CSV_HEADER = ["model", "method", "run", "seed", "objective", "seconds", "iterations", "status"]


def write_records_csv(records: list[BenchRecord], summaries: list[BenchSummary], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for rec in records:
            writer.writerow(
                [rec.model, rec.method, rec.run, rec.seed, repr(rec.objective),
                 repr(rec.seconds), rec.iterations, rec.status]
            )
        for s in summaries:
            writer.writerow(
                [s.model, s.method, "avg", "", repr(s.avg_objective),
                 repr(s.avg_seconds), repr(s.avg_iterations), "summary"]
            )


def read_records_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != CSV_HEADER:
        raise FileFormatError(f"{path}: missing or wrong CSV header")
    return [dict(zip(CSV_HEADER, row)) for row in rows[1:]]


# ---------------------------------------------------------------------------
# Option plumbing.


def _alt_options(args) -> AltOptions:
    dual = DualOptions()
    pnorm = PnormSchedule()
    return AltOptions(
        max_outer=args.max_iter,
        stop_tol=args.tol,
        subproblem_method=getattr(args, "method", "dual"),
        dual=dual,
        pnorm=pnorm,
    )


def _options_metadata(opts: AltOptions, method_or_methods) -> dict:
    meta = {
        "method": method_or_methods,
        "stop_tol": opts.stop_tol,
        "max_outer": opts.max_outer,
        "line_search": {
            "lo": opts.ls_lo,
            "hi": opts.ls_hi,
            "grid_points": opts.ls_grid_points,
            "refine_tol": opts.ls_refine_tol,
        },
        "dual": {
            "max_outer_iters": opts.dual.max_outer_iters,
            "stop_tol": opts.dual.stop_tol,
            "step_rule": opts.dual.step_rule,
            "inner": asdict(opts.dual.inner),
        },
        "pnorm": {
            "p_sequence": list(opts.pnorm.p_sequence),
            "stage_max_iters": opts.pnorm.stage_max_iters,
            "stop_tol": opts.pnorm.stop_tol,
        },
    }
    return meta


def _sampling_metadata(model: str) -> dict:
    spec = MODELS[model]
    return {
        "t_range": list(spec.t_range),
        "linear_ranges": [list(r) for r in spec.linear_ranges],
        "nonlinear_ranges": [list(r) for r in spec.nonlinear_ranges],
        "start_rule": "true nonlinear parameters + U[-0.2, 0.2] * range width; "
        "linear start from the exact fixed-y linear solve",
    }


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_gen(args) -> int:
    spec = MODELS[args.model]
    inst = generate_instance(spec, args.m, args.seed)
    residual_at_truth = verify_zero_optimum(inst)
    save_instance(inst, args.out)
    print(f"wrote {args.out}")
    print(f"zero optimum verified: max |residual at truth| = {residual_at_truth:g}")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.in_path)
    opts = replace(
        _alt_options(args),
        restart_sampler=restart_sampler(MODELS[inst.model], inst.seed),
    )
    y0 = perturbed_start(inst)
    t0 = time.perf_counter()
    res = solve_separable(inst.to_problem(), None, y0, opts,
                          progress=_progress_printer(args.verbose))
    seconds = time.perf_counter() - t0
    print(f"model      {inst.model} (m={inst.m}, seed={inst.seed})")
    print(f"method     {args.method}")
    print(f"objective  {res.objective:.6g}")
    print(f"iterations {res.outer_iterations}")
    print(f"seconds    {seconds:.3f}")
    print(f"status     {res.status}")
    if args.out:
        payload = {
            "format_version": FORMAT_VERSION,
            "instance": {"model": inst.model, "m": inst.m, "seed": inst.seed,
                         "path": args.in_path},
            "options": _options_metadata(opts, args.method),
            "sampling": _sampling_metadata(inst.model),
            "objective": res.objective,
            "iterations": res.outer_iterations,
            "seconds": seconds,
            "status": res.status,
            "x": [float(v) for v in res.x],
            "y": [float(v) for v in res.y],
            "trace": [
                {
                    "lp_objective": e.lp_objective,
                    "subproblem_objective": e.subproblem_objective,
                    "objective": e.objective,
                    "beta": e.beta,
                }
                for e in res.trace
            ],
        }
        save_result(payload, args.out)
        print(f"wrote {args.out}")
    return 0 if res.status != "aborted" else 3


def _progress_printer(verbose: bool):
    if not verbose:
        return None

    def printer(it, entry):
        print(
            f"  iter {it:3d}  lp {entry.lp_objective:.6g}  "
            f"sub {entry.subproblem_objective:.6g}  "
            f"obj {entry.objective:.6g}  beta {entry.beta:.4f}"
        )

    return printer


def _print_summary_table(model: str, m: int, runs: int, summaries: list[BenchSummary]) -> None:
    methods = [s.method for s in summaries]
    print(f"benchmark {model}  (m={m}, runs={runs})")
    header = "".join(f"{meth:>14}" for meth in methods)
    print(f"{'':24}{header}")
    rows = [
        ("average objective", [f"{s.avg_objective:.6f}" for s in summaries]),
        ("average seconds", [f"{s.avg_seconds:.3f}" for s in summaries]),
        ("failures", [str(s.failures) for s in summaries]),
    ]
    for label, cells in rows:
        print(f"{label:<24}" + "".join(f"{c:>14}" for c in cells))


def cmd_bench(args) -> int:
    methods = tuple(s.strip() for s in args.methods.split(",") if s.strip())
    for meth in methods:
        if meth not in ("dual", "pnorm"):
            raise InvalidInputError(f"unknown method '{meth}' (use dual and/or pnorm)")
    if not methods:
        raise InvalidInputError("no methods given")
    spec = MODELS[args.model]
    opts = AltOptions(max_outer=args.max_iter, stop_tol=args.tol)
    if args.parallel:
        print("note: parallel runs overlap; timings are not comparable")
    records, summaries = run_benchmark(
        spec,
        runs=args.runs,
        m=args.m,
        methods=methods,
        seed_base=args.seed_base,
        options=opts,
        parallel=args.parallel,
    )
    summaries = sorted(summaries, key=lambda s: methods.index(s.method))
    _print_summary_table(args.model, args.m, args.runs, summaries)
    if args.out:
        write_records_csv(records, summaries, args.out)
        meta = {
            "format_version": FORMAT_VERSION,
            "model": args.model,
            "m": args.m,
            "runs": args.runs,
            "seed_base": args.seed_base,
            "methods": list(methods),
            "parallel": bool(args.parallel),
            "options": _options_metadata(opts, list(methods)),
            "sampling": _sampling_metadata(args.model),
        }
        save_result(meta, args.out + ".meta.json")
        print(f"wrote {args.out} and {args.out}.meta.json")
    ok = all(
        any(rec.method == meth and rec.status not in ("aborted", "error") for rec in records)
        for meth in methods
    )
    return 0 if ok else 3


# ---------------------------------------------------------------------------
# Parser and entry point.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="minimaxfit",
        description="Sup-norm curve fitting: dual solver, alternating separable "
        "algorithm, even-power baseline, seeded benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a zero-optimum instance file")
    gen.add_argument("--model", required=True, choices=sorted(MODELS))
    gen.add_argument("--m", type=int, default=100)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen)

    solve = sub.add_parser("solve", help="solve one instance file")
    solve.add_argument("--in", dest="in_path", required=True)
    solve.add_argument("--method", choices=("dual", "pnorm"), default="dual")
    solve.add_argument("--tol", type=float, default=1e-4)
    solve.add_argument("--max-iter", type=int, default=50)
    solve.add_argument("--out", default=None)
    solve.add_argument("--verbose", action="store_true")
    solve.set_defaults(func=cmd_solve)

    bench = sub.add_parser("bench", help="run the seeded benchmark suite for one model")
    bench.add_argument("--model", required=True, choices=sorted(MODELS))
    bench.add_argument("--runs", type=int, default=10)
    bench.add_argument("--m", type=int, default=100)
    bench.add_argument("--methods", default="dual,pnorm")
    bench.add_argument("--tol", type=float, default=1e-4)
    bench.add_argument("--max-iter", type=int, default=50)
    bench.add_argument("--seed-base", dest="seed_base", type=int, default=100)
    bench.add_argument("--out", default=None)
    bench.add_argument("--parallel", action="store_true")
    bench.add_argument("--verbose", action="store_true")
    bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except MinimaxFitError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
