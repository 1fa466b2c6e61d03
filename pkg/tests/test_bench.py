import numpy as np
import pytest

from minimaxfit.bench import (
    MODELS,
    BenchRecord,
    eval_model,
    generate_instance,
    perturbed_start,
    run_benchmark,
    summarize,
)
from minimaxfit.core import InvalidInputError, fd_jacobian, inf_norm
from minimaxfit.separable import reduced_map


class TestModelRegistry:
    def test_dimensions(self):
        assert (MODELS["exp3"].n1, MODELS["exp3"].n2) == (3, 2)
        assert (MODELS["gauss4"].n1, MODELS["gauss4"].n2) == (4, 7)
        assert (MODELS["lorentz6"].n1, MODELS["lorentz6"].n2) == (6, 8)


class TestEvalModel:
    def test_constant_term_only(self):
        spec = MODELS["exp3"]
        assert eval_model(spec, [1.0, 0.0, 0.0], [1.0, 2.0], 3.3) == pytest.approx(1.0)

    def test_zero_rate_is_constant(self):
        spec = MODELS["exp3"]
        for t in (0.0, 1.0, 4.0):
            assert eval_model(spec, [0.0, 1.0, 0.0], [0.0, 2.0], t) == pytest.approx(1.0)

    def test_gaussian_peak_value(self):
        spec = MODELS["gauss4"]
        alpha = np.array([0.3, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0])
        assert eval_model(spec, [0.0, 1.0, 0.0, 0.0], alpha, 2.0) == pytest.approx(1.0)

    def test_lorentz_zero_width_rejected(self):
        spec = MODELS["lorentz6"]
        alpha = np.array([5.0, 1.0, 0.0, 5.0, 1.0, 1.0, 5.0, 1.0])
        with pytest.raises(InvalidInputError):
            eval_model(spec, np.ones(6), alpha, 1.0)

    def test_vector_t(self):
        spec = MODELS["exp3"]
        t = np.array([0.0, 1.0])
        out = eval_model(spec, [1.0, 1.0, 0.0], [1.0, 2.0], t)
        assert out == pytest.approx([2.0, 1.0 + np.exp(-1.0)])


class TestGenerateInstance:
    def test_zero_residual_at_truth(self):
        for model in MODELS:
            inst = generate_instance(MODELS[model], 50, 7)
            r = inst.to_problem().residual(inst.true_linear, inst.true_nonlinear)
            assert inf_norm(r) == 0.0

    def test_same_seed_identical(self):
        a = generate_instance(MODELS["exp3"], 40, 9)
        b = generate_instance(MODELS["exp3"], 40, 9)
        assert np.array_equal(a.data, b.data)
        assert np.array_equal(a.true_linear, b.true_linear)
        assert np.array_equal(a.true_nonlinear, b.true_nonlinear)

    def test_different_seeds_differ(self):
        a = generate_instance(MODELS["exp3"], 40, 9)
        b = generate_instance(MODELS["exp3"], 40, 10)
        assert not np.array_equal(a.data, b.data)

    def test_m_lower_bound(self):
        with pytest.raises(InvalidInputError):
            generate_instance(MODELS["exp3"], 5, 1)

    def test_truth_within_ranges(self):
        for model in MODELS:
            spec = MODELS[model]
            inst = generate_instance(spec, 30, 123)
            assert np.all(inst.true_linear >= spec.linear_ranges[:, 0])
            assert np.all(inst.true_linear <= spec.linear_ranges[:, 1])
            assert np.all(inst.true_nonlinear >= spec.nonlinear_ranges[:, 0])
            assert np.all(inst.true_nonlinear <= spec.nonlinear_ranges[:, 1])


class TestPerturbedStart:
    def test_deterministic_and_bounded(self):
        inst = generate_instance(MODELS["gauss4"], 30, 21)
        y1 = perturbed_start(inst)
        y2 = perturbed_start(inst)
        assert np.array_equal(y1, y2)
        spec = MODELS["gauss4"]
        width = spec.nonlinear_ranges[:, 1] - spec.nonlinear_ranges[:, 0]
        assert np.all(np.abs(y1 - inst.true_nonlinear) <= 0.2 * width)

    def test_distinct_stream_from_generation(self):
        inst = generate_instance(MODELS["exp3"], 30, 22)
        assert not np.array_equal(perturbed_start(inst), inst.true_nonlinear)


class TestBasisDerivatives:
    def test_analytic_matches_finite_differences(self):
        rng = np.random.default_rng(90)
        for model in MODELS:
            spec = MODELS[model]
            inst = generate_instance(spec, 30, 91)
            P = inst.to_problem()
            for _ in range(20):
                x = rng.normal(size=spec.n1)
                rm = reduced_map(P, x)
                y = rng.uniform(
                    spec.nonlinear_ranges[:, 0], spec.nonlinear_ranges[:, 1]
                )
                J_an = rm.jacobian_at(y)
                J_fd = fd_jacobian(
                    type(rm)(n=rm.n, m=rm.m, fun=rm.fun, jac=None), y
                )
                denom = 1.0 + np.abs(J_an)
                assert np.max(np.abs(J_an - J_fd) / denom) <= 1e-5


class TestRunBenchmark:
    def test_shapes_single_run(self):
        records, summaries = run_benchmark(
            MODELS["exp3"], runs=1, m=30, methods=("dual", "pnorm"), seed_base=5
        )
        assert len(records) == 2
        assert len(summaries) == 2
        assert {r.method for r in records} == {"dual", "pnorm"}

    def test_summaries_recompute_from_records(self):
        records, summaries = run_benchmark(
            MODELS["exp3"], runs=3, m=30, methods=("dual",), seed_base=5
        )
        s = summaries[0]
        good = [r for r in records if np.isfinite(r.objective)]
        assert s.runs == 3
        assert s.avg_objective == float(np.mean([r.objective for r in good]))
        assert s.avg_seconds == float(np.mean([r.seconds for r in good]))

    def test_records_are_nonnegative(self):
        records, _ = run_benchmark(
            MODELS["exp3"], runs=2, m=30, methods=("dual",), seed_base=6
        )
        for r in records:
            assert r.objective >= 0.0
            assert r.seconds >= 0.0

    def test_determinism_of_objectives(self):
        r1, _ = run_benchmark(MODELS["exp3"], runs=2, m=30, methods=("dual",), seed_base=7)
        r2, _ = run_benchmark(MODELS["exp3"], runs=2, m=30, methods=("dual",), seed_base=7)
        assert [r.objective for r in r1] == [r.objective for r in r2]

    def test_parallel_matches_sequential_objectives(self):
        seq, _ = run_benchmark(MODELS["exp3"], runs=2, m=30, methods=("dual",), seed_base=8)
        par, _ = run_benchmark(
            MODELS["exp3"], runs=2, m=30, methods=("dual",), seed_base=8, parallel=True
        )
        assert [r.objective for r in seq] == [r.objective for r in par]
        assert [(r.model, r.method, r.run) for r in seq] == [
            (r.model, r.method, r.run) for r in par
        ]

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            run_benchmark(MODELS["exp3"], runs=0, m=30)
        with pytest.raises(InvalidInputError):
            run_benchmark(MODELS["exp3"], runs=1, m=30, methods=("bogus",))

    def test_summarize_counts_failures(self):
        records = [
            BenchRecord("exp3", "dual", 0, 1, 0.5, 1.0, 3, "converged"),
            BenchRecord("exp3", "dual", 1, 2, float("nan"), 1.0, 0, "error"),
        ]
        s = summarize(records)[0]
        assert s.failures == 1
        assert s.avg_objective == 0.5
