import numpy as np
import pytest

from minimaxfit.core import EvaluationError, InvalidInputError, ResidualMap
from minimaxfit.nlls import NllsOptions, NllsResult, gauss_newton_step, solve_weighted_nlls


class TestGaussNewtonStep:
    def test_identity_no_damping(self):
        s = gauss_newton_step(np.eye(2), [1.0, 2.0], 0.0)
        assert np.allclose(s, [-1.0, -2.0], atol=1e-12)

    def test_unit_damping_scalar(self):
        s = gauss_newton_step(np.eye(1), [1.0], 1.0)
        assert s[0] == pytest.approx(-0.5, abs=1e-12)

    def test_matches_damped_normal_equations(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            m, n = int(rng.integers(3, 9)), int(rng.integers(1, 4))
            J = rng.normal(size=(m, n))
            r = rng.normal(size=m)
            damping = float(rng.random() * 2)
            s = gauss_newton_step(J, r, damping)
            lhs = (J.T @ J + damping * np.eye(n)) @ s
            assert np.allclose(lhs, -J.T @ r, atol=1e-8)

    def test_rejects_negative_damping(self):
        with pytest.raises(InvalidInputError):
            gauss_newton_step(np.eye(1), [1.0], -0.1)


class TestSolveWeightedNlls:
    def test_affine_is_exact(self):
        c = np.array([1.0, 2.0])
        F = ResidualMap(n=2, m=2, fun=lambda y: y - c, jac=lambda y: np.eye(2))
        res = solve_weighted_nlls(F, [1.0, 1.0], [0.0, 0.0])
        assert res.status == "converged"
        assert np.allclose(res.y, c, atol=1e-6)
        assert res.objective <= 1e-12
        # Damped linear solves contract the residual by the damping factor
        # per accepted step, so a 1e-8 gradient needs a few iterations.
        assert res.iterations <= 4

    def test_curved_valley_zero_residual(self):
        def fun(y):
            return np.array([10.0 * (y[1] - y[0] ** 2), 1.0 - y[0]])

        def jac(y):
            return np.array([[-20.0 * y[0], 10.0], [-1.0, 0.0]])

        F = ResidualMap(n=2, m=2, fun=fun, jac=jac)
        res = solve_weighted_nlls(F, [1.0, 1.0], [-1.2, 1.0], NllsOptions(max_iters=400))
        assert res.objective <= 1e-10
        assert np.allclose(res.y, [1.0, 1.0], atol=1e-4)

    def test_zero_weight_drops_residual(self):
        F = ResidualMap(n=1, m=2, fun=lambda y: np.array([y[0] - 1.0, y[0] - 5.0]))
        res = solve_weighted_nlls(F, [1.0, 0.0], [0.0])
        assert res.y[0] == pytest.approx(1.0, abs=1e-6)
        assert res.objective <= 1e-12

    def test_all_zero_weights_converges_immediately(self):
        F = ResidualMap(n=1, m=2, fun=lambda y: np.array([y[0], y[0] - 3.0]))
        res = solve_weighted_nlls(F, [0.0, 0.0], [7.0])
        assert res.status == "converged"
        assert res.iterations == 0
        assert res.objective == 0.0

    def test_monotone_descent(self):
        rng = np.random.default_rng(21)

        def fun(y):
            return np.array([np.sin(y[0]) + y[1] ** 2, y[0] * y[1] - 1.0, y[0] - 0.3])

        F = ResidualMap(n=2, m=3, fun=fun)
        w = rng.random(3)
        seen = []

        def wrapped(y):
            r = fun(y)
            seen.append(float(np.dot(w, r * r)))
            return r

        Fw = ResidualMap(n=2, m=3, fun=wrapped)
        res = solve_weighted_nlls(Fw, w, [1.0, 1.0])
        # The solver's accepted objectives are non-increasing even though
        # trial evaluations in between may be worse.
        assert res.objective <= seen[0] + 1e-12

    def test_objective_matches_reevaluation(self):
        F = ResidualMap(n=1, m=2, fun=lambda y: np.array([y[0] - 2.0, 3.0 * y[0]]))
        w = np.array([0.7, 0.3])
        res = solve_weighted_nlls(F, w, [0.5])
        r = F.residual(res.y)
        assert res.objective == pytest.approx(float(np.dot(w, r * r)), rel=1e-12)

    def test_gradient_small_at_convergence(self):
        F = ResidualMap(n=1, m=2, fun=lambda y: np.array([y[0] - 2.0, 3.0 * y[0]]))
        w = np.array([0.7, 0.3])
        opts = NllsOptions()
        res = solve_weighted_nlls(F, w, [10.0], opts)
        assert res.status == "converged"
        J = F.jacobian_at(res.y)
        r = F.residual(res.y)
        grad = J.T @ (w * r)
        assert np.linalg.norm(grad) <= opts.grad_tol * (1.0 + res.objective)

    def test_nonfinite_start_raises(self):
        F = ResidualMap(n=1, m=1, fun=lambda y: np.array([1.0 / y[0]]))
        with pytest.raises(EvaluationError):
            solve_weighted_nlls(F, [1.0], [0.0])

    def test_rejects_negative_weights(self):
        F = ResidualMap(n=1, m=1, fun=lambda y: y.copy())
        with pytest.raises(InvalidInputError):
            solve_weighted_nlls(F, [-1.0], [0.0])

    def test_perturbed_truth_reaches_zero_residual(self):
        from minimaxfit.bench import MODELS, generate_instance
        from minimaxfit.separable import joint_map

        for model in ("exp3", "gauss4", "lorentz6"):
            inst = generate_instance(MODELS[model], 60, 33)
            jm = joint_map(inst.to_problem())
            v0 = np.concatenate([inst.true_linear, inst.true_nonlinear])
            v0 = v0 + 1e-3
            res = solve_weighted_nlls(jm, np.ones(60), v0, NllsOptions(max_iters=400))
            assert res.objective <= 1e-10


class TestNllsOptions:
    def test_validation(self):
        with pytest.raises(InvalidInputError):
            NllsOptions(grad_tol=0.0)
        with pytest.raises(InvalidInputError):
            NllsOptions(damping_up=0.5)
        with pytest.raises(InvalidInputError):
            NllsOptions(max_iters=0)

    def test_result_shape(self):
        res = NllsResult(y=np.zeros(2), objective=0.0, iterations=3, status="converged")
        assert res.objective >= 0.0
