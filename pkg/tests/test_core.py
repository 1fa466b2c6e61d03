import numpy as np
import pytest

from minimaxfit.core import (
    EvaluationError,
    InvalidInputError,
    ResidualMap,
    SeparableProblem,
    fd_jacobian,
    inf_norm,
    pnorm_pow_objective,
    weighted_sq,
)


def scan_max_abs(r):
    """Independent oracle: element-by-element scan."""
    best = 0.0
    for v in r:
        if abs(v) > best:
            best = abs(v)
    return best


class TestInfNorm:
    def test_two_vector(self):
        assert inf_norm([-3.0, 2.0]) == 3.0

    def test_zero_vector(self):
        assert inf_norm([0.0, 0.0, 0.0]) == 0.0

    def test_matches_scan_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = rng.normal(size=7) * 10.0
            assert inf_norm(r) == scan_max_abs(r)

    def test_zero_only_for_zero_vector(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            r = rng.normal(size=4)
            if np.any(r != 0):
                assert inf_norm(r) > 0.0

    def test_absolute_homogeneity(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            r = rng.normal(size=5)
            c = float(rng.normal() * 10)
            assert inf_norm(c * r) == pytest.approx(abs(c) * inf_norm(r), rel=1e-14)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(InvalidInputError):
            inf_norm([])
        with pytest.raises(InvalidInputError):
            inf_norm([1.0, np.nan])
        with pytest.raises(InvalidInputError):
            inf_norm([np.inf])


class TestWeightedSq:
    def test_zero_weight_masks_entry(self):
        assert weighted_sq([1.0, -2.0], [1.0, 0.0]) == 1.0

    def test_hand_value(self):
        assert weighted_sq([1.0, -2.0], [0.5, 0.5]) == 2.5

    def test_bounded_by_sup_norm_square(self):
        # Any simplex-weighted mean of squares is at most the largest square.
        rng = np.random.default_rng(4)
        for _ in range(200):
            m = int(rng.integers(1, 9))
            r = rng.normal(size=m) * 5
            lam = rng.random(m)
            lam /= lam.sum()
            assert weighted_sq(r, lam) <= inf_norm(r) ** 2 + 1e-12

    def test_rejects_mismatch_and_negative_weight(self):
        with pytest.raises(InvalidInputError):
            weighted_sq([1.0, 2.0], [1.0])
        with pytest.raises(InvalidInputError):
            weighted_sq([1.0], [-0.5])


class TestPnormPowObjective:
    def test_single_entry(self):
        assert pnorm_pow_objective([2.0], 1) == 4.0

    def test_pair_high_power(self):
        assert pnorm_pow_objective([1.0, 1.0], 3) == 2.0

    def test_root_decreases_toward_sup_norm(self):
        r = np.array([1.0, 2.0, 3.0])
        roots = [pnorm_pow_objective(r, p) ** (1.0 / (2 * p)) for p in range(1, 9)]
        assert all(a >= b - 1e-12 for a, b in zip(roots, roots[1:]))
        assert all(v >= inf_norm(r) for v in roots)
        assert roots[-1] == pytest.approx(inf_norm(r), rel=0.1)

    def test_rejects_zero_p(self):
        with pytest.raises(InvalidInputError):
            pnorm_pow_objective([1.0], 0)


class TestArgminInvariance:
    def test_squaring_preserves_argmin_on_grids(self):
        # For nonnegative values, composing with t**2 cannot move the argmin.
        rng = np.random.default_rng(5)
        for _ in range(30):
            n = int(rng.integers(2, 10_000))
            f = rng.random(n) * rng.integers(1, 100)
            assert np.argmin(f) == np.argmin(f**2)


def make_map(fun, n, m, jac=None):
    return ResidualMap(n=n, m=m, fun=fun, jac=jac)


class TestResidualMap:
    def test_purity_and_shape(self):
        F = make_map(lambda y: np.array([y[0], y[0] + 1.0]), 1, 2)
        a = F.residual([2.0])
        b = F.residual([2.0])
        assert np.array_equal(a, b)
        assert a.shape == (2,)

    def test_rejects_bad_dims(self):
        with pytest.raises(InvalidInputError):
            make_map(lambda y: y, 0, 1)

    def test_wrong_length_residual_is_evaluation_error(self):
        F = make_map(lambda y: np.ones(3), 1, 2)
        with pytest.raises(EvaluationError):
            F.residual([0.0])

    def test_nonfinite_residual_carries_point(self):
        F = make_map(lambda y: np.array([1.0 / y[0]]), 1, 1)
        with pytest.raises(EvaluationError) as err:
            F.residual([0.0])
        assert err.value.point is not None


class TestFdJacobian:
    def test_identity_map(self):
        F = make_map(lambda y: y.copy(), 2, 2)
        J = fd_jacobian(F, [0.3, -0.7])
        assert np.allclose(J, np.eye(2), atol=1e-10)

    def test_square_map(self):
        F = make_map(lambda y: np.array([y[0] ** 2]), 1, 1)
        J = fd_jacobian(F, [3.0])
        assert J[0, 0] == pytest.approx(6.0, abs=1e-6)

    def test_affine_map_exact(self):
        rng = np.random.default_rng(6)
        A = rng.normal(size=(4, 3))
        c = rng.normal(size=4)
        F = make_map(lambda y: A @ y + c, 3, 4)
        for _ in range(5):
            y = rng.normal(size=3) * 10
            assert np.allclose(fd_jacobian(F, y), A, atol=1e-8)

    def test_matches_analytic_on_decay_model(self):
        # Two-rate exponential decay basis with frozen linear coefficients.
        from minimaxfit.bench import MODELS, generate_instance
        from minimaxfit.separable import reduced_map

        inst = generate_instance(MODELS["exp3"], 40, 11)
        rm = reduced_map(inst.to_problem(), inst.true_linear)
        rng = np.random.default_rng(7)
        for _ in range(5):
            y = inst.true_nonlinear + rng.uniform(-0.1, 0.1, size=2)
            J_fd = fd_jacobian(rm, y)
            J_an = rm.jacobian_at(y)
            assert np.allclose(J_fd, J_an, rtol=1e-5, atol=1e-7)

    def test_probe_failure_carries_point(self):
        F = make_map(lambda y: np.array([np.sqrt(y[0])]), 1, 1)
        with pytest.raises(EvaluationError):
            fd_jacobian(F, [0.0])  # probe at -h goes negative


class TestSeparableProblem:
    def setup_method(self):
        self.t = np.linspace(0, 1, 6)

        def basis(y):
            return np.column_stack([np.ones_like(self.t), np.exp(-y[0] * self.t)])

        self.P = SeparableProblem(
            n1=2, n2=1, m=6, basis=basis, rhs=lambda y: np.sin(self.t)
        )

    def test_residual_matches_direct_evaluation(self):
        x = np.array([0.5, -1.0])
        y = np.array([2.0])
        direct = self.P.matrix(y) @ x - self.P.data(y)
        assert np.array_equal(self.P.residual(x, y), direct)

    def test_purity(self):
        y = np.array([1.5])
        assert np.array_equal(self.P.matrix(y), self.P.matrix(y))
        assert np.array_equal(self.P.data(y), self.P.data(y))

    def test_rejects_bad_dims(self):
        with pytest.raises(InvalidInputError):
            SeparableProblem(n1=0, n2=1, m=3, basis=lambda y: None, rhs=lambda y: None)
        with pytest.raises(InvalidInputError):
            self.P.residual([1.0], [1.0])  # x too short
