import numpy as np
import pytest

from rvl.learners import Ball
from rvl.losses import (
    GenericConvexLoss,
    SquaredErrorLoss,
    StronglyConvexQuadratic,
    grad_check,
    squared_error_grad_bound,
)
from rvl.numerics import SeededRng


class TestEval:
    def test_unit_error(self):
        f = SquaredErrorLoss(np.array([1.0, 1.0]), 0.0)
        assert f.value(np.array([1.0, 0.0])) == 0.5

    def test_zero_error(self):
        f = SquaredErrorLoss(np.array([2.0, 3.0]), -1.0)
        assert f.value(np.array([1.0, -1.0])) == 0.0

    def test_quadratic_minimum(self):
        c = np.array([0.3, -0.7])
        f = StronglyConvexQuadratic(c, 2.0)
        assert f.value(c) == 0.0


class TestGrad:
    def test_unit_error_grad(self):
        f = SquaredErrorLoss(np.array([1.0, 1.0]), 0.0)
        assert np.array_equal(f.grad(np.array([1.0, 0.0])), np.array([1.0, 1.0]))

    def test_stationary_at_minimum(self):
        c = np.array([1.5, 2.0])
        f = StronglyConvexQuadratic(c, 3.0)
        assert np.array_equal(f.grad(c), np.zeros(2))

    def test_zero_error_grad(self):
        f = SquaredErrorLoss(np.array([2.0, 3.0]), -1.0)
        assert np.array_equal(f.grad(np.array([1.0, -1.0])), np.zeros(2))


class TestGradCheck:
    def test_squared_error(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = SquaredErrorLoss(rng.normal(size=3), float(rng.normal()))
            assert grad_check(f, rng.normal(size=3), h=1e-5) <= 1e-5

    def test_linear_loss_exact(self):
        slope = np.array([2.0, -1.0])
        f = GenericConvexLoss(lambda th: float(slope @ th), lambda th: slope)
        assert grad_check(f, np.array([0.3, 0.4]), h=1e-4) <= 1e-10

    def test_strongly_convex(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            f = StronglyConvexQuadratic(rng.normal(size=2), 1.0)
            assert grad_check(f, rng.normal(size=2), h=1e-5) <= 1e-6

    def test_step_range_enforced(self):
        f = StronglyConvexQuadratic(np.zeros(2), 1.0)
        with pytest.raises(ValueError):
            grad_check(f, np.zeros(2), h=1e-2)


class TestConvexityWitness:
    @pytest.mark.parametrize("kind", ["squared", "quadratic"])
    def test_interpolation_inequality(self, kind):
        rng = np.random.default_rng(5)
        for _ in range(1000):
            if kind == "squared":
                f = SquaredErrorLoss(rng.normal(size=2), float(rng.normal()))
            else:
                f = StronglyConvexQuadratic(rng.normal(size=2), float(abs(rng.normal()) + 0.1))
            t1, t2 = rng.normal(size=(2, 2))
            lam = rng.uniform()
            mix = f.value(lam * t1 + (1 - lam) * t2)
            assert mix <= lam * f.value(t1) + (1 - lam) * f.value(t2) + 1e-10


class TestGradBound:
    def test_formula(self):
        assert squared_error_grad_bound(1.0, 2.0, 1.1) == pytest.approx(3.1)

    def test_honesty_on_sampled_stream(self):
        # gradients sampled anywhere in the set never exceed the declared bound
        rng = SeededRng(10)
        region = Ball(np.zeros(2), 1.0)
        x_max, y_max = 1.0, 1.3
        bound = squared_error_grad_bound(x_max, region.diameter, y_max)
        for _ in range(500):
            x = rng.normals(2)
            nrm = np.sqrt(x @ x)
            if nrm > x_max:
                x *= x_max / nrm
            y = (2.0 * rng.uniform() - 1.0) * y_max
            theta = region.project(rng.normals(2))
            g = SquaredErrorLoss(x, y).grad(theta)
            assert np.sqrt(g @ g) <= bound

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            squared_error_grad_bound(0.0, 1.0, 1.0)


class TestValidation:
    def test_curvature_positive(self):
        with pytest.raises(ValueError):
            StronglyConvexQuadratic(np.zeros(2), 0.0)
