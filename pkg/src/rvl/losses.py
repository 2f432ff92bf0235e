"""Loss functions fed to the online learners.

Three kinds are shipped: the streaming squared error 0.5*(theta'x - y)^2,
an isotropic strongly convex quadratic, and a generic convex loss with a
caller-supplied gradient.  Each exposes ``value`` and ``grad``;
``grad_check`` is the central-difference oracle used by the tests.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import check_finite


@dataclass(frozen=True)
class SquaredErrorLoss:
    """0.5 * (theta' features - target)^2."""

    features: np.ndarray
    target: float

    def value(self, theta):
        e = float(np.dot(theta, self.features)) - self.target
        return 0.5 * e * e

    def grad(self, theta):
        e = float(np.dot(theta, self.features)) - self.target
        return e * self.features


@dataclass(frozen=True)
class StronglyConvexQuadratic:
    """0.5 * curvature * ||theta - center||^2 with curvature > 0."""

    center: np.ndarray
    curvature: float = 1.0

    def __post_init__(self):
        if not self.curvature > 0:
            raise ValueError("curvature must be strictly positive")

    def value(self, theta):
        diff = np.asarray(theta, dtype=float) - self.center
        return 0.5 * self.curvature * float(diff @ diff)

    def grad(self, theta):
        return self.curvature * (np.asarray(theta, dtype=float) - self.center)


class GenericConvexLoss:
    """Convex loss given by callables; no autodiff, the gradient is supplied.

    Parameters
    ----------
    fn : callable theta -> float
    grad_fn : callable theta -> ndarray
    grad_bound : optional uniform bound on ||grad_fn(theta)|| over the
        feasible set, when the caller knows one.
    """

    def __init__(self, fn, grad_fn, grad_bound=None):
        self.fn = fn
        self.grad_fn = grad_fn
        self.grad_bound = grad_bound

    def value(self, theta):
        return float(self.fn(np.asarray(theta, dtype=float)))

    def grad(self, theta):
        return np.asarray(self.grad_fn(np.asarray(theta, dtype=float)), dtype=float)


def grad_check(loss, theta, h=1e-5):
    """Max abs deviation between loss.grad and central differences.

    ``h`` must lie in [1e-8, 1e-3].  For the shipped quadratic losses the
    deviation stays below 1e-5 at h = 1e-5.
    """
    if not 1e-8 <= h <= 1e-3:
        raise ValueError("step h must lie in [1e-8, 1e-3]")
    theta = check_finite(theta, "theta")
    g = np.asarray(loss.grad(theta), dtype=float)
    worst = 0.0
    for i in range(theta.size):
        bump = np.zeros_like(theta)
        bump[i] = h
        approx = (loss.value(theta + bump) - loss.value(theta - bump)) / (2.0 * h)
        worst = max(worst, abs(approx - g[i]))
    return worst


def squared_error_grad_bound(x_max, diameter, y_max):
    """Worst-case gradient norm of a squared-error stream over the feasible set.

    With ||x_t|| <= x_max, |y_t| <= y_max and the estimate confined to a
    set of diameter ``diameter``, the gradient e_t * x_t satisfies
    ||grad|| <= x_max * (diameter * x_max + y_max).
    """
    if x_max <= 0 or diameter <= 0 or y_max < 0:
        raise ValueError("bounds must be positive (y_max nonnegative)")
    return x_max * (diameter * x_max + y_max)


@dataclass(frozen=True)
class LossRecord:
    """One evaluated step of an online run."""

    t: int
    loss_value: float
    gradient: np.ndarray
    context: dict = field(default=None)
