"""Update laws, learning-rate schedules, projections and the leak switch.

The three step functions implement plain, projected and leaky gradient
descent on a parameter vector.  Schedules are small stateful objects
with a ``rate(t, ...)`` method; the two constraint sets (ball and box)
know how to project onto themselves and report their diameter.
"""

import numpy as np

from .numerics import check_finite


class Ball:
    """Closed Euclidean ball {z : ||z - center|| <= radius}.

    Membership allows a relative rounding slack of 1e-14 so that a point
    just produced by ``project`` tests as inside: this makes projection
    exactly idempotent and keeps the boundary on the inside of the set.
    """

    def __init__(self, center, radius):
        self.center = check_finite(center, "center")
        if not radius > 0:
            raise ValueError("radius must be strictly positive")
        self.radius = float(radius)

    @property
    def diameter(self):
        return 2.0 * self.radius

    def contains(self, z):
        diff = np.asarray(z, dtype=float) - self.center
        return float(np.sqrt(diff @ diff)) <= self.radius * (1.0 + 1e-14)

    def project(self, z):
        z = np.asarray(z, dtype=float)
        if self.contains(z):
            return z
        diff = z - self.center
        dist = float(np.sqrt(diff @ diff))
        return self.center + diff * (self.radius / dist)


class Box:
    """Axis-aligned box {z : lower <= z <= upper} (componentwise)."""

    def __init__(self, lower, upper):
        self.lower = check_finite(lower, "lower")
        self.upper = check_finite(upper, "upper")
        if self.lower.shape != self.upper.shape:
            raise ValueError("lower/upper dimension mismatch")
        if not np.all(self.lower < self.upper):
            raise ValueError("lower must be strictly below upper componentwise")

    @property
    def diameter(self):
        diff = self.upper - self.lower
        return float(np.sqrt(diff @ diff))

    def contains(self, z):
        z = np.asarray(z, dtype=float)
        return bool(np.all(z >= self.lower) and np.all(z <= self.upper))

    def project(self, z):
        return np.clip(np.asarray(z, dtype=float), self.lower, self.upper)


class SqrtTRate:
    """diameter / (grad_bound * sqrt(t)): the vanishing-rate workhorse."""

    def __init__(self, diameter, grad_bound):
        if diameter <= 0 or grad_bound <= 0:
            raise ValueError("diameter and grad_bound must be positive")
        self.diameter = float(diameter)
        self.grad_bound = float(grad_bound)

    def rate(self, t, grad=None, features=None):
        if t < 1:
            raise ValueError("t starts at 1")
        return self.diameter / (self.grad_bound * np.sqrt(t))


class AdaptiveGradRate:
    """diameter / sqrt(eps_floor + sum of squared gradient norms so far.

    The floor guards the division before any nonzero gradient arrives.
    Calling ``rate`` folds the supplied gradient into the running sum, so
    the emitted rate already includes the current step.
    """

    def __init__(self, diameter, eps_floor=1e-12):
        if diameter <= 0 or eps_floor <= 0:
            raise ValueError("diameter and eps_floor must be positive")
        self.diameter = float(diameter)
        self.eps_floor = float(eps_floor)
        self.accumulated_sq_grad = 0.0

    def rate(self, t, grad=None, features=None):
        if t < 1:
            raise ValueError("t starts at 1")
        if grad is None:
            raise ValueError("adaptive rate needs the current gradient")
        g = np.asarray(grad, dtype=float)
        self.accumulated_sq_grad += float(g @ g)
        return self.diameter / np.sqrt(self.eps_floor + self.accumulated_sq_grad)


class InverseTRate:
    """c / t, the schedule paired with strongly convex losses."""

    def __init__(self, c):
        if c <= 0:
            raise ValueError("c must be positive")
        self.c = float(c)

    def rate(self, t, grad=None, features=None):
        if t < 1:
            raise ValueError("t starts at 1")
        return self.c / t


class NormalizedRate:
    """alpha / (m + x'x): scales with the features, not with time.

    alpha must lie strictly inside (0, 2); the endpoints give no descent
    and are rejected at construction.
    """

    def __init__(self, alpha, m):
        if not 0.0 < alpha < 2.0:
            raise ValueError("alpha must lie in (0,2)")
        if m <= 0:
            raise ValueError("m must be positive")
        self.alpha = float(alpha)
        self.m = float(m)

    def rate(self, t, grad=None, features=None):
        if t < 1:
            raise ValueError("t starts at 1")
        if features is None:
            raise ValueError("normalized rate needs the current features")
        x = np.asarray(features, dtype=float)
        return self.alpha / (self.m + float(x @ x))


class SigmaRule:
    """Leak switch: zero inside the region (boundary included), sigma outside."""

    def __init__(self, sigma, region):
        if sigma <= 0:
            raise ValueError("sigma must be strictly positive")
        self.sigma = float(sigma)
        self.region = region

    def switch(self, theta):
        return 0.0 if self.region.contains(theta) else self.sigma


def step_vanilla(theta, eta, grad):
    """theta - eta * grad."""
    grad = check_finite(grad, "gradient")
    if eta <= 0:
        raise ValueError("eta must be positive")
    return np.asarray(theta, dtype=float) - eta * grad


def step_projected(theta, eta, grad, region):
    """Project the plain step back onto the feasible region."""
    return region.project(step_vanilla(theta, eta, grad))


def step_leaky(theta, eta, grad, sigma_t):
    """theta - eta * grad - sigma_t * theta; reduces to the plain step at sigma_t = 0."""
    if sigma_t < 0:
        raise ValueError("sigma_t must be nonnegative")
    stepped = step_vanilla(theta, eta, grad)
    if sigma_t == 0.0:
        return stepped
    return stepped - sigma_t * np.asarray(theta, dtype=float)
