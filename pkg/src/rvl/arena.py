"""Streaming regression environments and the excitation certificate.

A stream hides a true parameter vector, emits bounded features plus a
target (optionally corrupted by a bounded disturbance), and is strictly
causal: time indices must increase.  The excitation certificate scans
every window of a finite feature sequence for a uniform lower bound on
the windowed Gram sums.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import check_finite, inner, min_eig_at_least_batch


class CyclingBasisFeatures:
    """Scaled standard basis vectors visited cyclically: persistently exciting."""

    def __init__(self, dim, scale=1.0):
        if dim < 1 or scale <= 0:
            raise ValueError("dim must be >= 1 and scale positive")
        self.dim = int(dim)
        self.scale = float(scale)

    @property
    def x_max(self):
        return self.scale

    def block(self, t_start, count):
        out = np.zeros((count, self.dim))
        idx = (np.arange(t_start, t_start + count) - 1) % self.dim
        out[np.arange(count), idx] = self.scale
        return out


class ClippedGaussianFeatures:
    """Seeded Gaussian draws rescaled into the ||x|| <= x_max ball.

    Rescaling (rather than rejection) keeps the number of consumed draws
    a pure function of the number of emitted vectors, which makes runs
    reproducible regardless of how unlucky the tail draws are.
    """

    def __init__(self, dim, x_max, rng):
        if dim < 1 or x_max <= 0:
            raise ValueError("dim must be >= 1 and x_max positive")
        self.dim = int(dim)
        self._x_max = float(x_max)
        self.rng = rng

    @property
    def x_max(self):
        return self._x_max

    def block(self, t_start, count):
        raw = self.rng.normals(count * self.dim).reshape(count, self.dim)
        norms = np.sqrt(np.sum(raw * raw, axis=1))
        over = norms > self._x_max
        if np.any(over):
            raw[over] *= (self._x_max / norms[over])[:, None]
        return raw


class SinusoidFeatures:
    """Component i follows amplitudes[i] * sin(frequencies[i] * t)."""

    def __init__(self, frequencies, amplitudes):
        self.frequencies = check_finite(frequencies, "frequencies")
        self.amplitudes = check_finite(amplitudes, "amplitudes")
        if self.frequencies.shape != self.amplitudes.shape or self.frequencies.ndim != 1:
            raise ValueError("frequencies/amplitudes must be equal-length vectors")
        if not np.all(self.amplitudes > 0):
            raise ValueError("amplitudes must be positive")
        self.dim = self.frequencies.size

    @property
    def x_max(self):
        return float(np.sqrt(self.amplitudes @ self.amplitudes))

    def block(self, t_start, count):
        t = np.arange(t_start, t_start + count, dtype=float)[:, None]
        return self.amplitudes * np.sin(self.frequencies * t)


class ConstantFeatures:
    """The same direction every step: bounded but never exciting in n >= 2."""

    def __init__(self, direction):
        self.direction = check_finite(direction, "direction")
        if self.direction.ndim != 1 or not np.any(self.direction != 0):
            raise ValueError("direction must be a nonzero vector")
        self.dim = self.direction.size

    @property
    def x_max(self):
        return float(np.sqrt(self.direction @ self.direction))

    def block(self, t_start, count):
        return np.tile(self.direction, (count, 1))


class ZeroDisturbance:
    bound = 0.0

    def block(self, t_start, count):
        return np.zeros(count)


class UniformDisturbance:
    """Seeded uniform draws in [-bound, bound]."""

    def __init__(self, bound, rng):
        if bound < 0:
            raise ValueError("bound must be nonnegative")
        self.bound = float(bound)
        self.rng = rng

    def block(self, t_start, count):
        return (2.0 * self.rng.uniforms(count) - 1.0) * self.bound


class SinusoidDisturbance:
    """bound * sin(frequency * t)."""

    def __init__(self, bound, frequency=0.37):
        if bound < 0 or frequency <= 0:
            raise ValueError("bound nonnegative, frequency positive")
        self.bound = float(bound)
        self.frequency = float(frequency)

    def block(self, t_start, count):
        t = np.arange(t_start, t_start + count, dtype=float)
        return self.bound * np.sin(self.frequency * t)


class AlternatingDisturbance:
    """Sign-flipping worst case: +bound, -bound, +bound, ..."""

    def __init__(self, bound):
        if bound < 0:
            raise ValueError("bound must be nonnegative")
        self.bound = float(bound)

    def block(self, t_start, count):
        t = np.arange(t_start, t_start + count)
        return np.where(t % 2 == 1, self.bound, -self.bound)


class RegressionStream:
    """Truth process y_t = theta_star' x_t + d_t behind a causal interface."""

    def __init__(self, theta_star, features, disturbance=None):
        self.theta_star = check_finite(theta_star, "theta_star")
        self.features = features
        self.disturbance = disturbance if disturbance is not None else ZeroDisturbance()
        self._last_t = 0

    @property
    def d_bound(self):
        return self.disturbance.bound

    def emit(self, t):
        x, y = self.emit_block(t, 1)
        return x[0], float(y[0])

    def emit_block(self, t_start, count):
        """Emit steps t_start .. t_start+count-1; indices must move forward."""
        if t_start < 1:
            raise ValueError("t starts at 1")
        if t_start <= self._last_t:
            raise ValueError(
                f"stream is causal: step {t_start} requested after step {self._last_t}"
            )
        self._last_t = t_start + count - 1
        x = self.features.block(t_start, count)
        d = self.disturbance.block(t_start, count)
        y = x @ self.theta_star + d
        return x, y


def predict(theta, x):
    """Model output theta' x; the caller forms the error against the target."""
    return inner(theta, x)


@dataclass
class PECertificate:
    """Result of the window-exhaustive excitation scan of a finite run."""

    window: int
    beta: float
    verdict: bool
    worst_start: int
    worst_margin: float


def pe_certificate(xs, window, beta):
    """Scan all length-(window+1) Gram sums for a uniform beta*I lower bound.

    ``xs`` is a (T, n) array of features.  Start t is certified when
    sum_{tau=t..t+window} x_tau x_tau' - beta*I passes the semidefinite
    test; the verdict is the conjunction over every available start.
    ``worst_start`` is the first failing start or, when all pass, the
    start with the smallest margin; ``worst_margin`` is the largest
    shift the scan could still certify uniformly (found by bisection).
    """
    xs = check_finite(np.atleast_2d(np.asarray(xs, dtype=float)), "features")
    if beta <= 0:
        raise ValueError("beta must be positive")
    if window < 1:
        raise ValueError("window must be >= 1")
    T, n = xs.shape
    terms = window + 1
    if T < terms:
        raise ValueError(f"window of {terms} terms exceeds sequence length {T}")
    outer = xs[:, :, None] * xs[:, None, :]
    prefix = np.concatenate([np.zeros((1, n, n)), np.cumsum(outer, axis=0)], axis=0)
    grams = prefix[terms:] - prefix[:-terms]

    passed = min_eig_at_least_batch(grams, beta)
    verdict = bool(np.all(passed))
    if not verdict:
        worst_start = int(np.argmin(passed)) + 1
        margin = _uniform_margin(grams[worst_start - 1: worst_start])
        return PECertificate(window, beta, False, worst_start, margin)

    # All starts certified: bisect the largest uniformly certifiable shift
    # and report the window that caps it.
    margin = _uniform_margin(grams)
    failing = ~min_eig_at_least_batch(grams, min(margin * (1.0 + 1e-9) + 1e-12,
                                                 margin + 1.0))
    worst_start = int(np.argmax(failing)) + 1 if np.any(failing) else 1
    return PECertificate(window, beta, True, worst_start, margin)


def _uniform_margin(grams):
    """Largest beta certified by every Gram block, located by bisection."""
    if not np.all(min_eig_at_least_batch(grams, 0.0)):
        return 0.0
    hi = float(np.max(np.trace(grams, axis1=1, axis2=2))) + 1.0
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.all(min_eig_at_least_batch(grams, mid)):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    return lo
