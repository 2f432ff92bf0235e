"""Certainty-equivalence adaptive LQR on an unknown linear plant.

The loop estimates (A, B) by ridge least squares over the observed
transitions, synthesizes a feedback gain from the estimates through a
fixed-point Riccati solve, and injects a vanishing Gaussian exploration
signal.  Regret is measured against an omniscient controller that knows
the true plant and consumes the exact same noise sequence on a twin.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import (
    SeededRng,
    check_finite,
    min_eig_at_least,
    require_symmetric,
    spectral_radius,
    substream_seed,
)

DARE_TOL = 1e-12
DARE_MAX_ITER = 100_000
ESTIMATOR_RIDGE = 1e-6
STATE_ABORT_NORM = 1e6
LOW_EXCITATION_FLOOR = 1e-6


class UnstabilizableEstimate(RuntimeError):
    """The Riccati iteration failed to converge for the given model."""


@dataclass
class PlantModel:
    """x_{t+1} = A x_t + B u_t + w_t with isotropic Gaussian noise."""

    A: np.ndarray
    B: np.ndarray
    noise_std: float = 0.0

    def __post_init__(self):
        self.A = check_finite(self.A, "A")
        self.B = check_finite(np.atleast_2d(self.B), "B")
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ValueError("A must be square")
        if self.B.shape[0] != self.A.shape[0]:
            raise ValueError("B row count must match the state dimension")
        if self.noise_std < 0:
            raise ValueError("noise_std must be nonnegative")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass
class CostWeights:
    """Quadratic stage cost x'Qx + u'Ru with Q >= 0 and R > 0."""

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.Q = require_symmetric(np.atleast_2d(np.asarray(self.Q, dtype=float)), "Q")
        self.R = require_symmetric(np.atleast_2d(np.asarray(self.R, dtype=float)), "R")
        if not min_eig_at_least(self.Q, 0.0):
            raise ValueError("Q must be positive semidefinite")
        if not min_eig_at_least(self.R, 1e-10):
            raise ValueError("R must be positive definite")

    def stage_cost(self, x, u):
        return float(x @ self.Q @ x + u @ self.R @ u)


def plant_step(plant, x, u, rng):
    """One transition of the plant, noise drawn from ``rng`` (Box-Muller)."""
    x = check_finite(x, "state")
    u = check_finite(u, "input")
    w = rng.normals(plant.n) * plant.noise_std if plant.noise_std > 0 else np.zeros(plant.n)
    return plant.A @ x + plant.B @ u + w


def _small_solve(S, Y):
    """Solve S X = Y for the tiny systems inside the Riccati loop."""
    m = S.shape[0]
    if m == 1:
        return Y / S[0, 0]
    if m == 2:
        det = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
        out = np.empty_like(Y)
        out[0] = (S[1, 1] * Y[0] - S[0, 1] * Y[1]) / det
        out[1] = (S[0, 0] * Y[1] - S[1, 0] * Y[0]) / det
        return out
    return np.linalg.solve(S, Y)


def _dare_scalar(a, b, q, r, tol, max_iter):
    """Same fixed point as the matrix path, in plain floats for speed."""
    p = q
    for _ in range(max_iter):
        s = r + b * p * b
        k = b * p * a / s
        nxt = q + a * p * a - a * p * b * k
        gap = abs(nxt - p)
        p = nxt
        if p != p or abs(p) > 1e100:
            raise UnstabilizableEstimate("Riccati iteration diverged")
        if gap <= tol:
            k = b * p * a / (r + b * p * b)
            if abs(a - b * k) >= 1.0:
                raise UnstabilizableEstimate("closed loop is not a contraction")
            return np.array([[p]]), np.array([[k]])
    raise UnstabilizableEstimate(f"no fixed point within {max_iter} iterations")


def dare_solve(A, B, Q, R, tol=DARE_TOL, max_iter=DARE_MAX_ITER):
    """Fixed-point solve of the discrete-time Riccati equation.

    Iterates P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA from P = Q until
    the max-norm change drops below ``tol``, then returns (P, K) with
    K = (R + B'PB)^-1 B'PA, to be used as u = -K x.  Raises
    UnstabilizableEstimate when the iteration diverges or fails to
    settle, or when the closed loop A - BK is not a contraction.
    """
    A = check_finite(A, "A")
    B = check_finite(np.atleast_2d(B), "B")
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if A.shape == (1, 1) and B.shape == (1, 1):
        return _dare_scalar(float(A[0, 0]), float(B[0, 0]),
                            float(Q[0, 0]), float(R[0, 0]), tol, max_iter)
    At = A.T
    Bt = B.T
    P = Q.copy()
    for _ in range(max_iter):
        PA = P @ A
        PB = P @ B
        gain = _small_solve(R + Bt @ PB, Bt @ PA)
        nxt = Q + At @ (PA - PB @ gain)
        gap = float(np.max(np.abs(nxt - P)))
        P = nxt
        if not gap == gap or gap > 1e100:
            raise UnstabilizableEstimate("Riccati iteration diverged")
        if gap <= tol:
            PA = P @ A
            PB = P @ B
            K = np.atleast_2d(_small_solve(R + Bt @ PB, Bt @ PA))
            if spectral_radius(A - B @ K) >= 1.0:
                raise UnstabilizableEstimate("closed loop is not a contraction")
            return P, K
    raise UnstabilizableEstimate(f"no fixed point within {max_iter} iterations")


def exploration_std(t, coeff):
    """Std of the probing signal at step t: coeff * t^(-1/4), so the
    variance decays like 1/sqrt(t); coeff = 0 disables probing."""
    if t < 1:
        raise ValueError("t starts at 1")
    if coeff < 0:
        raise ValueError("coeff must be nonnegative")
    return coeff * t ** (-0.25)


class CeController:
    """Least-squares model estimates plus the gain synthesized from them.

    Transitions are folded into running sums Z'Z and Z'X+ (with
    z = (x; u)); each refresh solves the ridge system once and maps the
    estimates to a gain through the Riccati solve.  An unstabilizable
    estimate keeps the previous gain (zero before any success) and is
    flagged rather than raised.
    """

    def __init__(self, n, m, initial_estimates=None):
        self.n = int(n)
        self.m = int(m)
        d = self.n + self.m
        self.zz = np.zeros((d, d))
        self.zx = np.zeros((d, self.n))
        self.samples = 0
        self.K = np.zeros((self.m, self.n))
        self.P = None
        self.gain_held = False
        self.low_data = initial_estimates is None
        self.low_excitation = False
        if initial_estimates is not None:
            self.A_hat = check_finite(initial_estimates[0], "A estimate").copy()
            self.B_hat = check_finite(np.atleast_2d(initial_estimates[1]), "B estimate").copy()
        else:
            self.A_hat = np.zeros((self.n, self.n))
            self.B_hat = np.zeros((self.n, self.m))

    def observe(self, x, u, x_next):
        z = np.concatenate([x, u])
        self.zz += np.outer(z, z)
        self.zx += np.outer(z, x_next)
        self.samples += 1

    def estimate(self, flag_excitation=True):
        """Current ridge least-squares estimates (A_hat, B_hat).

        Holds zero matrices (flagged low_data) until n + m transitions
        are available; with ``flag_excitation`` it also marks data whose
        Gram is nearly rank deficient as low-excitation (skipped inside
        the hot loop, evaluated once at the end of a rollout).
        """
        d = self.n + self.m
        if self.samples < d:
            self.low_data = True
            return np.zeros((self.n, self.n)), np.zeros((self.n, self.m))
        self.low_data = False
        if flag_excitation:
            self.low_excitation = not min_eig_at_least(self.zz, LOW_EXCITATION_FLOOR)
        theta = np.linalg.solve(self.zz + ESTIMATOR_RIDGE * np.eye(d), self.zx)
        ab = theta.T
        return ab[:, : self.n], ab[:, self.n:]

    def refresh(self, weights):
        """Re-estimate and re-synthesize the gain; fall back on failure."""
        a_hat, b_hat = self.estimate(flag_excitation=False)
        if self.low_data:
            self.gain_held = False
            return
        self.A_hat, self.B_hat = a_hat, b_hat
        try:
            self.P, self.K = dare_solve(self.A_hat, self.B_hat, weights.Q, weights.R)
            self.gain_held = False
        except UnstabilizableEstimate:
            self.gain_held = True


@dataclass
class OacTrace:
    """Everything one adaptive-control run produced, twin included."""

    states: np.ndarray
    inputs: np.ndarray
    costs: np.ndarray
    opt_costs: np.ndarray
    reg_partial: np.ndarray
    explore_std: np.ndarray
    gain_flags: np.ndarray
    noise: np.ndarray
    A_hat: np.ndarray
    B_hat: np.ndarray
    K_star: np.ndarray
    aborted: bool = False
    steps: int = 0
    extras: dict = field(default_factory=dict)

    @property
    def regret(self):
        return float(self.reg_partial[self.steps - 1]) if self.steps else 0.0


def oac_rollout(plant, weights, horizon, explore_coeff, refresh_period=1, seed=0,
                x_init=None, initial_estimates=None, freeze_estimates=False):
    """Run the adaptive loop and its omniscient twin over one horizon.

    The learner plays u = -K_t x + xi_t (pure probing for the first
    n + m steps when no estimates exist yet); the twin plays the
    infinite-horizon gain of the true plant and sees the identical noise
    draws.  ``reg_partial`` accumulates learner cost minus twin cost.  A
    state norm above STATE_ABORT_NORM stops the run and flags it
    aborted instead of propagating the blow-up.
    """
    if refresh_period < 1:
        raise ValueError("refresh_period must be >= 1")
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n, m = plant.n, plant.m
    rng_w = SeededRng(substream_seed(seed, 1))
    rng_xi = SeededRng(substream_seed(seed, 2))
    noise = rng_w.normals(horizon * n).reshape(horizon, n) * plant.noise_std
    xi_raw = rng_xi.normals(horizon * m).reshape(horizon, m)

    _, K_star = dare_solve(plant.A, plant.B, weights.Q, weights.R)
    ctrl = CeController(n, m, initial_estimates=initial_estimates)
    if initial_estimates is not None:
        try:
            ctrl.P, ctrl.K = dare_solve(ctrl.A_hat, ctrl.B_hat, weights.Q, weights.R)
        except UnstabilizableEstimate:
            ctrl.gain_held = True

    x = np.zeros(n) if x_init is None else check_finite(x_init, "x_init").copy()
    x_twin = x.copy()
    warmup = 0 if initial_estimates is not None else n + m

    states = np.zeros((horizon + 1, n))
    inputs = np.zeros((horizon, m))
    costs = np.zeros(horizon)
    opt_costs = np.zeros(horizon)
    sigma_seq = np.zeros(horizon)
    flags = np.zeros(horizon, dtype=int)
    states[0] = x
    aborted = False
    steps = 0

    for t in range(1, horizon + 1):
        sigma = exploration_std(t, explore_coeff) if explore_coeff > 0 else 0.0
        xi = xi_raw[t - 1] * sigma
        if t <= warmup:
            u = xi.copy()
        else:
            u = -ctrl.K @ x + xi
        u_twin = -K_star @ x_twin

        costs[t - 1] = weights.stage_cost(x, u)
        opt_costs[t - 1] = weights.stage_cost(x_twin, u_twin)
        sigma_seq[t - 1] = sigma

        w = noise[t - 1]
        x_next = plant.A @ x + plant.B @ u + w
        x_twin = plant.A @ x_twin + plant.B @ u_twin + w

        ctrl.observe(x, u, x_next)
        if not freeze_estimates and t % refresh_period == 0:
            ctrl.refresh(weights)
        flags[t - 1] = int(ctrl.gain_held)

        x = x_next
        states[t] = x
        inputs[t - 1] = u
        steps = t
        if float(np.sqrt(x @ x)) > STATE_ABORT_NORM:
            aborted = True
            break

    if not freeze_estimates and steps:
        a_hat, b_hat = ctrl.estimate()
        if not ctrl.low_data:
            ctrl.A_hat, ctrl.B_hat = a_hat, b_hat

    reg_partial = np.cumsum(costs[:steps] - opt_costs[:steps])
    full = np.zeros(horizon)
    full[:steps] = reg_partial
    return OacTrace(
        states=states,
        inputs=inputs,
        costs=costs,
        opt_costs=opt_costs,
        reg_partial=full,
        explore_std=sigma_seq,
        gain_flags=flags,
        noise=noise,
        A_hat=ctrl.A_hat.copy(),
        B_hat=ctrl.B_hat.copy(),
        K_star=K_star,
        aborted=aborted,
        steps=steps,
        extras={"low_excitation": ctrl.low_excitation, "low_data": ctrl.low_data},
    )
