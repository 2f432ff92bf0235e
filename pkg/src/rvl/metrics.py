"""Regret accounting, Lyapunov bookkeeping and the summation validators.

The ledger stores the losses an online run actually met, so the best
fixed parameter in hindsight can be recomputed after the fact (over any
prefix).  Quadratic loss catalogs get a normal-equation fast path with a
ridge fallback; everything else goes through projected full-gradient
descent with a gradient-mapping stopping rule.
"""

import numpy as np

from .learners import step_vanilla
from .losses import LossRecord, SquaredErrorLoss, StronglyConvexQuadratic
from .numerics import SingularSystem, check_finite, solve_linear

HINDSIGHT_TOL = 1e-9
RIDGE = 1e-8


class RegretLedger:
    """Append-only record of an online run plus its re-evaluable losses."""

    def __init__(self):
        self.records = []
        self.losses = []

    def __len__(self):
        return len(self.records)

    def append(self, loss_fn, record):
        if not isinstance(record, LossRecord):
            raise TypeError("record must be a LossRecord")
        if record.t != len(self.records) + 1:
            raise ValueError(
                f"records must arrive contiguously: got t={record.t}, expected {len(self.records) + 1}"
            )
        self.records.append(record)
        self.losses.append(loss_fn)

    def online_loss(self, upto=None):
        upto = len(self.records) if upto is None else upto
        return float(sum(r.loss_value for r in self.records[:upto]))

    def loss_sum_at(self, theta, upto=None):
        upto = len(self.losses) if upto is None else upto
        theta = check_finite(theta, "theta")
        return float(sum(f.value(theta) for f in self.losses[:upto]))

    def quadratic_terms(self, upto=None):
        """Summed-loss curvature/linear terms (P, q) when the catalog allows it.

        Returns None as soon as one loss has no closed quadratic form.
        The summed loss is then 0.5 theta'P theta - q'theta + const, so
        the normal equations read P theta = q.
        """
        upto = len(self.losses) if upto is None else upto
        P = None
        q = None
        for f in self.losses[:upto]:
            if isinstance(f, SquaredErrorLoss):
                x = f.features
                if P is None:
                    P = np.zeros((x.size, x.size))
                    q = np.zeros(x.size)
                P += np.outer(x, x)
                q += f.target * x
            elif isinstance(f, StronglyConvexQuadratic):
                c = f.center
                if P is None:
                    P = np.zeros((c.size, c.size))
                    q = np.zeros(c.size)
                P += f.curvature * np.eye(c.size)
                q += f.curvature * c
            else:
                return None
        return (P, q) if P is not None else None


def _power_max_eig(P, iters=500):
    """Upper estimate of the top eigenvalue of a symmetric PSD matrix."""
    v = np.ones(P.shape[0]) / np.sqrt(P.shape[0])
    lam = 0.0
    for _ in range(iters):
        w = P @ v
        norm = float(np.sqrt(w @ w))
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam = norm
    return lam


def _projected_descent(grad_fn, region, start, step, tol, max_iter):
    theta = region.project(np.asarray(start, dtype=float))
    for _ in range(max_iter):
        nxt = region.project(step_vanilla(theta, step, grad_fn(theta)))
        mapping = float(np.sqrt(np.sum((theta - nxt) ** 2))) / step
        theta = nxt
        if mapping <= tol:
            break
    return theta


def quadratic_hindsight(P, q, region=None, tol=HINDSIGHT_TOL, max_iter=200_000):
    """Minimizer of 0.5 theta'P theta - q'theta, optionally constrained.

    Solves the normal equations P theta = q, falling back to the
    ridge-shifted system when P is singular; if a region is given and
    the minimizer leaves it, polishes with projected full-gradient
    descent until the gradient mapping norm is below ``tol``.
    """
    try:
        cand = solve_linear(P, q)
    except SingularSystem:
        cand = solve_linear(P, q, ridge=True)
    if region is None or region.contains(cand):
        return cand
    lam = _power_max_eig(P)
    step = 1.0 / max(lam * 1.05, 1e-12)
    return _projected_descent(lambda th: P @ th - q, region, cand, step, tol, max_iter)


def hindsight_optimum(ledger, region, upto=None, tol=HINDSIGHT_TOL, max_iter=200_000):
    """Best fixed parameter (within the region) for the ledger's prefix.

    Quadratic catalogs: solve the normal equations, falling back to the
    ridge-shifted system when the curvature matrix is singular; if the
    minimizer leaves the region, polish with projected full-gradient
    descent until the gradient mapping norm is below ``tol``.  Generic
    catalogs go straight to projected descent.  The result always lies
    in the region.
    """
    upto = len(ledger) if upto is None else upto
    if upto < 1:
        raise ValueError("hindsight optimum needs at least one record")
    quad = ledger.quadratic_terms(upto)
    if quad is not None:
        P, q = quad
        return quadratic_hindsight(P, q, region, tol, max_iter)

    def grad_fn(theta):
        g = np.zeros_like(np.asarray(theta, dtype=float))
        for f in ledger.losses[:upto]:
            g = g + f.grad(theta)
        return g

    # No curvature information: probe a Lipschitz scale from the start point.
    start = region.project(np.zeros_like(ledger.records[0].gradient, dtype=float))
    g0 = grad_fn(start)
    scale = max(float(np.sqrt(g0 @ g0)), 1.0)
    step = min(1.0 / scale, 1.0)
    best = None
    for _ in range(60):
        cand = _projected_descent(grad_fn, region, start, step, tol, max_iter // 60 + 1)
        val = ledger.loss_sum_at(cand, upto)
        if best is None or val < best[1] - 1e-15:
            best = (cand, val)
            step *= 0.5        # retry finer in case the step was too long
        else:
            break
    return best[0]


def regret(ledger, theta_bar, upto=None):
    """Online loss minus the loss of the fixed comparator (no clamping)."""
    return ledger.online_loss(upto) - ledger.loss_sum_at(theta_bar, upto)


def lyapunov_step(theta_before, theta_after, theta_star):
    """Squared parameter-error energies around one update and their difference."""
    d0 = np.asarray(theta_before, dtype=float) - theta_star
    d1 = np.asarray(theta_after, dtype=float) - theta_star
    v0 = float(d0 @ d0)
    v1 = float(d1 @ d1)
    return v0, v1, v1 - v0


class LyapunovTrace:
    """Sequence of energies V_t with the per-step differences alongside."""

    def __init__(self):
        self.values = []

    def append(self, v):
        if v < 0:
            raise ValueError("energies are nonnegative")
        self.values.append(float(v))

    @property
    def deltas(self):
        v = self.values
        return [v[i + 1] - v[i] for i in range(len(v) - 1)]


def lemma_sqrt_sum(T):
    """(sum_{t<=T} 1/sqrt(t), 2*sqrt(T)); the left side never exceeds the right."""
    if T < 1:
        raise ValueError("T must be >= 1")
    lhs = float(np.sum(1.0 / np.sqrt(np.arange(1, T + 1, dtype=float))))
    return lhs, 2.0 * float(np.sqrt(T))


def lemma_self_normalized(b):
    """(sum_t b_t / sqrt(prefix sums), 2*sqrt(total)) for nonnegative b.

    Terms whose running prefix is still identically zero contribute 0
    (the limit of b/sqrt(b) as b -> 0+), which keeps the validator total;
    negative entries are rejected.
    """
    b = check_finite(np.asarray(b, dtype=float), "sequence")
    if b.ndim != 1 or b.size == 0:
        raise ValueError("expected a nonempty 1-D sequence")
    if np.any(b < 0):
        raise ValueError("sequence entries must be nonnegative")
    prefix = np.cumsum(b)
    terms = np.divide(b, np.sqrt(prefix), out=np.zeros_like(b), where=prefix > 0)
    return float(np.sum(terms)), 2.0 * float(np.sqrt(prefix[-1]))


def corollary_self_normalized(a, bound):
    """Self-normalized sum of squares of a bounded sequence vs 2*bound*sqrt(T)."""
    a = check_finite(np.asarray(a, dtype=float), "sequence")
    if bound <= 0:
        raise ValueError("bound must be positive")
    if np.any(np.abs(a) > bound):
        raise ValueError("sequence exceeds its declared bound")
    lhs, _ = lemma_self_normalized(a * a)
    return lhs, 2.0 * bound * float(np.sqrt(a.size))
