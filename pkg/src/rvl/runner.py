"""Experiment execution: wire a config into streams, learners and metrics.

``execute`` runs one configured experiment deterministically, evaluates
the bound verdicts that make the run meaningful, and renders the
per-step CSV plus a flat key = value summary whose scalars can all be
recomputed from the CSV alone.
"""

import hashlib
import time
from dataclasses import dataclass, field

import numpy as np

from . import csvio
from .arena import (
    AlternatingDisturbance,
    ClippedGaussianFeatures,
    ConstantFeatures,
    CyclingBasisFeatures,
    RegressionStream,
    SinusoidDisturbance,
    SinusoidFeatures,
    UniformDisturbance,
    ZeroDisturbance,
    pe_certificate,
)
from .config import plant_from_config
from .learners import (
    AdaptiveGradRate,
    Ball,
    InverseTRate,
    NormalizedRate,
    SigmaRule,
    SqrtTRate,
)
from .losses import LossRecord, SquaredErrorLoss, StronglyConvexQuadratic, squared_error_grad_bound
from .metrics import (
    RegretLedger,
    hindsight_optimum,
    lemma_self_normalized,
    quadratic_hindsight,
    regret,
)
from .numerics import SeededRng, substream_seed
from .oac import CostWeights, oac_rollout

REGRESSION_HEADER = ("t", "eta", "loss", "e", "V", "dV", "reg_partial")
OAC_HEADER = ("t", "cost", "cost_opt", "reg_partial", "sigma_xi", "gain_flag")
CHECKPOINTS = (100, 1000, 10_000)

THEOREM_BOUND_FACTOR = 3.0          # projected descent under the 1/sqrt(t) rate
ADAPTIVE_BOUND_FACTOR = 6.0         # twice the 1/sqrt(t) budget
DESCENT_TOL = 1e-12
TAIL_ERROR_TOL = 1e-6
ERROR_SUP_BOUND = 1e3
ESTIMATE_SUP_FACTOR = 10.0
LOG_RATIO_LIMIT = 3.0


@dataclass
class RunResult:
    kind: str
    seed: int
    summary: dict
    verdicts: dict
    csv_text: str
    trace: dict = field(default_factory=dict)
    config_lines: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.verdicts.values())

    @property
    def csv_sha256(self):
        return hashlib.sha256(self.csv_text.encode()).hexdigest()

    def summary_text(self):
        lines = [f"kind = {self.kind}", f"seed = {self.seed}"]
        for key, value in self.summary.items():
            lines.append(f"{key} = {csvio.format_value(value)}")
        for key, value in self.verdicts.items():
            lines.append(f"verdict_{key} = {csvio.format_value(value)}")
        lines.append(f"csv_sha256 = {self.csv_sha256}")
        for cfg_line in self.config_lines:
            lines.append(f"config.{cfg_line}")
        return "\n".join(lines) + "\n"


def checkpoint_list(T):
    return sorted({c for c in CHECKPOINTS if c <= T} | {T})


def build_features(cfg, seed):
    kind = cfg.get("feature_kind")
    if kind == "cycling":
        return CyclingBasisFeatures(cfg.n, cfg.scale)
    if kind == "gaussian":
        return ClippedGaussianFeatures(cfg.n, cfg.x_max, SeededRng(substream_seed(seed, 1)))
    if kind == "sinusoid":
        return SinusoidFeatures(cfg.frequencies, cfg.amplitudes)
    return ConstantFeatures(cfg.direction)


def build_disturbance(cfg, seed):
    kind = cfg.get("disturbance_kind", "zero")
    if kind == "zero" or cfg.d == 0.0:
        return ZeroDisturbance()
    if kind == "uniform":
        return UniformDisturbance(cfg.d, SeededRng(substream_seed(seed, 2)))
    if kind == "sinusoid":
        return SinusoidDisturbance(cfg.d, cfg.get("disturbance_frequency", 0.37))
    return AlternatingDisturbance(cfg.d)


def build_stream(cfg, seed):
    return RegressionStream(cfg.theta_star, build_features(cfg, seed),
                            build_disturbance(cfg, seed))


def execute(cfg, seed=None):
    """Run one experiment; ``seed`` overrides the configured one."""
    seed = cfg.seed if seed is None else int(seed)
    start = time.perf_counter()
    if cfg.kind in ("convex_ogd", "adaptive_grad"):
        result = _run_projected_ogd(cfg, seed)
    elif cfg.kind == "strongly_convex":
        result = _run_strongly_convex(cfg, seed)
    elif cfg.kind in ("normalized_regression", "disturbed_sigma_mod", "pe_study"):
        result = _run_regression(cfg, seed)
    elif cfg.kind == "oac":
        result = _run_oac(cfg, seed)
    else:
        raise ValueError(f"unknown experiment kind {cfg.kind}")
    result.summary["runtime_seconds"] = time.perf_counter() - start
    result.config_lines = cfg.resolved_lines()
    return result


def _regression_rows(eta, loss, err, V, dV, reg_partial):
    T = len(loss)
    return [
        (t + 1, eta[t], loss[t], err[t], V[t], dV[t], reg_partial[t])
        for t in range(T)
    ]


def _run_projected_ogd(cfg, seed):
    T, n = cfg.T, cfg.n
    stream = build_stream(cfg, seed)
    region = cfg.region()
    diameter = region.diameter
    x_max = stream.features.x_max
    star_norm = float(np.sqrt(cfg.theta_star @ cfg.theta_star))
    y_max = star_norm * x_max + cfg.d
    grad_bound = cfg.get("grad_bound") or squared_error_grad_bound(x_max, diameter, y_max)

    if cfg.kind == "convex_ogd":
        schedule = SqrtTRate(diameter, grad_bound)
        factor = THEOREM_BOUND_FACTOR
    else:
        schedule = AdaptiveGradRate(diameter, cfg.eps_floor)
        factor = ADAPTIVE_BOUND_FACTOR

    theta = np.asarray(cfg.theta_hat_init, dtype=float)
    init_projected = not region.contains(theta)
    theta = region.project(theta)

    X, Y = stream.emit_block(1, T)
    ledger = RegretLedger()
    history = np.zeros((T + 1, n))
    history[0] = theta
    eta_seq = np.zeros(T)
    loss_seq = np.zeros(T)
    err_seq = np.zeros(T)
    grad_norms = np.zeros(T)
    for t in range(1, T + 1):
        x, y = X[t - 1], float(Y[t - 1])
        loss_fn = SquaredErrorLoss(x, y)
        e = float(theta @ x) - y
        g = e * x
        eta = schedule.rate(t, grad=g, features=x)
        ledger.append(loss_fn, LossRecord(t, 0.5 * e * e, g, {"e": e}))
        eta_seq[t - 1] = eta
        loss_seq[t - 1] = 0.5 * e * e
        err_seq[t - 1] = e
        grad_norms[t - 1] = float(np.sqrt(g @ g))
        theta = region.project(theta - eta * g)
        history[t] = theta

    marks = checkpoint_list(T)
    regrets = {}
    bounds = {}
    for c in marks:
        theta_bar = hindsight_optimum(ledger, region, upto=c)
        regrets[c] = regret(ledger, theta_bar, upto=c)
        bounds[c] = factor * grad_bound * diameter * np.sqrt(c)
    bound_ok = all(regrets[c] <= bounds[c] for c in marks)
    rates = [regrets[c] / c for c in marks]
    avg_decreasing = all(rates[i + 1] < rates[i] for i in range(len(rates) - 1))

    theta_bar_T = hindsight_optimum(ledger, region, upto=T)
    comparator_losses = 0.5 * (X @ theta_bar_T - Y) ** 2
    reg_partial = np.cumsum(loss_seq) - np.cumsum(comparator_losses)

    V = np.sum((history - cfg.theta_star) ** 2, axis=1)
    dV = np.diff(V)

    verdicts = {"regret_bound": bound_ok, "avg_regret_decreasing": avg_decreasing}
    summary = {
        "T": T, "n": n, "diameter": diameter, "grad_bound": grad_bound,
        "init_projected": init_projected,
        "max_grad_norm": float(np.max(grad_norms)),
        "regret_final": regrets[T], "bound_final": bounds[T],
    }
    for c in marks:
        summary[f"regret_{c}"] = regrets[c]
        summary[f"bound_{c}"] = bounds[c]
    if cfg.kind == "adaptive_grad":
        lhs, _ = lemma_self_normalized(grad_norms ** 2)
        rhs = 2.0 * grad_bound * np.sqrt(T)
        verdicts["corollary_bound"] = lhs <= rhs
        summary["self_normalized_sum"] = lhs
        summary["self_normalized_bound"] = rhs

    rows = _regression_rows(eta_seq, loss_seq, err_seq, V[:-1], dV, reg_partial)
    return RunResult(
        kind=cfg.kind, seed=seed, summary=summary, verdicts=verdicts,
        csv_text=csvio.render_csv(REGRESSION_HEADER, rows),
        trace={"history": history, "regrets": regrets, "bounds": bounds,
               "grad_norms": grad_norms, "eta": eta_seq, "X": X, "Y": Y},
    )


def _run_strongly_convex(cfg, seed):
    T, n = cfg.T, cfg.n
    region = cfg.region()
    mu = cfg.curvature
    schedule = InverseTRate(cfg.c)
    rng = SeededRng(substream_seed(seed, 3))
    centers = (2.0 * rng.uniforms(T * n).reshape(T, n) - 1.0) * cfg.center_range

    theta = region.project(np.asarray(cfg.get("theta_hat_init", np.zeros(n)), dtype=float))
    ledger = RegretLedger()
    history = np.zeros((T + 1, n))
    history[0] = theta
    eta_seq = np.zeros(T)
    loss_seq = np.zeros(T)
    for t in range(1, T + 1):
        loss_fn = StronglyConvexQuadratic(centers[t - 1], mu)
        value = loss_fn.value(theta)
        g = loss_fn.grad(theta)
        eta = schedule.rate(t)
        ledger.append(loss_fn, LossRecord(t, value, g))
        eta_seq[t - 1] = eta
        loss_seq[t - 1] = value
        theta = region.project(theta - eta * g)
        history[t] = theta

    marks = checkpoint_list(T)
    regrets = {}
    for c in marks:
        theta_bar = hindsight_optimum(ledger, region, upto=c)
        regrets[c] = regret(ledger, theta_bar, upto=c)
    ratios = [regrets[c] / np.log(c) for c in marks if c > 1]
    if ratios and min(ratios) > 0:
        log_ok = max(ratios) <= LOG_RATIO_LIMIT * min(ratios)
    else:
        log_ok = False

    theta_bar_T = hindsight_optimum(ledger, region, upto=T)
    comparator = 0.5 * mu * np.sum((centers - theta_bar_T) ** 2, axis=1)
    reg_partial = np.cumsum(loss_seq) - np.cumsum(comparator)
    err_seq = np.sqrt(2.0 * loss_seq)
    V = np.sum((history - theta_bar_T) ** 2, axis=1)
    dV = np.diff(V)

    verdicts = {"log_regret_ratio": log_ok}
    summary = {"T": T, "n": n, "curvature": mu, "rate_constant": cfg.c,
               "regret_final": regrets[T]}
    for c in marks:
        summary[f"regret_{c}"] = regrets[c]
        if c > 1:
            summary[f"regret_per_log_{c}"] = regrets[c] / np.log(c)

    rows = _regression_rows(eta_seq, loss_seq, err_seq, V[:-1], dV, reg_partial)
    return RunResult(
        kind=cfg.kind, seed=seed, summary=summary, verdicts=verdicts,
        csv_text=csvio.render_csv(REGRESSION_HEADER, rows),
        trace={"history": history, "regrets": regrets, "centers": centers},
    )


def _bounding_radius(region):
    if isinstance(region, Ball):
        return float(np.sqrt(region.center @ region.center)) + region.radius
    corners = np.abs(np.stack([region.lower, region.upper]))
    return float(np.sqrt(np.sum(np.max(corners, axis=0) ** 2)))


def _run_regression(cfg, seed):
    T, n = cfg.T, cfg.n
    stream = build_stream(cfg, seed)
    schedule = NormalizedRate(cfg.alpha, cfg.m)
    sigma_rule = None
    region = cfg.region() if cfg.kind == "disturbed_sigma_mod" else None
    if cfg.kind == "disturbed_sigma_mod":
        sigma_rule = SigmaRule(cfg.sigma, region)

    X, Y = stream.emit_block(1, T)
    sq_norms = np.sum(X * X, axis=1)
    theta = np.asarray(cfg.theta_hat_init, dtype=float).copy()
    history = np.zeros((T + 1, n))
    history[0] = theta
    err_seq = np.zeros(T)
    sigma_seq = np.zeros(T)
    alpha, m = cfg.alpha, cfg.m
    for t in range(T):
        x = X[t]
        e = float(theta @ x) - float(Y[t])
        err_seq[t] = e
        eta = alpha / (m + sq_norms[t])
        if sigma_rule is not None:
            sigma_t = sigma_rule.switch(theta)
            sigma_seq[t] = sigma_t
            theta = theta - (eta * e) * x - sigma_t * theta
        else:
            theta = theta - (eta * e) * x
        history[t + 1] = theta

    eta_seq = alpha / (m + sq_norms)
    loss_seq = 0.5 * err_seq ** 2
    diffs = history - cfg.theta_star
    V = np.sum(diffs * diffs, axis=1)
    dV = np.diff(V)

    # Hindsight comparator for the regret column (diagnostic for these runs).
    P = X.T @ X
    q = X.T @ Y
    theta_bar = quadratic_hindsight(P, q, region)
    reg_partial = np.cumsum(loss_seq) - np.cumsum(0.5 * (X @ theta_bar - Y) ** 2)

    x_max = stream.features.x_max
    summary = {
        "T": T, "n": n, "alpha": alpha, "m": m, "x_max": x_max,
        "max_dV": float(np.max(dV)),
        "sum_sq_error": float(np.sum(err_seq ** 2)),
        "initial_energy": float(V[0]),
        "final_energy": float(V[-1]),
        "final_tilde_norm": float(np.sqrt(V[-1])),
        "max_tail_error": float(np.max(np.abs(err_seq[T // 2:]))),
    }
    verdicts = {}

    if cfg.kind == "normalized_regression":
        energy_budget = (m + x_max ** 2) / (alpha * (2.0 - alpha)) * V[0]
        verdicts["lyapunov_descent"] = summary["max_dV"] <= DESCENT_TOL
        verdicts["error_energy"] = summary["sum_sq_error"] <= energy_budget
        verdicts["error_tail"] = summary["max_tail_error"] <= TAIL_ERROR_TOL
        summary["error_energy_budget"] = energy_budget
    elif cfg.kind == "disturbed_sigma_mod":
        bound_radius = _bounding_radius(region)
        est_norms = np.sqrt(np.sum(history * history, axis=1))
        sign_terms = np.einsum("ij,ij->i", history[:-1], diffs[:-1])
        violations = int(np.sum((sigma_seq > 0) & (sign_terms <= 0)))
        verdicts["estimate_bounded"] = float(np.max(est_norms)) <= ESTIMATE_SUP_FACTOR * bound_radius
        verdicts["error_bounded"] = float(np.max(np.abs(err_seq))) <= ERROR_SUP_BOUND
        verdicts["sigma_sign"] = violations == 0
        summary["max_estimate_norm"] = float(np.max(est_norms))
        summary["estimate_norm_bound"] = ESTIMATE_SUP_FACTOR * bound_radius
        summary["max_abs_error"] = float(np.max(np.abs(err_seq)))
        summary["sigma_active_steps"] = int(np.sum(sigma_seq > 0))
        summary["sigma_sign_violations"] = violations
    else:  # pe_study
        cert = pe_certificate(X, cfg.pe_window, cfg.pe_beta)
        summary["pe_certified"] = cert.verdict
        summary["pe_worst_start"] = cert.worst_start
        summary["pe_margin"] = cert.worst_margin
        tilde = np.sqrt(V)
        verdicts["error_tail"] = summary["max_tail_error"] <= TAIL_ERROR_TOL
        if cert.verdict:
            marks = [c for c in checkpoint_list(T) if c > 1]
            norms = [tilde[c - 1] for c in marks]
            verdicts["tilde_decays"] = all(
                norms[i + 1] < norms[i] for i in range(len(norms) - 1)
            )
            grid = np.unique(np.linspace(1, T, num=min(T, 200), dtype=int))
            logs = np.log(np.maximum(tilde[grid - 1], 1e-300))
            slope = np.polyfit(grid.astype(float), logs, 1)[0]
            verdicts["tilde_log_slope_negative"] = slope < 0
            summary["tilde_log_slope"] = float(slope)
            for c in marks:
                summary[f"tilde_norm_{c}"] = float(tilde[c - 1])
        else:
            verdicts["tilde_residual"] = tilde[-1] >= 0.1 * tilde[0]
            summary["tilde_residual_ratio"] = float(tilde[-1] / tilde[0]) if tilde[0] else 0.0

    rows = _regression_rows(eta_seq, loss_seq, err_seq, V[:-1], dV, reg_partial)
    return RunResult(
        kind=cfg.kind, seed=seed, summary=summary, verdicts=verdicts,
        csv_text=csvio.render_csv(REGRESSION_HEADER, rows),
        trace={"history": history, "X": X, "Y": Y, "err": err_seq,
               "sigma": sigma_seq, "V": V},
    )


def _run_oac(cfg, seed):
    plant = plant_from_config(cfg)
    weights = CostWeights(cfg.Q, cfg.R)
    trace = oac_rollout(
        plant, weights, cfg.T, cfg.c_xi,
        refresh_period=cfg.refresh_period, seed=seed, x_init=cfg.x_init,
    )
    steps = trace.steps
    est_err = max(
        float(np.max(np.abs(trace.A_hat - plant.A))),
        float(np.max(np.abs(trace.B_hat - plant.B))),
    )
    sigma = trace.explore_std[:steps]
    decreasing = bool(np.all(np.diff(sigma) < 0)) if cfg.c_xi > 0 and steps > 1 else True

    verdicts = {"completed": not trace.aborted, "exploration_decreasing": decreasing}
    summary = {
        "T": cfg.T, "steps": steps, "regret_final": trace.regret,
        "estimate_error_max": est_err,
        "gain_hold_steps": int(np.sum(trace.gain_flags[:steps])),
        "low_excitation": bool(trace.extras.get("low_excitation", False)),
        "final_exploration_std": float(sigma[-1]) if steps else 0.0,
    }
    rows = [
        (t + 1, trace.costs[t], trace.opt_costs[t], trace.reg_partial[t],
         trace.explore_std[t], int(trace.gain_flags[t]))
        for t in range(steps)
    ]
    return RunResult(
        kind=cfg.kind, seed=seed, summary=summary, verdicts=verdicts,
        csv_text=csvio.render_csv(OAC_HEADER, rows),
        trace={"oac": trace},
    )
