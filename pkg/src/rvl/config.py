"""Experiment configuration: a flat key = value format, strictly validated.

One ``[experiment]`` section, ``key = value`` pairs, ``#`` comments.
Vectors are comma lists, matrices are semicolon-separated rows.  Every
numeric field is checked against the preconditions of the module that
will consume it, at load time and with the offending line number, so a
config that loads is by construction inside the hypotheses of the
claims the run will verify.
"""

from dataclasses import dataclass, field

import numpy as np

from .learners import Ball, Box
from .oac import CostWeights, PlantModel, UnstabilizableEstimate, dare_solve

KINDS = (
    "convex_ogd",
    "adaptive_grad",
    "strongly_convex",
    "normalized_regression",
    "disturbed_sigma_mod",
    "pe_study",
    "oac",
)

FEATURE_KINDS = ("cycling", "gaussian", "sinusoid", "constant")
DISTURBANCE_KINDS = ("zero", "uniform", "sinusoid", "alternating")
SET_KINDS = ("ball", "box")

_REGRESSION_KINDS = ("normalized_regression", "disturbed_sigma_mod", "pe_study")
_CONVEX_KINDS = ("convex_ogd", "adaptive_grad", "strongly_convex")
_STREAM_KINDS = ("convex_ogd", "adaptive_grad") + _REGRESSION_KINDS
_NON_OAC_KINDS = _STREAM_KINDS + ("strongly_convex",)
_SET_USERS = ("convex_ogd", "adaptive_grad", "strongly_convex", "disturbed_sigma_mod")

# key -> (type tag, kinds that may set it)
_SCHEMA = {
    "kind": ("str", KINDS),
    "seed": ("int", KINDS),
    "T": ("int", KINDS),
    "n": ("int", _NON_OAC_KINDS),
    "set_kind": ("str", _SET_USERS),
    "ball_center": ("vec", _SET_USERS),
    "ball_radius": ("float", _SET_USERS),
    "box_lower": ("vec", _SET_USERS),
    "box_upper": ("vec", _SET_USERS),
    "feature_kind": ("str", _STREAM_KINDS),
    "x_max": ("float", _STREAM_KINDS),
    "scale": ("float", _STREAM_KINDS),
    "frequencies": ("vec", _STREAM_KINDS),
    "amplitudes": ("vec", _STREAM_KINDS),
    "direction": ("vec", _STREAM_KINDS),
    "theta_star": ("vec", _STREAM_KINDS),
    "theta_hat_init": ("vec", _NON_OAC_KINDS),
    "disturbance_kind": ("str", _STREAM_KINDS),
    "d": ("float", _STREAM_KINDS),
    "disturbance_frequency": ("float", _STREAM_KINDS),
    "grad_bound": ("float", ("convex_ogd", "adaptive_grad")),
    "eps_floor": ("float", ("adaptive_grad",)),
    "curvature": ("float", ("strongly_convex",)),
    "center_range": ("float", ("strongly_convex",)),
    "c": ("float", ("strongly_convex",)),
    "alpha": ("float", _REGRESSION_KINDS),
    "m": ("float", _REGRESSION_KINDS),
    "sigma": ("float", ("disturbed_sigma_mod",)),
    "pe_window": ("int", ("pe_study",)),
    "pe_beta": ("float", ("pe_study",)),
    "A_star": ("mat", ("oac",)),
    "B_star": ("mat", ("oac",)),
    "Q": ("mat", ("oac",)),
    "R": ("mat", ("oac",)),
    "noise_std": ("float", ("oac",)),
    "c_xi": ("float", ("oac",)),
    "refresh_period": ("int", ("oac",)),
    "x_init": ("vec", ("oac",)),
}


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass
class ExperimentConfig:
    kind: str
    seed: int
    T: int
    n: int
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        values = object.__getattribute__(self, "values")
        if name in values:
            return values[name]
        raise AttributeError(name)

    def get(self, key, default=None):
        return self.values.get(key, default)

    def region(self):
        if self.values.get("set_kind") == "box":
            return Box(self.values["box_lower"], self.values["box_upper"])
        if self.values.get("set_kind") == "ball":
            return Ball(self.values["ball_center"], self.values["ball_radius"])
        return None

    def resolved_lines(self):
        """Canonical key = value echo of every resolved field."""
        out = [f"kind = {self.kind}", f"seed = {self.seed}", f"T = {self.T}"]
        if self.kind != "oac":
            out.append(f"n = {self.n}")
        for key in sorted(self.values):
            if not key.startswith("_"):
                out.append(f"{key} = {_render(self.values[key])}")
        return out


def _render(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.17g}"
    v = np.asarray(v)
    if v.ndim == 1:
        return ", ".join(f"{x:.17g}" for x in v)
    return "; ".join(", ".join(f"{x:.17g}" for x in row) for row in v)


def _parse_scalar(raw, line, key, kind):
    try:
        if kind == "int":
            if "." in raw or "e" in raw.lower():
                value = float(raw)
                if value != int(value):
                    raise ValueError
                return int(value)
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: malformed number '{raw}'", line) from None


def _parse_vec(raw, line, key):
    try:
        return np.array([float(p) for p in raw.split(",")], dtype=float)
    except ValueError:
        raise ConfigError(f"{key}: malformed vector '{raw}'", line) from None


def _parse_mat(raw, line, key):
    try:
        rows = [[float(p) for p in row.split(",")] for row in raw.split(";")]
    except ValueError:
        raise ConfigError(f"{key}: malformed matrix '{raw}'", line) from None
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"{key}: ragged matrix rows", line)
    return np.array(rows, dtype=float)


def parse_config(path):
    with open(path) as fh:
        return parse_config_text(fh.read(), name=str(path))


def parse_config_text(text, name="<config>"):
    assigned = {}
    section_seen = False
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line != "[experiment]":
                raise ConfigError(f"unknown section {line!r}", lineno)
            if section_seen:
                raise ConfigError("duplicate [experiment] section", lineno)
            section_seen = True
            continue
        if not section_seen:
            raise ConfigError("content before the [experiment] header", lineno)
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key '{key}'", lineno)
        if key in assigned:
            raise ConfigError(f"duplicate key '{key}'", lineno)
        assigned[key] = (raw, lineno)
    if not section_seen:
        raise ConfigError("missing [experiment] section")
    if "kind" not in assigned:
        raise ConfigError("missing required key 'kind'")
    return _resolve(assigned, name)


def _resolve(assigned, name):
    kind_raw, kind_line = assigned["kind"]
    if kind_raw not in KINDS:
        raise ConfigError(f"kind must be one of {', '.join(KINDS)}", kind_line)
    kind = kind_raw

    lines = {}
    values = {}
    for key, (raw, lineno) in assigned.items():
        tag, allowed = _SCHEMA[key]
        if kind not in allowed:
            raise ConfigError(f"key '{key}' is not allowed for kind {kind}", lineno)
        lines[key] = lineno
        if tag == "str":
            values[key] = raw
        elif tag in ("int", "float"):
            values[key] = _parse_scalar(raw, lineno, key, tag)
        elif tag == "vec":
            values[key] = _parse_vec(raw, lineno, key)
        else:
            values[key] = _parse_mat(raw, lineno, key)

    def bad(key, message):
        raise ConfigError(message, lines.get(key))

    values.pop("kind")
    seed = values.pop("seed", 1)
    if seed < 0:
        bad("seed", "seed must be a nonnegative integer")
    T = values.pop("T", 100_000 if kind == "disturbed_sigma_mod" else 10_000)
    if T < 1:
        bad("T", "T must be >= 1")

    if kind == "oac":
        cfg = _resolve_oac(values, bad, kind, seed, T)
    else:
        cfg = _resolve_stream(values, bad, kind, seed, T)
    cfg.values["_name"] = name
    return cfg


def _resolve_stream(values, bad, kind, seed, T):
    n = values.pop("n", 2)
    if not 1 <= n <= 16:
        bad("n", "n must lie in 1..16 (desk-scale experiments)")

    out = {}

    # Truth / initial parameter vectors.
    theta_star = None
    if kind in _STREAM_KINDS:
        if kind in ("convex_ogd", "adaptive_grad"):
            default_star = np.array([(-1.0) ** i for i in range(n)]) / np.sqrt(n)
        elif kind == "disturbed_sigma_mod":
            default_star = 1.5 * np.array([(-0.6) ** i for i in range(n)])
        else:
            default_star = np.array([(-0.5) ** i for i in range(n)])
        theta_star = values.pop("theta_star", default_star)
        if theta_star.size != n:
            bad("theta_star", f"theta_star must have {n} entries")
        out["theta_star"] = theta_star
    theta_init = values.pop("theta_hat_init", np.zeros(n))
    if theta_init.size != n:
        bad("theta_hat_init", f"theta_hat_init must have {n} entries")
    out["theta_hat_init"] = theta_init

    # Feature generator.
    if kind == "strongly_convex":
        for key in ("feature_kind", "x_max", "scale", "frequencies", "amplitudes",
                    "direction", "disturbance_kind", "d", "disturbance_frequency"):
            if key in values:
                bad(key, f"key '{key}' is not allowed for kind {kind}")
    else:
        feature_kind = values.pop(
            "feature_kind", "cycling" if kind in _REGRESSION_KINDS else "gaussian"
        )
        if feature_kind not in FEATURE_KINDS:
            bad("feature_kind", f"feature_kind must be one of {', '.join(FEATURE_KINDS)}")
        out["feature_kind"] = feature_kind
        if feature_kind == "gaussian":
            x_max = values.pop("x_max", 2.0 if kind == "disturbed_sigma_mod" else 1.0)
            if x_max <= 0:
                bad("x_max", "x_max must be positive")
            out["x_max"] = float(x_max)
        elif feature_kind == "cycling":
            scale = values.pop("scale", 1.0)
            if scale <= 0:
                bad("scale", "scale must be positive")
            out["scale"] = float(scale)
        elif feature_kind == "sinusoid":
            freqs = values.pop("frequencies", 0.5 + 0.3 * np.arange(n))
            amps = values.pop("amplitudes", np.ones(n))
            if freqs.size != n or amps.size != n:
                bad("frequencies", f"frequencies/amplitudes must have {n} entries")
            if np.any(amps <= 0):
                bad("amplitudes", "amplitudes must be positive")
            out["frequencies"] = freqs
            out["amplitudes"] = amps
        else:
            direction = values.pop("direction", np.eye(n)[0])
            if direction.size != n or not np.any(direction != 0):
                bad("direction", f"direction must be a nonzero vector of {n} entries")
            out["direction"] = direction

        # Disturbance.
        disturbance_kind = values.pop(
            "disturbance_kind",
            "zero" if kind in ("normalized_regression", "pe_study") else "uniform",
        )
        if disturbance_kind not in DISTURBANCE_KINDS:
            bad("disturbance_kind",
                f"disturbance_kind must be one of {', '.join(DISTURBANCE_KINDS)}")
        if kind in ("normalized_regression", "pe_study") and disturbance_kind != "zero":
            bad("disturbance_kind",
                f"{kind} verifies a clean-stream claim; disturbance_kind must be zero")
        out["disturbance_kind"] = disturbance_kind
        default_d = 0.0 if disturbance_kind == "zero" else (
            0.5 if kind == "disturbed_sigma_mod" else 0.1)
        d = values.pop("d", default_d)
        if d < 0:
            bad("d", "d must be nonnegative")
        if disturbance_kind == "zero" and d != 0.0:
            bad("d", "d must be 0 for a zero disturbance")
        out["d"] = float(d)
        if disturbance_kind == "sinusoid" or "disturbance_frequency" in values:
            freq = values.pop("disturbance_frequency", 0.37)
            if freq <= 0:
                bad("disturbance_frequency", "disturbance_frequency must be positive")
            out["disturbance_frequency"] = float(freq)

    # Constraint set.
    if kind in _SET_USERS:
        set_kind = values.pop("set_kind", "ball")
        if set_kind not in SET_KINDS:
            bad("set_kind", f"set_kind must be one of {', '.join(SET_KINDS)}")
        out["set_kind"] = set_kind
        if set_kind == "ball":
            center = values.pop("ball_center", np.zeros(n))
            if center.size != n:
                bad("ball_center", f"ball_center must have {n} entries")
            default_radius = {"convex_ogd": 1.0, "adaptive_grad": 1.0,
                              "strongly_convex": 2.0}.get(kind)
            if default_radius is None:  # disturbed_sigma_mod
                default_radius = 2.0 * float(np.sqrt(theta_star @ theta_star))
            radius = values.pop("ball_radius", default_radius)
            if radius <= 0:
                bad("ball_radius", "ball_radius must be positive")
            out["ball_center"] = center
            out["ball_radius"] = float(radius)
        else:
            lower = values.pop("box_lower", -np.ones(n))
            upper = values.pop("box_upper", np.ones(n))
            if lower.size != n or upper.size != n:
                bad("box_lower", f"box bounds must have {n} entries")
            if not np.all(lower < upper):
                bad("box_lower", "box_lower must be strictly below box_upper")
            out["box_lower"] = lower
            out["box_upper"] = upper
        for key in ("ball_center", "ball_radius", "box_lower", "box_upper"):
            if key in values:
                bad(key, f"key '{key}' does not belong to set_kind {set_kind}")

    # Schedules and kind-specific scalars.
    if kind in ("convex_ogd", "adaptive_grad"):
        if "grad_bound" in values:
            g = values.pop("grad_bound")
            if g <= 0:
                bad("grad_bound", "grad_bound must be positive")
            out["grad_bound"] = float(g)
        if kind == "adaptive_grad":
            eps = values.pop("eps_floor", 1e-12)
            if eps <= 0:
                bad("eps_floor", "eps_floor must be positive")
            out["eps_floor"] = float(eps)
    if kind == "strongly_convex":
        mu = values.pop("curvature", 1.0)
        if mu <= 0:
            bad("curvature", "curvature must be positive")
        out["curvature"] = float(mu)
        rng_box = values.pop("center_range", 1.0)
        if rng_box <= 0:
            bad("center_range", "center_range must be positive")
        out["center_range"] = float(rng_box)
        c = values.pop("c", 1.0 / mu)
        if c <= 0:
            bad("c", "c must be positive")
        out["c"] = float(c)
    if kind in _REGRESSION_KINDS:
        alpha = values.pop("alpha", 0.02 if kind == "pe_study" else 1.0)
        if not 0.0 < alpha < 2.0:
            bad("alpha", "alpha must lie in (0,2)")
        out["alpha"] = float(alpha)
        m = values.pop("m", 1.1 if kind == "disturbed_sigma_mod" else 1.0)
        if m <= 0:
            bad("m", "m must be positive")
        out["m"] = float(m)
    if kind == "disturbed_sigma_mod":
        if out["m"] <= max(out["d"], 1.0):
            bad("m", "m must exceed max{d,1}")
        sigma = values.pop("sigma", 0.1)
        if sigma <= 0:
            bad("sigma", "sigma must be positive")
        out["sigma"] = float(sigma)
    if kind == "pe_study":
        window = values.pop("pe_window", 2)
        if window < 1:
            bad("pe_window", "pe_window must be >= 1")
        if T < window + 1:
            bad("pe_window", "pe_window + 1 exceeds the horizon")
        out["pe_window"] = int(window)
        beta = values.pop("pe_beta", 0.5)
        if beta <= 0:
            bad("pe_beta", "pe_beta must be positive")
        out["pe_beta"] = float(beta)

    for key in values:
        bad(key, f"key '{key}' is not allowed for kind {kind}")

    cfg = ExperimentConfig(kind=kind, seed=int(seed), T=int(T), n=int(n), values=out)
    _check_membership(cfg, bad)
    return cfg


def _check_membership(cfg, bad):
    region = cfg.region()
    if region is None:
        return
    if cfg.kind == "disturbed_sigma_mod" and not region.contains(cfg.theta_star):
        bad("theta_star", "theta_star must lie inside the constraint set")


def _resolve_oac(values, bad, kind, seed, T):
    if "A_star" not in values or "B_star" not in values:
        raise ConfigError("oac configs require A_star and B_star")
    A = values.pop("A_star")
    B = values.pop("B_star")
    if A.shape[0] != A.shape[1]:
        bad("A_star", "A_star must be square")
    n = A.shape[0]
    if n > 16:
        bad("A_star", "state dimension must be <= 16")
    if B.shape[0] != n:
        bad("B_star", "B_star must have as many rows as A_star")
    m = B.shape[1]
    Q = values.pop("Q", np.eye(n))
    R = values.pop("R", np.eye(m))
    if Q.shape != (n, n):
        bad("Q", f"Q must be {n}x{n}")
    if R.shape != (m, m):
        bad("R", f"R must be {m}x{m}")
    try:
        weights = CostWeights(Q, R)
    except ValueError as exc:
        bad("Q", str(exc))
    noise_std = values.pop("noise_std", 0.1)
    if noise_std < 0:
        bad("noise_std", "noise_std must be nonnegative")
    c_xi = values.pop("c_xi", 0.5)
    if c_xi < 0:
        bad("c_xi", "c_xi must be nonnegative")
    refresh = values.pop("refresh_period", 1)
    if refresh < 1:
        bad("refresh_period", "refresh_period must be >= 1")
    x_init = values.pop("x_init", np.zeros(n))
    if x_init.size != n:
        bad("x_init", f"x_init must have {n} entries")
    for key in values:
        bad(key, f"key '{key}' is not allowed for kind {kind}")
    try:
        dare_solve(A, B, weights.Q, weights.R)
    except UnstabilizableEstimate:
        bad("A_star", "(A_star, B_star) is not stabilizable: the Riccati solve failed")
    out = {
        "A_star": A, "B_star": B, "Q": weights.Q, "R": weights.R,
        "noise_std": float(noise_std), "c_xi": float(c_xi),
        "refresh_period": int(refresh), "x_init": x_init,
    }
    return ExperimentConfig(kind=kind, seed=int(seed), T=int(T), n=int(n), values=out)


def plant_from_config(cfg):
    return PlantModel(cfg.A_star, cfg.B_star, cfg.noise_std)
