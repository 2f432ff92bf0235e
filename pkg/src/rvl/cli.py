"""Experiment runner CLI: ``run``, ``suite`` and ``lemmas`` subcommands.

Exit codes double as verdicts so a shell script can consume the suite
without a test framework: 0 means every checked bound held, 1 means a
verdict failed or a run aborted, 2 means the config did not load.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .csvio import write_text
from .metrics import corollary_self_normalized, lemma_self_normalized, lemma_sqrt_sum
from .numerics import SeededRng
from .runner import execute

TL1_MAX_T = 1_000_000
TL2_MAX_LEN = 1000
TL2_MAX_ENTRY = 1000.0


def _resolve_out_dir(flag):
    out = flag or os.environ.get("RVL_OUT") or "rvl_out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(args):
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    result = execute(cfg, seed=args.seed)
    out_dir = _resolve_out_dir(args.out)
    stem = Path(args.config).stem
    csv_path = out_dir / f"{stem}_steps.csv"
    summary_path = out_dir / f"{stem}_summary.txt"
    write_text(csv_path, result.csv_text)
    write_text(summary_path, result.summary_text())
    for name, ok in result.verdicts.items():
        print(f"{result.kind}[seed={result.seed}] {name}: {'pass' if ok else 'FAIL'}")
    print(f"wrote {csv_path} and {summary_path}")
    return 0 if result.passed else 1


def cmd_suite(args):
    paths = sorted(Path(args.directory).glob("*.cfg"))
    if not paths:
        print(f"error: no .cfg files under {args.directory}", file=sys.stderr)
        return 2
    out_dir = _resolve_out_dir(args.out)
    worst = 0
    rows = []
    for path in paths:
        try:
            cfg = parse_config(path)
        except ConfigError as exc:
            rows.append((path.name, "-", f"load error: {exc}"))
            worst = max(worst, 2)
            continue
        result = execute(cfg)
        write_text(out_dir / f"{path.stem}_steps.csv", result.csv_text)
        write_text(out_dir / f"{path.stem}_summary.txt", result.summary_text())
        status = "pass" if result.passed else "FAIL"
        failing = [k for k, ok in result.verdicts.items() if not ok]
        note = "" if result.passed else f"failed: {', '.join(failing)}"
        rows.append((path.name, result.kind, f"{status} {note}".strip()))
        if not result.passed:
            worst = max(worst, 1)
    width = max(len(r[0]) for r in rows)
    kind_width = max(len(r[1]) for r in rows)
    for name, kind, status in rows:
        print(f"{name:<{width}}  {kind:<{kind_width}}  {status}")
    return worst


def cmd_lemmas(args):
    failures = 0

    lhs, rhs = lemma_sqrt_sum(TL1_MAX_T)
    partial = np.cumsum(1.0 / np.sqrt(np.arange(1, TL1_MAX_T + 1, dtype=float)))
    bound = 2.0 * np.sqrt(np.arange(1, TL1_MAX_T + 1, dtype=float))
    tl1_violations = int(np.sum(partial > bound))
    failures += tl1_violations
    print(f"sqrt-sum bound, all T <= {TL1_MAX_T}: {tl1_violations} violations "
          f"(at T={TL1_MAX_T}: {lhs:.6f} <= {rhs:.6f})")

    rng = SeededRng(args.seed)
    tl2_violations = 0
    cor_violations = 0
    worst_ratio = 0.0
    amp = np.sqrt(TL2_MAX_ENTRY)
    for _ in range(args.trials):
        length = 1 + int(rng.uniform() * TL2_MAX_LEN)
        raw = rng.uniforms(length) * TL2_MAX_ENTRY
        mask = rng.uniforms(length) < 0.1
        raw[mask] = 0.0       # exercise the zero-prefix convention
        lhs, rhs = lemma_self_normalized(raw)
        if lhs > rhs:
            tl2_violations += 1
        if rhs > 0:
            worst_ratio = max(worst_ratio, lhs / rhs)
        signed = (2.0 * rng.uniforms(length) - 1.0) * amp
        lhs_c, rhs_c = corollary_self_normalized(signed, amp)
        if lhs_c > rhs_c:
            cor_violations += 1
    failures += tl2_violations + cor_violations
    print(f"self-normalized bound, {args.trials} random sequences: "
          f"{tl2_violations} violations (worst lhs/rhs = {worst_ratio:.6f})")
    print(f"bounded-sequence corollary, {args.trials} random sequences: "
          f"{cor_violations} violations")
    return 0 if failures == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rvl",
        description="Run online-learning and adaptive-control experiments "
                    "and check their bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None, help="override the configured seed")
    p_run.add_argument("--out", default=None, help="output directory (default $RVL_OUT or ./rvl_out)")
    p_run.set_defaults(func=cmd_run)

    p_suite = sub.add_parser("suite", help="run every .cfg config in a directory")
    p_suite.add_argument("directory")
    p_suite.add_argument("--out", default=None)
    p_suite.set_defaults(func=cmd_suite)

    p_lem = sub.add_parser("lemmas", help="run the summation-bound validators standalone")
    p_lem.add_argument("--trials", type=int, default=10_000)
    p_lem.add_argument("--seed", type=int, default=1)
    p_lem.set_defaults(func=cmd_lemmas)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
