"""Command-line entry points: run experiments and compare runtime summaries.

Exit codes: 0 on success, 2 for configuration errors, 3 for runtime or
convergence failures.
"""

from __future__ import annotations

import argparse
import sys

from .runner import (
    ConfigError,
    ExperimentConfig,
    compare_runtimes,
    read_summary_csv,
    run_experiment,
    write_compare_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="huberbandit",
        description="Heavy-tailed linear bandit benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment")
    run_p.add_argument("--config", required=True, help="path to a JSON experiment config")
    run_p.add_argument("--algo", help="override the configured algorithm")
    run_p.add_argument("--seed", type=int, help="override the master seed")
    run_p.add_argument("--trials", type=int, help="override the trial count")
    run_p.add_argument("--horizon", type=int, help="override the horizon T")
    run_p.add_argument("--out", help="override the output directory")

    cmp_p = sub.add_parser("compare", help="compare two summary CSVs")
    cmp_p.add_argument("--a", required=True, help="first summary CSV")
    cmp_p.add_argument("--b", required=True, help="second summary CSV")
    cmp_p.add_argument("--out", required=True, help="output report CSV")
    return parser


def _apply_overrides(config, args):
    overrides = {}
    if args.algo is not None:
        overrides["algo"] = args.algo
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.horizon is not None:
        overrides["T"] = args.horizon
    if args.out is not None:
        overrides["out_dir"] = args.out
    if not overrides:
        return config
    from dataclasses import replace

    return replace(config, **overrides)


def cmd_run(args):
    config = ExperimentConfig.from_json(args.config)
    config = _apply_overrides(config, args)
    summary = run_experiment(config)
    final_regret = summary.mean_cum_regret[-1] if len(summary.checkpoints) else 0.0
    total_s = (summary.mean_cum_time_ns[-1] / 1e9) if len(summary.checkpoints) else 0.0
    print(
        f"{config.algo}: {config.trials} trial(s) x {config.T} rounds, "
        f"mean final regret {final_regret:.2f}, "
        f"mean algorithmic time {total_s:.2f}s"
    )
    print(f"rounds:  {summary.rounds_path}")
    print(f"summary: {summary.summary_path}")
    return EXIT_OK


def cmd_compare(args):
    try:
        a = read_summary_csv(args.a)
        b = read_summary_csv(args.b)
        report = compare_runtimes(a, b)
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    write_compare_csv(args.out, report)
    print(
        f"total time {report['algo_b']} / {report['algo_a']} = "
        f"{report['total_time_ratio_b_over_a']:.2f}"
    )
    for side in ("a", "b"):
        s = report[side]
        print(
            f"{report['algo_' + side]}: per-round slope {s['per_round_slope_ns']:.4g} ns/round "
            f"({100 * s['slope_fraction_of_mean']:.3g}% of mean, "
            f"p_positive={s['p_slope_positive']:.3g})"
        )
    print(f"report: {args.out}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # runtime / convergence failures
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
