"""Command line wrapper: `banditplots plot --summaries ... --out-prefix ...`."""

from __future__ import annotations

import argparse
import sys

from .render import GridMismatchError, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="banditplots",
        description="Render regret/runtime figures from benchmark summary CSVs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    plot_p = sub.add_parser("plot", help="render the two figures")
    plot_p.add_argument("--summaries", nargs="+", required=True,
                        help="summary CSV paths, one per algorithm")
    plot_p.add_argument("--out-prefix", required=True,
                        help="output path prefix for <prefix>_regret.png and <prefix>_runtime.png")
    plot_p.add_argument("--log-time", action="store_true",
                        help="log-scale the runtime axis (default linear)")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        outputs, _ = render(args.summaries, args.out_prefix, log_time=args.log_time)
    except (OSError, ValueError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in outputs:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
