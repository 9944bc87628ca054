"""Command line entry point: ``copulascen {fit,sample,validate,plot-data}``.

Exit codes: 0 success, 1 validation failure, 2 usage/config error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import CopulaScenError
from .pipeline import cmd_fit, cmd_sample, cmd_validate, emit_plot_data

EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="copulascen",
        description="Fit copula scenario models to historical data and generate scenarios.",
    )
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit marginals and a dependence model from a CSV")
    p.add_argument("--config", required=True, help="JSON fit configuration")
    p.add_argument("--out", help="bundle path (overrides the config's 'output')")

    p = sub.add_parser("sample", help="generate scenarios from a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--count", required=True, type=int)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads; output does not depend on this")

    p = sub.add_parser("validate", help="compare scenarios against the fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--scenarios", required=True)
    p.add_argument("--ks-max", type=float, default=0.05, dest="ks_max")
    p.add_argument("--rank-max", type=float, default=0.05, dest="rank_max")
    p.add_argument("--out", help="write the JSON report here (default: stdout)")

    p = sub.add_parser("plot-data", help="emit (x, CDF(x)) pairs for one marginal")
    p.add_argument("--model", required=True)
    p.add_argument("--var", required=True)
    p.add_argument("--out", required=True)
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "fit":
        cmd_fit(args.config, output=args.out)
    elif args.command == "sample":
        scen = cmd_sample(args.model, args.count, args.seed, args.out, threads=args.threads)
        print(f"wrote {scen.values.shape[0]} scenarios x {len(scen.variable_names)} columns -> {args.out}")
    elif args.command == "validate":
        report = cmd_validate(args.model, args.scenarios, args.ks_max, args.rank_max, args.out)
        if args.out is None:
            print(json.dumps(report.to_dict(), indent=1))
        status = "PASS" if report.passed else "FAIL"
        print(
            f"{status}: max KS {max(report.ks.values()):.4g} (limit {args.ks_max}), "
            f"max Spearman deviation {report.max_spearman_deviation:.4g} (limit {args.rank_max})",
            file=sys.stderr,
        )
        return EXIT_OK if report.passed else EXIT_VALIDATION_FAILED
    elif args.command == "plot-data":
        emit_plot_data(args.model, args.var, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sample" and (args.count < 1 or args.threads < 1):
        parser.error("--count and --threads must be >= 1")
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return run(args)
    except CopulaScenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
