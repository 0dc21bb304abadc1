"""Command-line entry point.

Examples
--------
    eqlab counterexample --k 5
    eqlab check-gaps --hamiltonian H.json
    eqlab sweep --config sweep.json --seed 1 --workers 4 --out results
"""

# Standard Library
import sys
import argparse
from pathlib import Path
from typing import Any, Dict, List, Optional

# Third Party
from aws_lambda_powertools import Logger

# My Modules
from eqlab import logger as root_logger
from eqlab.schemas import MODES
from eqlab.harness import RunResult, run
from eqlab.exceptions import EqlabError, ConfigError, DegenerateGaps
from eqlab.config import ExperimentConfig, load_config, parse_config

logger = Logger(service="eqlab", child=True)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eqlab",
        description="Numerically certify equilibration bounds",
    )
    modes = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sub = modes.add_parser(mode, help=f"run the {mode} analysis")
        sub.add_argument("--config", type=Path, help="JSON experiment config")
        sub.add_argument(
            "--seed", type=int, help="master seed (overrides config)"
        )
        sub.add_argument(
            "--out", type=Path, help="directory for JSON and CSV reports"
        )
        sub.add_argument(
            "--workers", type=int, help="threads for sweep instances"
        )
        sub.add_argument(
            "--series",
            action="store_true",
            default=None,
            help="also write the sampled time series as CSV",
        )
        sub.add_argument(
            "--log-level",
            choices=LOG_LEVELS,
            help="log level (default: POWERTOOLS_LOG_LEVEL or INFO)",
        )
        if mode == "counterexample":
            sub.add_argument(
                "--k", type=int, help="dimension of the bath factor"
            )
        if mode == "check-gaps":
            sub.add_argument(
                "--hamiltonian", type=Path, help="Hamiltonian JSON file"
            )
    return parser


def _load(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
        if config.mode != args.mode:
            raise ConfigError(
                "mode", f"config is for '{config.mode}', not '{args.mode}'"
            )
    else:
        config = parse_config({"mode": args.mode})
    hamiltonian = None
    if getattr(args, "hamiltonian", None) is not None:
        hamiltonian = {"file": str(args.hamiltonian.resolve())}
    return config.with_overrides(
        seed=args.seed,
        out=args.out,
        workers=args.workers,
        series=args.series,
        k=getattr(args, "k", None),
        hamiltonian=hamiltonian,
    )


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def print_table(result: RunResult) -> None:
    """Print the scalar results of a run as a two-column table."""
    results: Dict[str, Any] = result.report["results"]
    print(f"{result.mode}: {'PASS' if result.passed else 'FAIL'}")
    for key in sorted(results):
        value = results[key]
        if isinstance(value, (bool, int, float, str)):
            print(f"  {key:<28} {_format(value)}")
    if result.mode == "check-gaps" and results["violations"]:
        first = results["violations"][0]
        print(
            "  violating quadruple (k, l, m, n) = "
            f"{tuple(first['indices'])}, mismatch {first['mismatch']:.3e}"
        )
    if result.mode == "sweep":
        for key, value in sorted(results["aggregate"].items()):
            print(f"  {key:<28} {_format(value)}")
        for point in results["scaling"]:
            print(
                f"  d_B={point['d_B']:<4} median distance "
                f"{point['median_distance']:.4g}, bound "
                f"{point['median_bound']:.4g}"
            )
    for path in result.paths:
        print(f"  wrote {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Run one mode; return 0 when every bound holds, 2 on a violation or
    failed gap check and 1 on errors."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        root_logger.setLevel(args.log_level)

    try:
        result = run(_load(args))
    except DegenerateGaps as e:
        logger.warning(f"Gap check failed: {e}")
        print(f"eqlab: {e}", file=sys.stderr)
        return 2
    except EqlabError as e:
        logger.error(f"eqlab {args.mode} failed: {e}")
        print(f"eqlab: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        logger.critical(
            f"Unhandled error in eqlab {args.mode}: {e}", exc_info=True
        )
        print(f"eqlab: unhandled error: {e}", file=sys.stderr)
        return 1

    print_table(result)
    return 0 if result.passed else 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
