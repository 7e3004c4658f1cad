import argparse
import logging
import os
import sys

import numpy as np
from dotenv import load_dotenv

from array_core import DomainError
from experiment import ConfigError, evaluate_all, export_cut, export_taper, load_config, render_table, run_table2
from slepian_nf import EigenSolverError

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=os.getenv("NFTAPER_CONFIG"), help="Experiment JSON (default: built-in reference)")
    common.add_argument("--out", default=None, help="Output directory (default: $NFTAPER_OUT_DIR or ./output)")
    common.add_argument("--strict-paper", action="store_true", help="Keep the literal total-region range floor")
    common.add_argument("--exact-steering", action="store_true", help="Evaluate patterns with spherical-wave steering")
    common.add_argument("--ring-cut", action="store_true", help="Take angle cuts along the distance ring")
    common.add_argument("--isll-linear", action="store_true", help="Integrate G instead of G^2 for ISLL")
    common.add_argument("--seed", type=int, default=None, help="Seed for random-vector concentration checks")

    parser = argparse.ArgumentParser(description="Near-field amplitude taper design and sidelobe analysis")
    verbs = parser.add_subparsers(dest="verb", required=True)

    taper = verbs.add_parser("taper", parents=[common], help="Export a window's taper as CSV")
    taper.add_argument("--window", required=True)

    cut = verbs.add_parser("cut", parents=[common], help="Export an angle or range pattern cut as CSV")
    cut.add_argument("--window", required=True)
    cut.add_argument("--kind", choices=["angle", "range"], default="range")

    metrics = verbs.add_parser("metrics", parents=[common], help="Print sidelobe metrics")
    metrics.add_argument("--window", action="append", help="Window name (repeatable; default: all)")

    verbs.add_parser("table2", parents=[common], help="Run the full window comparison and write the report")
    return parser


def run(args) -> int:
    config = load_config(args.config).with_modes(
        strict_paper=args.strict_paper,
        exact_steering=args.exact_steering,
        ring_cut=args.ring_cut,
        isll_linear=args.isll_linear,
    )
    if args.seed is not None:
        config = config.model_copy(update={"seed": args.seed})

    if args.verb == "taper":
        print(export_taper(config, args.window, args.out))
    elif args.verb == "cut":
        print(export_cut(config, args.window, args.kind, args.out))
    elif args.verb == "metrics":
        per_window = evaluate_all(config, args.window)
        print(render_table(per_window), end="")
        if any("error" in row for row in per_window.values()):
            return EXIT_NUMERICAL
    elif args.verb == "table2":
        report = run_table2(config, args.out)
        print(render_table(report["per_window"]), end="")
        if report["failed"]:
            logger.error(f"{len(report['failed'])} window(s) failed: {', '.join(report['failed'])}")
            return EXIT_NUMERICAL
    return EXIT_OK


def main(argv=None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.getenv("NFTAPER_LOG_LEVEL", "INFO").upper(),
        format='%(asctime)s - %(levelname)s - %(message)s',
    )
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Config error: {e}")
        return EXIT_CONFIG
    except (EigenSolverError, DomainError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"Cannot write output: {e}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
