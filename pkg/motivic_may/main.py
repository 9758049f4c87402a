"""Command-line entry: parse flags, configure logging, dispatch to a command."""

import argparse
import logging
import sys
from typing import List, Optional

from motivic_may.commands import chart, compute, verify
from motivic_may.commands.common import Context
from motivic_may.config import load_settings
from motivic_may.errors import MayError
from motivic_may.services.e1 import PROFILES

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 70
LOG_FORMAT = "%(asctime)s %(name)s:%(levelname)s:%(message)s"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="motivic-may",
                                     description="May spectral sequence for the motivic Steenrod algebra over C")
    parser.add_argument("--config", help="path to a config.json")
    parser.add_argument("--cache-dir", dest="cache_dir", help="cache root (overrides MOTIVIC_MAY_CACHE)")
    parser.add_argument("--dataset-dir", dest="dataset_dir", help="dataset directory")
    parser.add_argument("--workers", type=int, help="worker threads for per-cell work")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None,
                        help="abort on data diagnostics instead of recording them")
    parser.add_argument("--check-well-defined", dest="check_well_defined",
                        action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--check-completeness", dest="check_completeness",
                        action=argparse.BooleanOptionalAction, default=None)
    parser.add_argument("--t-max", dest="t_max", type=int, help="internal degree bound of the resolution")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute and cache pages for one profile")
    p.add_argument("--profile", choices=sorted(PROFILES), default="motivic")
    p.add_argument("--through", help="last page: E<r>, or d<r> for the page after d_r (d32 reaches E-infinity)")
    p.add_argument("--max-stem", dest="max_stem", type=int)
    p.add_argument("--max-f", dest="max_f", type=int)
    p.add_argument("--force", action="store_true", help="recompute even when cached")

    p = sub.add_parser("verify", help="run an acceptance suite over cached pages")
    p.add_argument("suite", choices=sorted(verify.SUITES))
    p.add_argument("--max-stem", dest="max_stem", type=int)
    p.add_argument("--max-f", dest="max_f", type=int)
    p.add_argument("--report", help="report file (default: inside the cache)")

    p = sub.add_parser("chart", help="emit Ext as TSV or SVG")
    p.add_argument("--format", dest="fmt", choices=("tsv", "svg"), default="tsv")
    p.add_argument("--out", required=True)
    p.add_argument("--range", dest="stem_range", help="stem range a..b")
    p.add_argument("--max-stem", dest="max_stem", type=int)
    p.add_argument("--max-f", dest="max_f", type=int)
    p.add_argument("--source", choices=("einf", "resolution"), default="einf")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    overrides = {key: getattr(args, key) for key in
                 ("cache_dir", "dataset_dir", "workers", "log_level", "strict", "check_well_defined",
                  "check_completeness", "t_max")}
    settings = load_settings(args.config, overrides)
    logging.getLogger().setLevel(settings.log_level)
    ctx = Context(settings)
    if args.command == "compute":
        return compute.run(ctx, args.profile, args.max_stem, args.max_f, args.through, args.force)
    if args.command == "verify":
        return verify.run(ctx, args.suite, args.max_stem, args.max_f, args.report)
    return chart.run(ctx, args.fmt, args.out, args.stem_range, args.max_stem, args.max_f, args.source)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, stream=sys.stderr)
    try:
        return dispatch(args)
    except MayError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected failure")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
