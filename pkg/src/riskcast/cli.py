"""Batch CLI: scan, forecast, report, validate.

Exit codes: 0 success, 1 input error, 2 internal error. Log verbosity
comes from the RISKCAST_LOG_LEVEL environment variable.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, apply_overrides, load_config
from .pipeline import InputError, cmd_forecast, cmd_report, cmd_scan, cmd_validate
from .validate import report_to_text

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskcast",
        description="Spatial cluster-risk scanning and next-interval forecasting",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("scan", "detect significant clusters per interval"),
        ("forecast", "hold out the last interval and predict it"),
        ("report", "write descriptive tables, transitions, and choropleths"),
        ("validate", "run the forecast and print the validation tables"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override RNG seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument("--replications", type=int, default=None,
                       help="override Monte Carlo replication count")
        p.add_argument("--grid-step", type=float, default=None,
                       help="override the alpha search step")
        p.add_argument("--max-fraction", type=float, default=None,
                       help="override the window population cap")
        p.add_argument("--workers", type=int, default=None,
                       help="override worker count (does not change outputs)")
    return parser


def _setup_logging():
    level_name = os.environ.get("RISKCAST_LOG_LEVEL", "WARNING").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(
            cfg,
            seed=args.seed,
            out=args.out,
            replications=args.replications,
            grid_step=args.grid_step,
            max_fraction=args.max_fraction,
            workers=args.workers,
        )
        if args.command == "scan":
            cmd_scan(cfg)
        elif args.command == "forecast":
            cmd_forecast(cfg)
        elif args.command == "report":
            cmd_report(cfg)
        else:
            report = cmd_validate(cfg)
            sys.stdout.write(report_to_text(report))
    except (ConfigError, InputError) as exc:
        print(f"riskcast: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        logging.getLogger(__name__).exception("internal error")
        print(f"riskcast: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
