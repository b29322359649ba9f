"""Command line: ``poprj run <config>`` and one alias per experiment kind.

Exit status is 0 on success, 2 for an invalid configuration and 3 when a
run aborts on a NaN log-target.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import KINDS, ConfigError, RunConfig, load_config
from .runner import EXIT_CONFIG, run

__all__ = ["build_parser", "main"]


def _add_common(p: argparse.ArgumentParser, config_required: bool) -> None:
    if config_required:
        p.add_argument("config", help="INI configuration file")
    else:
        p.add_argument("config", nargs="?", help="INI configuration file (defaults apply when omitted)")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--sweeps", type=int, help="override the configured sweep count")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="poprj", description="Population reversible-jump experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run the experiment named by the config's kind"), True)
    for kind in KINDS:
        _add_common(sub.add_parser(kind, help=f"run a {kind} experiment"), False)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    kind = None if args.command == "run" else args.command
    try:
        if args.config is None:
            cfg = RunConfig(kind=kind)
        else:
            cfg = load_config(args.config, kind=kind)
        cfg = cfg.with_overrides(seed=args.seed, sweeps=args.sweeps, out=args.out)
    except ConfigError as exc:
        print(f"poprj: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg)
    print(result.out_dir)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
