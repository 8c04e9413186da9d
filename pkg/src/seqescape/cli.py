"""Command-line entry point: ``seqescape <command> --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import commands
from .config import ConfigError, load_config
from .deterministic import InvalidBracket

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

log = logging.getLogger("seqescape")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="INI experiment file")
    common.add_argument("--out", help="output directory (overrides [output] directory)")
    common.add_argument("--seed", type=int, help="master seed (overrides [simulation] master_seed)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for ensembles")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="seqescape", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ensemble", parents=[common], help="escape-time ensembles per coupling strength")
    sub.add_parser("violin-data", parents=[common], help="samples and mean/SD markers per escape order")
    sub.add_parser("phase-portrait", parents=[common], help="equilibria, manifolds, potential grid")
    sub.add_parser("equilibria", parents=[common], help="equilibrium census")
    sc = sub.add_parser("saddle-connection", parents=[common], help="bisect the connection coupling")
    sc.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    sc.add_argument("--tol", type=float)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed", "must fit in an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        if args.out is not None:
            cfg = cfg.with_directory(args.out)
        if args.workers < 1:
            raise ConfigError("--workers", "must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "ensemble":
            bundle = commands.cmd_ensemble(cfg, args.workers)
        elif args.command == "violin-data":
            bundle = commands.cmd_violin_data(cfg, args.workers)
        elif args.command == "phase-portrait":
            bundle = commands.cmd_phase_portrait(cfg)
        elif args.command == "equilibria":
            bundle = commands.cmd_equilibria(cfg)
        else:
            bundle = commands.cmd_saddle_connection(cfg, args.bracket, args.tol)
    except InvalidBracket as exc:
        print(f"invalid bracket: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    for name in sorted(bundle.files):
        print(bundle.directory / name)
    return EXIT_OK
