"""Command-line entry point: ``ssh-atom run|list-experiments|validate``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import EXPERIMENTS, parse_config
from .errors import DomainError, NumericalError, ParameterError

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_DOMAIN = 0, 2, 3, 4
OUT_ENV = "SSH_ATOM_OUT"

log = logging.getLogger("ssh_atom")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ssh-atom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment and write CSV files plus manifest.json")
    run.add_argument("--experiment", choices=sorted(EXPERIMENTS))
    run.add_argument("--config", type=Path)
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                     help="override one config key (JSON value), may repeat")
    run.add_argument("--out", type=Path, help=f"output directory (default: ${OUT_ENV})")
    run.add_argument("-v", "--verbose", action="store_true")

    sub.add_parser("list-experiments", help="print experiment ids")

    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("--config", type=Path, required=True)
    val.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    if args.command == "list-experiments":
        for name, text in EXPERIMENTS.items():
            print(f"{name:24s} {text}")
        return EXIT_OK

    try:
        if args.command == "validate":
            cfg = parse_config(args.config, args.overrides)
            print(f"ok: {args.config} ({cfg.experiment or 'no experiment set'})")
            return EXIT_OK

        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        out = args.out or (Path(os.environ[OUT_ENV]) if os.environ.get(OUT_ENV) else None)
        if out is None:
            raise ParameterError(f"no output directory: pass --out or set ${OUT_ENV}")
        cfg = parse_config(args.config, args.overrides, args.experiment, out)
        if cfg.experiment is None:
            raise ParameterError("no experiment: pass --experiment or set 'experiment' in the config")
        from .experiments import run_experiment

        log.info("running %s into %s", cfg.experiment, out)
        files = run_experiment(cfg)
        for path in files.values():
            print(path)
        return EXIT_OK
    except ParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
