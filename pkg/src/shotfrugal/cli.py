"""``shotfrugal`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 bound check failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .harness import EXPERIMENTS, BoundCheckFailure, ConfigError, read_csv, run_experiment
from .plots import PLOT_KINDS, PlotError, emit_plot


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shotfrugal", description="Error-controlled shot-frugal VQA experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat JSON object of config keys")
        p.add_argument("--seed", type=int, dest="master_seed")
        p.add_argument("--trials", type=int)
        p.add_argument("--budget", type=float, dest="shot_budget")
        p.add_argument("--out-dir", dest="output_dir")
        p.add_argument("--workers", type=int)
    p = sub.add_parser("plot", help="render SVG figures from result CSVs")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--budget", type=float)
    p.add_argument("--variant", action="append", dest="variants")
    return parser


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a flat JSON object")
    for key, value in raw.items():
        if isinstance(value, (dict, list)):
            raise ConfigError(f"config key {key!r} must be a scalar")
    return raw


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            emit_plot(read_csv(args.inputs), args.kind, args.out, args.budget, args.variants)
            return 0
        raw = load_config(args.config)
        if raw.get("experiment", args.command) != args.command:
            raise ConfigError(f"config names experiment {raw['experiment']!r} but {args.command!r} was requested")
        raw["experiment"] = args.command
        for key in ("master_seed", "trials", "shot_budget", "output_dir", "workers"):
            if getattr(args, key) is not None:
                raw[key] = getattr(args, key)
        run_experiment(raw)
    except BoundCheckFailure as exc:
        print(f"bound check failed: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, PlotError, OSError) as exc:
        print(f"shotfrugal: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
