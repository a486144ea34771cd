"""Command line interface: run one experiment, sweep a grid, render figures."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import ConfigError, EmitError, PathBanditsError, RoundError
from .harness import ExperimentConfig, apply_override, run, sweep
from .io import emit, load_json

_OUTDIR_ENV = "PATHBANDITS_OUTDIR"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _add_config_flags(parser: argparse.ArgumentParser, require_config: bool) -> None:
    parser.add_argument("--config", required=require_config, help="JSON experiment config")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--format", choices=("json", "csv"), help="output format")
    parser.add_argument("--learner", help="replace the learner section with this name")
    parser.add_argument("--stream", help="replace the stream section with this name")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="dotted config override, value parsed as JSON when possible",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pathbandits", description=__doc__)
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    run_parser = commands.add_parser("run", help="run one seed of an experiment")
    _add_config_flags(run_parser, require_config=False)
    run_parser.add_argument("--seed", type=int, help="root seed (default: first config seed)")
    run_parser.set_defaults(handler=_cmd_run)

    sweep_parser = commands.add_parser("sweep", help="run a parameter grid over all seeds")
    _add_config_flags(sweep_parser, require_config=True)
    sweep_parser.set_defaults(handler=_cmd_sweep)

    report_parser = commands.add_parser("report", help="render figures for emitted JSON records")
    report_parser.add_argument("inputs", nargs="+", help="JSON files written by run or sweep")
    report_parser.add_argument("--out-dir", help="figure directory (default: beside each input)")
    report_parser.set_defaults(handler=_cmd_report)
    return parser


def _load_config(args) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        try:
            raw = load_json(args.config)
        except ValueError as exc:
            raise ConfigError(f"config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config {args.config} must hold a JSON object")
    if args.learner:
        raw["learner"] = {"name": args.learner}
    if args.stream:
        raw["stream"] = {"name": args.stream}
    for item in args.set:
        key, sep, text = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            value = json.loads(text)
        except ValueError:
            value = text
        apply_override(raw, key, value)
    if args.format:
        raw["fmt"] = args.format
    if args.out:
        raw["out"] = str(args.out)
    return ExperimentConfig.from_dict(raw)


def _out_path(config: ExperimentConfig, default_name: str) -> Path:
    if config.out:
        return Path(config.out)
    return Path(os.environ.get(_OUTDIR_ENV, ".")) / default_name


def _cmd_run(args) -> int:
    config = _load_config(args)
    seed = args.seed if args.seed is not None else config.seeds[0]
    record = run(config, seed)
    name = f"run_{config.learner['name']}_{config.stream['name']}_seed{seed}.{config.fmt}"
    path = emit(record, _out_path(config, name), config.fmt)
    print(path)
    return 0


def _cmd_sweep(args) -> int:
    config = _load_config(args)
    table = sweep(config)
    name = f"sweep_{config.learner['name']}_{config.stream['name']}.{config.fmt}"
    path = emit(table, _out_path(config, name), config.fmt)
    print(path)
    return 0


def _cmd_report(args) -> int:
    # matplotlib is slow to import; only the report path pays for it
    from .report import render_record

    for input_path in args.inputs:
        try:
            record = load_json(input_path)
        except ValueError as exc:
            raise ConfigError(f"{input_path}: {exc}") from exc
        if not isinstance(record, dict) or "summary" not in record:
            raise EmitError(f"{input_path} is not an emitted run or sweep record")
        out_dir = Path(args.out_dir) if args.out_dir else Path(input_path).resolve().parent
        stem = Path(input_path).stem
        for figure in render_record(record, out_dir, stem):
            print(figure)
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("-"):
        argv = ["run", *argv]
    try:
        if not argv:
            raise ConfigError("a command is required: run, sweep, or report")
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except PathBanditsError as exc:
        payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        if isinstance(exc, RoundError):
            payload["error"]["round"] = exc.round_index
        print(json.dumps(payload), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
