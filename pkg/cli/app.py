"""Command routing for the experiment runner.

``CommandRouter`` collects verbs the way an API router collects endpoints;
``CommandApp`` includes the routers, parses ``argv`` and turns library errors
into exit codes.
"""

import argparse
import csv
import json
import logging
import sys
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from assaybounds.errors import AssayError, ConfigError
from assaybounds.settings import DEFAULT_LOG_LEVEL

logger = logging.getLogger(__name__)

# --- Configuration ---
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@dataclass
class CommandResult:
    report: str
    rows: list[dict[str, Any]] = field(default_factory=list)
    payload: dict[str, Any] = field(default_factory=dict)
    exit_code: int = 0


@dataclass
class Command:
    name: str
    help: str
    handler: Callable[[Any, argparse.Namespace], CommandResult]
    arguments: Sequence[tuple[tuple, dict]] = ()


def arg(*flags: str, **options: Any) -> tuple[tuple, dict]:
    return flags, options


class CommandRouter:
    def __init__(self):
        self.commands: list[Command] = []

    def command(self, name: str, help: str, arguments: Sequence[tuple[tuple, dict]] = ()):
        def decorator(handler):
            self.commands.append(Command(name, help, handler, arguments))
            return handler

        return decorator


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(f"usage: {message}")


# --- Helper Functions ---
def format_validation_error(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(part) for part in error["loc"]) or "config"
        parts.append(f"{where}: {error['msg']}")
    return "; ".join(parts)


def format_matrix(p: Any, labels: Sequence[str]) -> str:
    p = np.asarray(p, dtype=float)
    width = max(12, *(len(label) + 2 for label in labels))
    lines = [" " * width + "".join(f"{label:>{width}}" for label in labels)]
    for label, row in zip(labels, p):
        lines.append(f"{label:>{width}}" + "".join(f"{value:>{width}.8f}" for value in row))
    return "\n".join(lines)


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(_cell(v) for v in value)
    return str(value)


def write_artifact(path: str, result: CommandResult) -> None:
    """CSV rows or the JSON payload, chosen by the file extension."""
    target = Path(path)
    suffix = target.suffix.lower()
    if suffix == ".csv":
        if not result.rows:
            raise ConfigError(f"--out: this command has no tabular output for {path}")
        with target.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=list(result.rows[0]), lineterminator="\n")
            writer.writeheader()
            for row in result.rows:
                writer.writerow({key: _cell(value) for key, value in row.items()})
    elif suffix == ".json":
        target.write_text(json.dumps(result.payload, indent=2) + "\n")
    else:
        raise ConfigError(f"--out: expected a .csv or .json path, got {path}")
    logger.info("wrote %s", target)


class CommandApp:
    def __init__(self, prog: str, description: str, version: str, loader: Callable[[argparse.Namespace], Any]):
        self.prog = prog
        self.description = description
        self.version = version
        self.loader = loader
        self.commands: dict[str, Command] = {}

    def include_router(self, router: CommandRouter) -> None:
        for command in router.commands:
            if command.name in self.commands:
                raise ValueError(f"duplicate command {command.name}")
            self.commands[command.name] = command

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog=self.prog, description=self.description)
        parser.add_argument("--version", action="version", version=f"%(prog)s {self.version}")
        sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        for command in self.commands.values():
            child = sub.add_parser(command.name, help=command.help, description=command.help)
            child.add_argument("--config", required=True, help="experiment config (JSON)")
            child.add_argument("--out", help="write CSV rows or the JSON payload to this path")
            child.add_argument("--seed", type=_u64, help="master seed for every random stream")
            child.add_argument("--threads", type=_positive_int, help="worker threads (default: ASSAY_THREADS)")
            child.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
            child.add_argument("--dump-config", action="store_true",
                               help="print the validated config as JSON and exit")
            for flags, options in command.arguments:
                child.add_argument(*flags, **options)
        return parser

    def run(self, argv: Sequence[str] | None = None) -> int:
        try:
            args = self.build_parser().parse_args(argv)
        except ConfigError as exc:
            print(f"error: {exc.detail}", file=sys.stderr)
            return exc.exit_code

        logging.basicConfig(level=logging.DEBUG if args.verbose else DEFAULT_LOG_LEVEL.upper(),
                            format=LOG_FORMAT, stream=sys.stderr)
        command = self.commands[args.command]
        try:
            config = self.loader(args)
            if args.dump_config:
                print(config.model_dump_json(indent=2))
                return 0
            result = command.handler(config, args)
            print(result.report)
            if args.out:
                write_artifact(args.out, result)
        except ValidationError as exc:
            error = ConfigError(format_validation_error(exc))
            print(f"error: {error.detail}", file=sys.stderr)
            return error.exit_code
        except AssayError as exc:
            print(f"error: {exc.detail}", file=sys.stderr)
            return exc.exit_code
        return result.exit_code


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value
