"""
chaostat - Command registry
Subcommands register themselves through `setup(registry)`; every subcommand gets the shared
--config/--seed/--out/--override flags.
"""

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from chaostat.harness.config import ExperimentConfig, load_config
from chaostat.utils.errors import UsageError

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, ExperimentConfig], None]


class CliParser(argparse.ArgumentParser):
    """argparse that raises UsageError instead of exiting with status 2"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}")
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer, got {value}")
    return value


@dataclass
class Command:
    name: str
    handler: Handler
    help: str


class CommandRegistry:
    def __init__(self, prog: str = "chaostat"):
        self.parser = CliParser(prog=prog, description="Long-term statistics of chaotic PDEs")
        self.subparsers = self.parser.add_subparsers(dest="command", parser_class=CliParser, metavar="COMMAND")
        self.commands: Dict[str, Command] = {}

    def add_command(self, name: str, handler: Handler, help: str) -> argparse.ArgumentParser:
        if name in self.commands:
            raise ValueError(f"command {name} registered twice")
        sub = self.subparsers.add_parser(name, help=help, description=help)
        sub.add_argument("--config", help="experiment TOML file (bare names resolve in CHAOSTAT_CONFIG_DIR)")
        sub.add_argument("--seed", type=_seed, help="master seed")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                         help="dotted config override, value read as a TOML literal")
        self.commands[name] = Command(name, handler, help)
        return sub

    @property
    def names(self) -> List[str]:
        return sorted(self.commands)

    def dispatch(self, argv: Optional[Sequence[str]] = None):
        args = self.parser.parse_args(argv)
        if args.command is None:
            raise UsageError(f"a command is required: {', '.join(self.names)}")
        cfg = load_config(args.config, args.override, args.seed, args.out)
        logger.info(f"🚀 {args.command}: equation {cfg.equation}, seed {cfg.seed}, out {cfg.out}")
        self.commands[args.command].handler(args, cfg)


def output_dir(cfg: ExperimentConfig, *parts: str) -> Path:
    path = Path(cfg.out).joinpath(*parts)
    path.mkdir(parents=True, exist_ok=True)
    return path


def fno_weights_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) / "models" / "fno.chw"


def closure_weights_path(cfg: ExperimentConfig) -> Path:
    return Path(cfg.out) / "models" / "closure.chw"
