"""
Attractor Lab - command-line entry point
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from commands import certify, measure, memory, simulate, telegraph
from config.run_config import (
    CertifyConfig,
    MeasureConfig,
    MemoryConfig,
    SimulateConfig,
    TelegraphConfig,
    load_config,
)
from config.settings import settings
from errors import ConfigError, LabError
from services.output_manager import OutputManager

logger = logging.getLogger(__name__)

COMMANDS = {
    "simulate": (SimulateConfig, simulate.run),
    "certify": (CertifyConfig, certify.run),
    "measure": (MeasureConfig, measure.run),
    "telegraph": (TelegraphConfig, telegraph.run),
    "memory": (MemoryConfig, memory.run),
}


def configure_logging(quiet: bool = False) -> None:
    """Configure logging"""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))
    level = logging.WARNING if quiet else getattr(logging, settings.log_level.upper())
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


class LabArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigError instead of exiting with status 2"""

    def error(self, message: str):
        raise ConfigError(f"{message}\n{self.format_usage().strip()}")


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(
        prog="attractor-lab",
        description="Dissipative systems with memory: simulation, certificates and invariant measures",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    parser.add_argument("--out", required=True, type=Path, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    parser.add_argument("--threads", type=int, default=None, help="ensemble worker threads (measure)")
    parser.add_argument("--quiet", action="store_true", help="log warnings and errors only")
    return parser


def run(argv: Optional[List[str]] = None) -> int:
    """Run one subcommand and return its exit code"""
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"attractor-lab: error: {e}", file=sys.stderr)
        return e.exit_code
    configure_logging(args.quiet)
    schema, pipeline = COMMANDS[args.command]

    try:
        config = load_config(args.config, schema)
        seed = config.seed if args.seed is None else args.seed
        threads = args.threads or settings.threads
        out = OutputManager(args.out, digits=config.precision)
        logger.info(f"Running {args.command} from {args.config} (seed={seed})")
        result = pipeline(config, out, seed, threads)
    except LabError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"{args.command}: error: {e}", file=sys.stderr)
        return e.exit_code

    print(result.summary)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(run())
