import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from arithmetic.gns_errors import ConfigParseError
from cli.gns_commands import COMMANDS, EXIT_USAGE, CommandOptions, run_command
from cli.gns_config import get_log_level, load_config

load_dotenv()

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gns",
        description="Generalized number systems over monogenic orders: digit sets, expansions and finiteness",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("config", help="TOML config file")
    parser.add_argument("--format", choices=("human", "records"), default="human")
    parser.add_argument("--precision-bits", type=int, default=None)
    parser.add_argument("--step-cap", type=int, default=None)
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--checkpoint", default=None)
    parser.add_argument("--max-m", type=int, default=None)
    parser.add_argument("--direction", choices=("+", "-"), default=None)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    try:
        config = load_config(args.config)
    except ConfigParseError as e:
        logger.error(f"Config parse error: {e}")
        return EXIT_USAGE
    except ValidationError as e:
        logger.error(f"Invalid config {args.config}: {e}")
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Cannot read {args.config}: {e}")
        return EXIT_USAGE

    options = CommandOptions(
        format=args.format,
        precision_bits=args.precision_bits,
        step_cap=args.step_cap,
        workers=args.workers,
        checkpoint=args.checkpoint,
        max_m=args.max_m,
        direction=args.direction,
    )
    logger.info(f"Running {args.command} on {args.config}")
    return run_command(args.command, config, options)


if __name__ == "__main__":
    logging.basicConfig(
        level=get_log_level(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    sys.exit(main())
