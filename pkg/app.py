"""
vmf-robust command line entry point
Routes the fit, cv, diagnose, simulate and sample commands to their handlers
"""

import argparse
import logging
import sys
from typing import List, Optional

from components import cv_command, diagnose_command, fit_command, sample_command, simulate_command
from utils.config import get_settings, validate_settings
from utils.errors import ConfigError, VmfError, exit_code_for

logger = logging.getLogger("vmf_robust")

COMMANDS = (fit_command, cv_command, diagnose_command, simulate_command, sample_command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vmf-robust",
        description="Robust estimation for the von Mises-Fisher distribution (angles in radians)",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="more log output (-v info, -vv debug)")
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for command in COMMANDS:
        command.add_parser(subparsers)
    return parser


def configure_logging(level_name: str, verbose: int = 0):
    level = getattr(logging, level_name, logging.WARNING)
    if verbose:
        level = logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    logging.getLogger().setLevel(level)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run one CLI command

    Returns:
        Exit status: 0 success, 2 bad input, 3 non-convergence,
        4 degenerate data, 5 configuration error, 1 anything else
    """
    try:
        settings = get_settings()
        is_valid, message = validate_settings(settings)
        if not is_valid:
            raise ConfigError(message)
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return 0 if e.code in (0, None) else 2

        configure_logging(settings['log_level'], args.verbose)
        logger.debug("running %s", args.command)
        return args.handler(args)
    except VmfError as e:
        print(f"error: {e}", file=sys.stderr)
        return exit_code_for(e)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception("unexpected failure")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
