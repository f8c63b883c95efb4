import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from sqlalchemy.exc import SQLAlchemyError

from egostory import __version__
from egostory.commands import cues, evaluate, events, runs, summarize, synth, train, validate, weights
from egostory.config import get_settings
from egostory.errors import EgostoryError, StorageError

logger = logging.getLogger("egostory")

# 📡 Subcommands, registered in help order
COMMANDS = [synth, validate, cues, train, weights, events, summarize, evaluate, runs]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egostory", description="Storyboard summaries of egocentric video bundles")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="pipeline config JSON (default: config/pipeline.json)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="PATH=VALUE",
        help="override one config field, e.g. --set cues.theta_r=5000 (repeatable)",
    )
    parser.add_argument("--log-level", help="logging level (default: EGOSTORY_LOG_LEVEL or INFO)")
    parser.add_argument("--workers", type=int, help="worker threads (default: EGOSTORY_WORKERS or 1)")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def _fail(error: EgostoryError) -> int:
    sys.stderr.write(json.dumps(error.to_dict(), default=str) + "\n")
    logger.debug("Command failed", exc_info=True)
    return error.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = (args.log_level or get_settings().log_level).upper()
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        args.workers = None
        logger.warning("--workers must be >= 1; using the environment default")
    try:
        return args.func(args) or 0
    except EgostoryError as e:
        return _fail(e)
    except (OSError, SQLAlchemyError) as e:
        return _fail(StorageError(f"Storage failure: {e}", kind=type(e).__name__))
    except Exception as e:
        logger.error(f"Unexpected failure in {args.command}", exc_info=True)
        sys.stderr.write(json.dumps({"error": type(e).__name__, "detail": str(e), "exit_code": 1}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
