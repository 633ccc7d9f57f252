"""Main entry point for the Rake mistiming simulator."""
import logging
import sys

from src.cli.handlers import EXIT_USAGE, get_handlers
from src.cli.parser import build_parser
from src.config import settings

logger = logging.getLogger(__name__)


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, validate configuration and dispatch to a subcommand."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    level = (args.log_level or settings.log_level).upper()
    if not isinstance(logging.getLevelName(level), int):
        print(f"❌ Unknown log level: {level}")
        return EXIT_USAGE
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # Validate configuration
    try:
        settings.validate_config()
    except AssertionError as e:
        logger.error(f"Configuration error: {e}")
        print(f"❌ Configuration error: {e}")
        print("Please check your RAKESIM_* environment variables and .env file.")
        return EXIT_USAGE

    handler = get_handlers()[args.command]
    logger.debug(f"Running {args.command}")
    return handler(args)


if __name__ == '__main__':
    sys.exit(main())
