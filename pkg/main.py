#!/usr/bin/env python3
"""
chaostat - Command-line entry point
Loads the command modules, configures logging on stderr and maps failures to exit codes
"""

import importlib
import logging
import os
import sys
from typing import List, Optional, Sequence

from dotenv import load_dotenv

from chaostat.commands import COMMAND_MODULES, CommandRegistry
from chaostat.utils.errors import NumericalError, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

logger = logging.getLogger(__name__)


def configure_logging():
    """Line-oriented logs on stderr, plus a log file when CHAOSTAT_LOG_FILE is set"""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    log_file = os.getenv("CHAOSTAT_LOG_FILE")
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=os.getenv("CHAOSTAT_LOG_LEVEL", "INFO").upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def load_commands(registry: CommandRegistry, modules: Sequence[str] = COMMAND_MODULES) -> bool:
    """Import every command module and let it register its subcommands"""
    loaded = []
    failed = []
    for name in modules:
        try:
            importlib.import_module(name).setup(registry)
            loaded.append(name)
            logger.debug(f"✅ Successfully loaded commands: {name}")
        except Exception as e:
            failed.append(name)
            logger.error(f"❌ Failed to load commands {name}: {e}")

    logger.debug(f"📊 Loaded {len(loaded)}/{len(modules)} command modules, {len(registry.commands)} commands")
    if failed:
        logger.error(f"❌ Failed command modules: {failed}")
        return False
    return True


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    configure_logging()

    registry = CommandRegistry()
    if not load_commands(registry):
        return EXIT_USAGE

    try:
        registry.dispatch(argv)
    except UsageError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except NumericalError as e:
        logger.error(f"❌ numerical failure: {e}")
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError) as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except KeyboardInterrupt:
        logger.info("🛑 interrupted")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
