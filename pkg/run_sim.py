#!/usr/bin/env python
"""Run the nandcode command-line tools."""
import logging
import os
import sys
from typing import NoReturn, Optional, Sequence

from dotenv import load_dotenv

from nandcode.cli import main

logger = logging.getLogger("nandcode")


def setup_environment() -> None:
    """Configure environment and logging for the application."""
    # Load environment variables from .env file
    load_dotenv()

    logging.basicConfig(
        level=os.getenv("NANDCODE_LOG_LEVEL", "INFO").upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def run_cli(argv: Optional[Sequence[str]] = None) -> NoReturn:
    """Entry point that maps interrupts and failures to exit codes."""
    setup_environment()

    try:
        sys.exit(main(argv))
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(0)
    except Exception as e:
        logger.error(f"Command failed: {str(e)}")
        sys.exit(1)


if __name__ == "__main__":
    run_cli()
