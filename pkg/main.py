#!/usr/bin/env python3
"""Entry point for the ink command-line tool."""

import logging
import sys

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
)


def main() -> int:
    """Run one ink subcommand; see `python main.py --help`."""
    from src.cli import run

    return run(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
