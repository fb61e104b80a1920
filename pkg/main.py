#!/usr/bin/env python3
"""
GapWiz - Certified Max-Cut Integrality Gaps
Command line entry point
"""

import sys

from src.cli import main as cli_main


def main():
    """Run the command line and exit with its code"""
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
