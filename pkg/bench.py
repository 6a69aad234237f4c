"""Command line launcher script"""

import sys

from app.cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main())
