"""Entry point for uvdrape when run as a module."""

import sys

from .cli import cli_main


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
