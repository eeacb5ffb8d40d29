"""
Main Entry Point
Command-line tomography toolkit: python -m app.main <subcommand> [options]
"""
import sys

from app.controllers.cli_controller import run


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
