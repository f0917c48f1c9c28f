"""
Command-line entry point

Usage:
    python run_cli.py simulate --scenario A --seed 7 --out output/A
    python run_cli.py validate
    python run_cli.py scenarios
    python run_cli.py chart --in output/A/scenario_A.csv --metric W --out output/A/W.svg
"""

import sys

from src.cli import cli_main

if __name__ == "__main__":
    sys.exit(cli_main(sys.argv[1:]))
