"""
Main Entry Point for the Cournot GA Simulator

This script runs the `cournot-ga` command group: single runs, sweeps,
equilibrium reports, discovery, replication and trace re-analysis.

Examples:
    python main.py nash poly4
    python main.py run --model poly4 --kind VS --pop 40 --p-mut 0.00025 --generations 10000 --seeds 30
    python main.py sweep --config experiments/table5_poly4.yaml
    python main.py replicate table6 --scale 30
"""

import sys

from src.interface.cli import main

if __name__ == "__main__":
    sys.exit(main())
