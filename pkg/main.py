#!/usr/bin/env python3
"""
Point d'entrée du simulateur de guide d'onde (voir `python main.py --help`)
"""
import sys

from src.scenario_cli import main

if __name__ == "__main__":
    sys.exit(main())
