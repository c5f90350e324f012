#!/usr/bin/env python3
"""
Launcher for the foraging command-line interface
"""

import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli.main import cli


if __name__ == "__main__":
    sys.exit(cli())
