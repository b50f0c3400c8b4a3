#!/usr/bin/env python3
"""
Run the vol-of-vol toolkit from the command line.

Usage:
    python scripts/run_volvol.py <command> [options]
"""

import os
import sys

# Make `src` importable when run from anywhere
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
