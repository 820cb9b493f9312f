#!/usr/bin/env python3
"""
ACG Solver - Main Entry Point
Solve, generate, check and benchmark constrained shortest path instances
"""

import sys
import os

# Add the current directory to Python path for imports
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from acgsolver.cli import main

if __name__ == "__main__":
    main()
