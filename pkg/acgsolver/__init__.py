"""
ACG Solver Package

Atomic column generation for generalized constrained shortest paths:
- Black-box atomic path algorithms with optimality / unfeasibility certificates
- Restricted master problem solved by a revised simplex with warm starts
- Branch-and-price over path prefixes (parallel, single-thread, heuristic, root-only)
- Seeded instance generators, an exhaustive oracle and a benchmark command line
"""

from .atomic import AtomicAlgorithm, AtomicResult, ConstraintKind, ConstraintSpec, MultiPulse, multipulse
from .branch import BranchAndPrice, Solution, Status, filter_arcs, solve
from .config import ConfigManager, SolverConfig, SolverProfile, Variant
from .error_handling import AcgError, ErrorCategory, ErrorHandler
from .graph import Arc, Graph, build
from .instgen import Instance, gen_feasible, gen_unfeasible, grid, layered, read_instance, write_instance
from .master import CgResult, MasterModel
from .oracle import compact_relaxation, enumerate_paths
from .simplex import LpModel, LpStatus, Sense
from .cli import main as cli_main

__version__ = "1.0.0"

__all__ = [
    'AtomicAlgorithm',
    'AtomicResult',
    'ConstraintKind',
    'ConstraintSpec',
    'MultiPulse',
    'multipulse',
    'BranchAndPrice',
    'Solution',
    'Status',
    'filter_arcs',
    'solve',
    'ConfigManager',
    'SolverConfig',
    'SolverProfile',
    'Variant',
    'AcgError',
    'ErrorCategory',
    'ErrorHandler',
    'Arc',
    'Graph',
    'build',
    'Instance',
    'gen_feasible',
    'gen_unfeasible',
    'grid',
    'layered',
    'read_instance',
    'write_instance',
    'CgResult',
    'MasterModel',
    'compact_relaxation',
    'enumerate_paths',
    'LpModel',
    'LpStatus',
    'Sense',
    'cli_main',
]
