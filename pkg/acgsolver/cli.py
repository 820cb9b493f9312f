"""
Command line interface for the ACG solver
Solve, generate, check and benchmark constrained shortest path instances
"""

import argparse
import csv
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional

from .atomic import AtomicResult, multipulse
from .branch import BranchAndPrice, Solution, Status
from .config import SolverConfig, SolverProfile, Variant, get_config_manager
from .error_handling import ErrorHandler, UsageError
from .instgen import (
    Instance,
    gen_feasible,
    gen_unfeasible,
    grid,
    layered,
    read_instance,
    read_solution,
    read_topology,
    write_instance,
    write_solution,
)
from .oracle import enumerate_paths
from .progress import BenchProgress, RunHistory, SolveStats
from .utils import Deadline, elapsed_ms, json_number

logger = logging.getLogger(__name__)

ALGORITHMS = [v.value for v in Variant] + ["multipulse", "oracle"]
CSV_FIELDS = ["instance", "algo", "status", "cost", "bound", "wall_ms", "columns", "nodes_expanded"]
EXIT_STATUS = {
    Status.OPTIMAL: 0,
    Status.INFEASIBLE: 2,
    Status.TIME_LIMIT: 3,
    Status.FEASIBLE: 3,
}
COST_TOL = 1e-6


class ArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors raised instead of exiting with status 2"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def setup_logging(verbose: bool = False, quiet: bool = False):
    level = logging.DEBUG if verbose else logging.ERROR if quiet else logging.INFO
    root = logging.getLogger("acgsolver")
    # one handler, bound to the current stderr
    for old in list(root.handlers):
        root.removeHandler(old)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    ))
    root.addHandler(handler)
    root.setLevel(level)


def create_parser() -> ArgumentParser:
    """Create the command line argument parser"""
    parser = ArgumentParser(
        prog="acgsolver",
        description="Atomic column generation for constrained shortest paths",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s generate grid --width 5 --height 5 --path-size 6 --seed 1 -o inst.json
  %(prog)s solve inst.json --algo acg1 -o sol.json
  %(prog)s check inst.json sol.json
  %(prog)s bench instances/ --algos acg acgh multipulse --csv bench.csv
        """
    )
    parser.add_argument('--config-file', '-c', help='Configuration file to use (JSON/YAML)')
    parser.add_argument('--profile', '-p', choices=[p.value for p in SolverProfile],
                        help='Time-limit profile to apply before command line overrides')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    parser.add_argument('--quiet', '-q', action='store_true', help='Errors only, no progress bar')

    commands = parser.add_subparsers(dest='command', required=True)

    solve = commands.add_parser('solve', help='Solve an instance file')
    solve.add_argument('instance', help='Instance JSON file')
    solve.add_argument('--algo', choices=ALGORITHMS, default=Variant.ACG.value)
    solve.add_argument('--t-acg', type=int, metavar='MS', help='Column generation budget per call (500)')
    solve.add_argument('--t-atomic', type=int, metavar='MS', help='Budget per atomic call (60)')
    solve.add_argument('--gamma', type=float, metavar='R', help='Arc ratio gating column generation (0.2)')
    solve.add_argument('--limit', type=int, metavar='MS', help='Global time limit (120000)')
    solve.add_argument('--workers', type=int, metavar='N', help='Branching threads for acg')
    solve.add_argument('--seed', type=int, metavar='S')
    solve.add_argument('--output', '-o', help='Solution JSON file (stdout when omitted)')
    solve.add_argument('--no-timing', action='store_true', help='Write wall_ms as 0 for reproducible output')

    generate = commands.add_parser('generate', help='Generate an instance file')
    generate.add_argument('kind', choices=['grid', 'file', 'layered'])
    generate.add_argument('--width', type=int, default=31)
    generate.add_argument('--height', type=int, default=31)
    generate.add_argument('--layers', type=int, default=4)
    generate.add_argument('--topology', help='SNDlib native or edge list file for kind "file"')
    generate.add_argument('--resources', type=int, help='Number of metrics per arc')
    generate.add_argument('--path-size', type=int, default=15)
    generate.add_argument('--upper', type=int, default=3, help='Upper bound constraints')
    generate.add_argument('--range', type=int, default=3, dest='ranges', help='Range constraints')
    generate.add_argument('--no-include', action='store_true', help='Skip the node inclusion constraint')
    generate.add_argument('--seed', type=int, default=0)
    generate.add_argument('--unfeasible', action='store_true',
                          help='Jointly infeasible instance of individually satisfiable constraints')
    generate.add_argument('--output', '-o', help='Instance JSON file (stdout when omitted)')

    check = commands.add_parser('check', help='Re-evaluate a solution against its instance')
    check.add_argument('instance')
    check.add_argument('solution')

    bench = commands.add_parser('bench', help='Solve every instance of a directory with several algorithms')
    bench.add_argument('directory')
    bench.add_argument('--algos', nargs='+', choices=ALGORITHMS, default=[Variant.ACG.value, 'multipulse'])
    bench.add_argument('--csv', help='CSV output file (stdout when omitted)')
    bench.add_argument('--history', help='Append rows to this JSON-lines ledger')
    bench.add_argument('--limit', type=int, metavar='MS', help='Global time limit per run')
    bench.add_argument('--workers', type=int, metavar='N')

    return parser


def _finish(status: Status, path, cost: float, bound: float, stats: SolveStats, inst: Instance) -> Solution:
    totals = inst.graph.evaluate(path).resource_totals if path else ()
    return Solution(status, tuple(path), cost, bound, stats, totals)


def solve_instance(inst: Instance, algo: str, config: SolverConfig) -> Solution:
    """Run one algorithm on an instance"""
    g = inst.graph
    if algo in {v.value for v in Variant}:
        config.variant = algo
        config.validate()
        return BranchAndPrice(g, inst.atomic_algorithms(), config).solve()

    start = time.monotonic()
    stats = SolveStats()
    if algo == "multipulse":
        deadline = Deadline.after_ms(config.global_limit_ms)
        result: AtomicResult = multipulse(g, g.costs, inst.constraints, deadline=deadline)
        stats.atomic_calls = 1
        stats.wall_ms = elapsed_ms(start)
        if result.opt:
            return _finish(Status.OPTIMAL, result.path, result.cost, result.cost, stats, inst)
        if result.unfeas:
            return _finish(Status.INFEASIBLE, (), float("inf"), float("inf"), stats, inst)
        status = Status.FEASIBLE if result.path else Status.TIME_LIMIT
        return _finish(status, result.path, result.cost, float("-inf"), stats, inst)

    if algo == "oracle":
        result = enumerate_paths(g, inst.constraints)
        stats.wall_ms = elapsed_ms(start)
        return _finish(result.status, result.path, result.cost, result.cost, stats, inst)

    raise UsageError(f"unknown algorithm {algo!r}")


def _config(args) -> SolverConfig:
    manager = get_config_manager(args.config_file, args.profile)
    manager.update({
        "t_acg_ms": getattr(args, "t_acg", None),
        "t_atomic_ms": getattr(args, "t_atomic", None),
        "gamma_ratio": getattr(args, "gamma", None),
        "global_limit_ms": getattr(args, "limit", None),
        "workers": getattr(args, "workers", None),
        "seed": getattr(args, "seed", None),
    })
    return manager.config


def _write(data: bytes, output: Optional[str]):
    if output:
        Path(output).write_bytes(data)
        logger.info("wrote %s", output)
    else:
        sys.stdout.write(data.decode("utf-8"))
        sys.stdout.flush()


def cmd_solve(args) -> int:
    inst = read_instance(Path(args.instance).read_bytes())
    config = _config(args)
    sol = solve_instance(inst, args.algo, config)
    logger.info("%s: %s cost=%s bound=%s", args.algo, sol.status.value,
                json_number(sol.cost), json_number(sol.lower_bound))
    _write(write_solution(sol, timing=not args.no_timing), args.output)
    return EXIT_STATUS[sol.status]


def cmd_generate(args) -> int:
    resources = {}
    if args.resources is not None:
        resources["resource_count"] = args.resources
    start = None
    if args.kind == "grid":
        g = grid(args.width, args.height, args.seed, **resources)
    elif args.kind == "layered":
        g = layered(args.layers, args.width, args.seed, **resources)
        start = g.source
    else:
        if not args.topology:
            raise UsageError("generate file needs --topology")
        g = read_topology(Path(args.topology).read_text(encoding="utf-8"), args.seed, **resources)

    if args.unfeasible:
        inst = gen_unfeasible(g, args.seed, args.path_size)
    else:
        inst = gen_feasible(g, args.path_size, args.seed, args.upper, args.ranges,
                            include=not args.no_include, start=start)
    inst.meta["topology"] = args.kind
    _write(write_instance(inst), args.output)
    return 0


def verify(inst: Instance, sol: Solution) -> List[str]:
    """Reasons the solution does not hold for the instance; empty when it does"""
    if not sol.path:
        if sol.status in (Status.INFEASIBLE, Status.TIME_LIMIT) and sol.cost == float("inf"):
            return []
        return [f"empty path with status {sol.status.value} and cost {json_number(sol.cost)}"]
    problems = []
    g = inst.graph
    if any(not 0 <= a < g.arc_count for a in sol.path):
        return ["path refers to unknown arcs"]
    if not g.is_elementary_st_path(sol.path):
        problems.append("not an elementary s-t path")
    for alg in inst.atomic_algorithms():
        if not alg.check(g, sol.path):
            problems.append(f"violates {alg.name}")
    cost = g.evaluate(sol.path).cost
    if abs(cost - sol.cost) > COST_TOL:
        problems.append(f"cost {json_number(sol.cost)} but the path costs {json_number(cost)}")
    return problems


def cmd_check(args) -> int:
    inst = read_instance(Path(args.instance).read_bytes())
    sol = read_solution(Path(args.solution).read_bytes())
    problems = verify(inst, sol)
    for problem in problems:
        print(f"✗ {problem}")
    if problems:
        return 1
    print(f"✓ {sol.status.value} solution holds (cost {json_number(sol.cost)})")
    return 0


def cmd_bench(args) -> int:
    files = sorted(Path(args.directory).glob("*.json"))
    if not files:
        raise UsageError(f"no instance files in {args.directory}")
    history = RunHistory(args.history)
    handler = ErrorHandler(logger)

    out = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_FIELDS)
        writer.writeheader()
        with BenchProgress(len(files) * len(args.algos), enabled=not args.quiet) as progress:
            for path in files:
                inst = read_instance(path.read_bytes())
                for algo in args.algos:
                    try:
                        sol = solve_instance(inst, algo, _config(args))
                    except Exception as exc:
                        handler.handle_error(exc, context=f"{path.name}:{algo}")
                        row = dict.fromkeys(CSV_FIELDS, "")
                        row.update(instance=path.name, algo=algo, status="error")
                    else:
                        row = {
                            "instance": path.name,
                            "algo": algo,
                            "status": sol.status.value,
                            "cost": json_number(sol.cost),
                            "bound": json_number(sol.lower_bound),
                            "wall_ms": sol.stats.wall_ms,
                            "columns": sol.stats.columns,
                            "nodes_expanded": sol.stats.nodes_expanded,
                        }
                    writer.writerow(row)
                    history.add_entry(row)
                    progress.advance(path.stem, algo, row["status"])
    finally:
        if out is not sys.stdout:
            out.close()

    summary = handler.get_error_summary()
    if summary["total_errors"]:
        logger.warning("%d run(s) failed: %s", summary["total_errors"], summary["by_category"])
    return 0


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "solve": cmd_solve,
    "generate": cmd_generate,
    "check": cmd_check,
    "bench": cmd_bench,
}


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, run the subcommand and return the process exit code"""
    handler = ErrorHandler(logger)
    try:
        args = create_parser().parse_args(argv)
        setup_logging(args.verbose, args.quiet)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 0
    except KeyboardInterrupt:
        logger.warning("interrupted by user")
        return 130
    except Exception as exc:
        return handler.exit_code(handler.handle_error(exc))


def main():
    """Main CLI function"""
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
