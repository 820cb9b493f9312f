"""
ACG master model and column generation

The restricted master problem holds one x column per arc (objective c_a),
an outdegree row per node (<= 1), a convexity row per atomic algorithm
(= 1, dual β) and a linking row per (algorithm, arc) in >= form
(x_a - Σ_{p∋a} y_p >= 0, dual γ). Paths priced by the atomic algorithms
become y columns; every column ever generated stays in the pool for the
whole branching tree, and arc exclusion is done by zero-fixing.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .atomic import ArcMask, AtomicAlgorithm, AtomicResult, full_mask
from .error_handling import EmptyAtomicSet, NumericalFailure
from .graph import Graph, Path
from .progress import CgRecord, SolveStats
from .simplex import LpModel, LpSolution, LpStatus, Sense
from .utils import Deadline, is_integral

logger = logging.getLogger(__name__)

RC_THRESHOLD = -1e-6
GAMMA_TOL = 1e-9
INTEGRAL_TOL = 1e-6


class CgStatus(Enum):
    CONVERGED = "converged"
    DEADLINE_HIT = "deadline_hit"
    ROOT_INFEASIBLE = "root_infeasible"


@dataclass
class Column:
    owner: int
    arcs: Path
    lp_id: int
    is_dummy: bool = False


@dataclass
class PricingOutcome:
    owner: int
    result: AtomicResult
    reduced_cost: float = math.inf
    column: Optional[Column] = None

    @property
    def certified(self) -> bool:
        return self.result.opt or self.result.unfeas

    @property
    def unfeasible(self) -> bool:
        return self.result.unfeas


@dataclass
class CgResult:
    lp_value: float
    lagrangian_bound: float
    feasible_path: Path
    feasible_cost: float
    x_fractional: np.ndarray
    converged: bool
    status: CgStatus
    certified: bool = False
    iterations: int = 0
    columns_added: int = 0
    # restricted master objective after each iteration
    lp_trace: List[float] = field(default_factory=list)
    # LP value of every pool column, aligned with MasterModel.pool
    column_values: np.ndarray = field(default_factory=lambda: np.zeros(0))


def lagrangian_bound(lp_value: float, min_reduced_costs: Sequence[float]) -> float:
    """lp_value + Σ_α min(0, rc*_α); rc* must be certified pricing optima"""
    return lp_value + sum(min(0.0, rc) for rc in min_reduced_costs)


class MasterModel:
    """Restricted master problem shared by every node of the branching tree"""

    def __init__(self,
                 g: Graph,
                 algs: Sequence[AtomicAlgorithm],
                 t_atomic_ms: Optional[int] = 60,
                 pricing_workers: int = 1,
                 stats: Optional[SolveStats] = None):
        if not algs:
            raise EmptyAtomicSet("at least one atomic algorithm is required")
        self.g = g
        self.algs = list(algs)
        self.t_atomic_ms = t_atomic_ms
        self.pricing_workers = pricing_workers
        self.stats = stats or SolveStats()

        max_cost = max(g.costs, default=0.0)
        self.big_m = g.arc_count * max_cost + 1.0

        lp = LpModel()
        self.outdegree_rows = [lp.add_row(Sense.LE, 1.0) for _ in range(g.nodes)]
        self.convexity_rows = [lp.add_row(Sense.EQ, 1.0) for _ in self.algs]
        self.linking_rows = [
            [lp.add_row(Sense.GE, 0.0) for _ in range(g.arc_count)]
            for _ in self.algs
        ]

        self.x_cols: List[int] = []
        for arc in g.arcs:
            coeffs = {self.outdegree_rows[arc.tail]: 1.0}
            for rows in self.linking_rows:
                coeffs[rows[arc.id]] = 1.0
            self.x_cols.append(lp.add_column(arc.cost, coeffs))

        self.lp = lp
        self.pool: List[Column] = []
        self._by_key: Dict[Tuple[int, Path], Column] = {}
        self.dummies: List[Column] = []
        for alpha, row in enumerate(self.convexity_rows):
            col = Column(alpha, (), lp.add_column(self.big_m, {row: 1.0}), is_dummy=True)
            self.dummies.append(col)
            self.pool.append(col)

        logger.debug("master built: %d rows, %d columns, big-M %.1f",
                     lp.row_count, lp.column_count, self.big_m)

    @property
    def path_columns(self) -> List[Column]:
        return [c for c in self.pool if not c.is_dummy]

    def feasible_for_all(self, path: Path, skip: Optional[int] = None) -> bool:
        return all(alg.check(self.g, path) for i, alg in enumerate(self.algs) if i != skip)

    def add_path_column(self, alpha: int, path: Path) -> Optional[Column]:
        """Register path as a y column of algorithm α; None when it already exists"""
        key = (alpha, tuple(path))
        if key in self._by_key:
            return None
        if not self.algs[alpha].check(self.g, path):
            logger.warning("rejecting column %s: infeasible for %s", path, self.algs[alpha].name)
            return None
        coeffs = {self.convexity_rows[alpha]: 1.0}
        for a in path:
            coeffs[self.linking_rows[alpha][a]] = -1.0
        column = Column(alpha, tuple(path), self.lp.add_column(0.0, coeffs))
        self.pool.append(column)
        self._by_key[key] = column
        self.stats.bump("columns")
        return column

    def pricing_costs(self, alpha: int, duals: np.ndarray) -> List[float]:
        """γ_{·,α} clamped at zero; records the most negative value seen"""
        gamma = duals[self.linking_rows[alpha]]
        lowest = float(gamma.min()) if gamma.size else 0.0
        self.stats.observe_gamma(lowest)
        if lowest < -GAMMA_TOL:
            logger.warning("linking dual %.3g below tolerance for %s", lowest, self.algs[alpha].name)
        return np.maximum(gamma, 0.0).tolist()

    def price(self,
              alpha: int,
              duals: np.ndarray,
              allowed: ArcMask,
              deadline: Deadline) -> PricingOutcome:
        """Call atomic α with arc costs γ_{·,α}; build a column if its reduced cost is negative"""
        costs = self.pricing_costs(alpha, duals)
        beta = float(duals[self.convexity_rows[alpha]])
        result = self.algs[alpha].solve(self.g, costs, allowed, deadline.sub(self.t_atomic_ms))
        self.stats.bump("atomic_calls")
        outcome = PricingOutcome(alpha, result)
        if result.path:
            outcome.reduced_cost = sum(costs[a] for a in result.path) - beta
        return outcome

    def _price_all(self, duals: np.ndarray, allowed: ArcMask, deadline: Deadline) -> List[PricingOutcome]:
        alphas = range(len(self.algs))
        if self.pricing_workers > 1 and len(self.algs) > 1:
            with ThreadPoolExecutor(max_workers=self.pricing_workers) as executor:
                return list(executor.map(lambda a: self.price(a, duals, allowed, deadline), alphas))
        return [self.price(a, duals, allowed, deadline) for a in alphas]

    def _exclude(self, allowed: bytearray) -> List[int]:
        """Zero-fix x and y columns using arcs outside Ā; returns what was fixed here"""
        fixed = []
        for a, col in enumerate(self.x_cols):
            if not allowed[a] and not self.lp.is_fixed(col):
                self.lp.fix(col)
                fixed.append(col)
        for column in self.pool:
            if column.is_dummy or self.lp.is_fixed(column.lp_id):
                continue
            if any(not allowed[a] for a in column.arcs):
                self.lp.fix(column.lp_id)
                fixed.append(column.lp_id)
        return fixed

    def x_path(self, x: np.ndarray) -> Optional[Path]:
        """The elementary s–t path induced by an integral x, circuits stripped"""
        # the outdegree rows keep x within [0, 1]
        if not all(is_integral(v, INTEGRAL_TOL) for v in x):
            return None
        g = self.g
        path: List[int] = []
        node = g.source
        seen = {node}
        while node != g.target:
            support = [a for a in g.out_arcs(node) if x[a] >= 1 - INTEGRAL_TOL]
            if len(support) != 1:
                return None
            node = g.arcs[support[0]].head
            if node in seen:
                return None
            seen.add(node)
            path.append(support[0])
        return tuple(path)

    def cg_solve(self, allowed: ArcMask = None, deadline: Optional[Deadline] = None) -> CgResult:
        """ACG-Solve: column generation over (V, Ā) until no negative column or deadline"""
        deadline = deadline or Deadline.never()
        mask = allowed if allowed is not None else full_mask(self.g)
        fixed = self._exclude(mask)
        try:
            result = self._generate(mask, deadline)
        finally:
            for col in fixed:
                self.lp.unfix(col)
        self.stats.record_cg(CgRecord(result.lp_value, result.lagrangian_bound,
                                      result.status.value, result.iterations))
        logger.debug("cg_solve: %s lp=%.6g bound=%.6g iterations=%d",
                     result.status.value, result.lp_value, result.lagrangian_bound, result.iterations)
        return result

    def _generate(self, mask: bytearray, deadline: Deadline) -> CgResult:
        lp_value = math.inf
        bound = -math.inf
        best_path: Path = ()
        best_cost = math.inf
        x = np.zeros(self.g.arc_count)
        status = CgStatus.DEADLINE_HIT
        certified = False
        iterations = 0
        added_total = 0
        trace: List[float] = []
        solution: Optional[LpSolution] = None

        def offer(path: Path):
            nonlocal best_path, best_cost
            if not path:
                return
            cost = self.g.evaluate(path).cost
            if cost < best_cost and self.feasible_for_all(path):
                best_path, best_cost = tuple(path), cost

        while True:
            if deadline.expired():
                status = CgStatus.DEADLINE_HIT
                break
            solution = self.lp.solve(deadline)
            if solution.status == LpStatus.ITERATION_LIMIT:
                status = CgStatus.DEADLINE_HIT
                break
            if solution.status != LpStatus.OPTIMAL:
                raise NumericalFailure(f"restricted master ended {solution.status.value}")

            iterations += 1
            lp_value = solution.objective
            trace.append(lp_value)
            x = solution.primal[self.x_cols]

            outcomes = self._price_all(solution.duals, mask, deadline)
            all_certified = all(o.certified for o in outcomes)
            if any(o.unfeasible for o in outcomes):
                status = CgStatus.ROOT_INFEASIBLE
                bound = math.inf
                certified = True
                break

            added = 0
            for outcome in outcomes:
                offer(outcome.result.path)
                if outcome.result.path and outcome.reduced_cost < RC_THRESHOLD:
                    outcome.column = self.add_path_column(outcome.owner, outcome.result.path)
                    if outcome.column is not None:
                        added += 1
            added_total += added

            if all_certified:
                bound = max(bound, lagrangian_bound(
                    lp_value, [o.reduced_cost for o in outcomes]))

            if added == 0:
                certified = all_certified
                dummy_used = any(solution.primal[d.lp_id] > INTEGRAL_TOL for d in self.dummies)
                if certified and dummy_used:
                    status = CgStatus.ROOT_INFEASIBLE
                    bound = math.inf
                elif any(o.result.timed_out for o in outcomes):
                    status = CgStatus.DEADLINE_HIT
                else:
                    status = CgStatus.CONVERGED
                break

        if solution is not None and solution.optimal:
            offer(self.x_path(x) or ())

        # columns added after the last LP solve are at zero
        primal = solution.primal if solution is not None else np.zeros(0)
        values = np.array([primal[c.lp_id] if c.lp_id < primal.size else 0.0 for c in self.pool])

        return CgResult(
            lp_value=lp_value,
            lagrangian_bound=bound,
            feasible_path=best_path,
            feasible_cost=best_cost,
            x_fractional=x,
            converged=status == CgStatus.CONVERGED,
            status=status,
            certified=certified,
            iterations=iterations,
            columns_added=added_total,
            lp_trace=trace,
            column_values=values,
        )


def init(g: Graph, algs: Sequence[AtomicAlgorithm], **kwargs) -> MasterModel:
    return MasterModel(g, algs, **kwargs)


def cg_solve(mm: MasterModel, allowed: ArcMask = None, deadline: Optional[Deadline] = None) -> CgResult:
    return mm.cg_solve(allowed, deadline)
