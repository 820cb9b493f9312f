"""
Branch-and-price driver

Best-first search over path prefixes. Each state carries the prefix cost,
the prefix, a direction path extending it, the eligible arcs and a lower
bound; children extend the prefix by one arc and are re-evaluated with the
atomic algorithms (certificates) and, once the eligible arc set is small
enough, with column generation on the shared master model.
"""

import dataclasses
import heapq
import itertools
import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .atomic import AtomicAlgorithm, dijkstra, full_mask
from .config import SolverConfig
from .error_handling import ArcNotEligible
from .graph import Graph, Path
from .master import CgStatus, MasterModel
from .progress import SolveStats
from .utils import Deadline, elapsed_ms

logger = logging.getLogger(__name__)

INF = math.inf
PRUNE_TOL = 1e-9


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    FEASIBLE = "feasible"


@dataclass
class BranchState:
    c: float
    p: Path
    p_plus: Path
    allowed: bytearray
    allowed_count: int
    l: float
    seq: int = 0

    def last(self, g: Graph) -> int:
        return g.arcs[self.p[-1]].head if self.p else g.source

    def sort_key(self) -> Tuple[float, int, int]:
        # min bound, then deeper prefixes, then creation order
        return (self.l, -len(self.p), self.seq)


@dataclass
class Incumbent:
    path: Path = ()
    cost: float = INF
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def offer(self, path: Path, cost: float) -> bool:
        """Replace the incumbent when strictly cheaper"""
        with self._lock:
            if path and cost < self.cost:
                self.path, self.cost = tuple(path), cost
                return True
            return False


@dataclass
class Solution:
    status: Status
    path: Path
    cost: float
    lower_bound: float
    stats: SolveStats
    resource_totals: Tuple[float, ...] = ()

    @property
    def gap(self) -> Optional[float]:
        if not (math.isfinite(self.cost) and math.isfinite(self.lower_bound)) or self.cost == 0:
            return None
        return max(0.0, (self.cost - self.lower_bound) / self.cost)


def filter_arcs(g: Graph, allowed: bytearray, count: int, chosen: int, prefix: Path) -> Tuple[bytearray, int]:
    """Eligible arcs after appending `chosen`; every remaining s–t path starts with prefix‖chosen"""
    end = g.arcs[prefix[-1]].head if prefix else g.source
    arc = g.arcs[chosen]
    if not allowed[chosen] or arc.tail != end:
        raise ArcNotEligible(f"arc {chosen} cannot extend a prefix ending at node {end}")

    mask = bytearray(allowed)
    removed = 0

    def drop(a):
        nonlocal removed
        if mask[a]:
            mask[a] = 0
            removed += 1

    for a in g.out_arcs(arc.tail):
        if a != chosen:
            drop(a)
    for a in g.in_arcs(arc.head):
        if a != chosen:
            drop(a)
    # the prefix itself stays eligible so (V, Ā′) still holds s–t paths
    kept = set(prefix)
    prefix_nodes = g.node_sequence(prefix) if prefix else [g.source]
    for u in prefix_nodes:
        for a in g.in_arcs(u):
            if a not in kept:
                drop(a)
    if arc.head == g.target:
        for a in g.out_arcs(g.target):
            drop(a)
    return mask, count - removed


class BranchAndPrice:
    """Algorithm state of one solve: master model, incumbent, queue"""

    def __init__(self, g: Graph, algs: Sequence[AtomicAlgorithm], config: Optional[SolverConfig] = None):
        self.g = g
        self.config = config or SolverConfig()
        self.algs = [dataclasses.replace(a, heuristic_mode=self.config.heuristic) for a in algs]
        if self.config.seed:
            # nonzero seeds shuffle the order in which atomic algorithms are tried and priced
            order = np.random.Generator(np.random.PCG64(self.config.seed)).permutation(len(self.algs))
            self.algs = [self.algs[i] for i in order]
        self.stats = SolveStats()
        self.mm = MasterModel(g, self.algs,
                              t_atomic_ms=self.config.t_atomic_ms,
                              pricing_workers=self.config.pricing_workers,
                              stats=self.stats)
        self.incumbent = Incumbent()
        self._mm_lock = threading.Lock()
        self._seq = itertools.count()

    def _offer(self, path: Path, cost: float):
        if self.incumbent.offer(path, cost):
            logger.info("new incumbent: cost %g (%d arcs)", cost, len(path))

    def _cg(self, allowed: Optional[bytearray], deadline: Deadline):
        with self._mm_lock:
            return self.mm.cg_solve(allowed, deadline.sub(self.config.t_acg_ms))

    def update(self, B: BranchState, deadline: Deadline):
        """Tighten B.l, find directions and incumbents for the subtree of B"""
        g = self.g
        dist = dijkstra(g, g.costs, g.target, reversed=True, allowed=B.allowed)
        end = B.last(g)
        if dist[end] == INF:
            B.l = INF
            return
        B.l = max(B.l, B.c + dist[end])

        c_plus = INF
        for alpha, alg in enumerate(self.algs):
            if deadline.expired():
                return
            result = alg.solve(g, g.costs, B.allowed, deadline.sub(self.config.t_atomic_ms))
            self.stats.bump("atomic_calls")
            if result.unfeas:
                B.l = INF
                return
            feasible = bool(result.path) and self.mm.feasible_for_all(result.path, skip=alpha)
            if result.opt:
                B.l = max(B.l, result.cost)
                if feasible:
                    self._offer(result.path, result.cost)
                    B.p_plus = result.path
                    return
            if feasible and result.cost < c_plus:
                self._offer(result.path, result.cost)
                B.p_plus, c_plus = result.path, result.cost

        if B.allowed_count / g.arc_count <= self.config.gamma_ratio and not deadline.expired():
            cg = self._cg(B.allowed, deadline)
            B.l = max(B.l, cg.lagrangian_bound)
            if cg.feasible_path:
                self._offer(cg.feasible_path, cg.feasible_cost)
                if cg.feasible_cost < c_plus:
                    B.p_plus = cg.feasible_path

    def expand(self, B: BranchState, deadline: Deadline) -> List[BranchState]:
        g = self.g
        end = B.last(g)
        if end == g.target:
            return []
        self.stats.bump("nodes_expanded")
        children = []
        for a in g.out_arcs(end):
            if not B.allowed[a]:
                continue
            mask, count = filter_arcs(g, B.allowed, B.allowed_count, a, B.p)
            c = B.c + g.arcs[a].cost
            follows = a in B.p_plus
            child = BranchState(
                c=c,
                p=B.p + (a,),
                p_plus=B.p_plus if follows else (),
                allowed=mask,
                allowed_count=count,
                l=max(B.l, c),
                seq=next(self._seq),
            )
            if not follows:
                self.update(child, deadline)
            children.append(child)
        return children

    def _root(self, deadline: Deadline) -> Optional[BranchState]:
        """Root bounds; None when the instance is proven infeasible"""
        g = self.g
        dist = dijkstra(g, g.costs, g.target, reversed=True)
        if dist[g.source] == INF:
            return None
        root = BranchState(0.0, (), (), full_mask(g), g.arc_count, dist[g.source], next(self._seq))

        cg = self._cg(None, deadline)
        logger.info("root: %s lp=%.6g bound=%.6g columns=%d",
                    cg.status.value, cg.lp_value, cg.lagrangian_bound, len(self.mm.path_columns))
        if cg.status == CgStatus.ROOT_INFEASIBLE:
            return None
        root.l = max(root.l, cg.lagrangian_bound)
        if cg.feasible_path:
            root.p_plus = cg.feasible_path
            self._offer(cg.feasible_path, cg.feasible_cost)
        return root

    def _finish(self, status: Status, lower_bound: float, start: float) -> Solution:
        self.stats.wall_ms = elapsed_ms(start)
        inc = self.incumbent
        if status == Status.OPTIMAL:
            lower_bound = inc.cost
        totals = self.g.evaluate(inc.path).resource_totals if inc.path else ()
        logger.info("finished: %s cost=%g bound=%g nodes=%d columns=%d",
                    status.value, inc.cost, lower_bound, self.stats.nodes_expanded, self.stats.columns)
        return Solution(status, inc.path, inc.cost, min(lower_bound, inc.cost), self.stats, totals)

    def solve(self) -> Solution:
        start = time.monotonic()
        deadline = Deadline.after_ms(self.config.global_limit_ms)

        root = self._root(deadline)
        if root is None:
            return self._finish(Status.INFEASIBLE, INF, start)

        if self.config.root_only:
            if self.incumbent.path and root.l >= self.incumbent.cost - PRUNE_TOL:
                return self._finish(Status.OPTIMAL, root.l, start)
            status = Status.FEASIBLE if self.incumbent.path else Status.TIME_LIMIT
            return self._finish(status, root.l, start)

        heap: List[Tuple[Tuple[float, int, int], BranchState]] = []

        def push(state: BranchState):
            if state.l < self.incumbent.cost - PRUNE_TOL:
                heapq.heappush(heap, (state.sort_key(), state))

        push(root)
        workers = self.config.effective_workers
        if workers > 1:
            self._search_parallel(heap, push, deadline, workers)
        else:
            self._search(heap, push, deadline)

        live = [s.l for _, s in heap if s.l < self.incumbent.cost - PRUNE_TOL]
        if live:
            return self._finish(Status.TIME_LIMIT, min(live), start)
        if self.incumbent.path:
            return self._finish(Status.OPTIMAL, self.incumbent.cost, start)
        return self._finish(Status.INFEASIBLE, INF, start)

    def _pop(self, heap) -> Optional[BranchState]:
        while heap:
            _, state = heapq.heappop(heap)
            # lazy deletion: the incumbent may have improved since the push
            if state.l < self.incumbent.cost - PRUNE_TOL:
                return state
        return None

    def _search(self, heap, push, deadline: Deadline):
        while heap and not deadline.expired():
            state = self._pop(heap)
            if state is None:
                break
            for child in self.expand(state, deadline):
                push(child)

    def _search_parallel(self, heap, push, deadline: Deadline, workers: int):
        with ThreadPoolExecutor(max_workers=workers) as executor:
            while heap and not deadline.expired():
                batch = []
                while heap and len(batch) < workers:
                    state = self._pop(heap)
                    if state is None:
                        break
                    batch.append(state)
                if not batch:
                    break
                futures = [executor.submit(self.expand, state, deadline) for state in batch]
                for future in as_completed(futures):
                    for child in future.result():
                        push(child)


def solve(g: Graph, algs: Sequence[AtomicAlgorithm], config: Optional[SolverConfig] = None) -> Solution:
    return BranchAndPrice(g, algs, config).solve()

