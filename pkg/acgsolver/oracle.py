"""
Ground truth at small scale: exhaustive elementary path enumeration and the
compact flow relaxation (unit s–t flow plus linear resource rows).
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .atomic import ArcMask, ConstraintSpec
from .branch import Status
from .error_handling import CyclicGraph, NumericalFailure, TooLarge
from .graph import Graph, Path

logger = logging.getLogger(__name__)

PARTIAL_PATH_LIMIT = 10**7


@dataclass
class OracleResult:
    status: Status
    path: Path = ()
    cost: float = math.inf
    partial_paths: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == Status.OPTIMAL


def enumerate_paths(g: Graph,
                    constraints: Sequence[ConstraintSpec],
                    allowed: ArcMask = None,
                    limit: int = PARTIAL_PATH_LIMIT) -> OracleResult:
    """Cheapest elementary s–t path meeting every constraint, by exhaustive DFS"""
    consumption = [c.consumption(g) for c in constraints]
    s, t = g.source, g.target
    best_path: Path = ()
    best_cost = math.inf
    partial = 0

    on_path = [False] * g.nodes
    on_path[s] = True
    path: List[int] = []
    # (node, next out-arc position)
    stack = [[s, 0]]
    while stack:
        frame = stack[-1]
        node, pos = frame
        outs = g.out_arcs(node)
        if node == t or pos >= len(outs):
            if node == t:
                totals = [sum(cons[a] for a in path) for cons in consumption]
                if all(c.satisfied_by(x) for c, x in zip(constraints, totals)):
                    cost = sum(g.arcs[a].cost for a in path)
                    if cost < best_cost:
                        best_path, best_cost = tuple(path), cost
            stack.pop()
            on_path[node] = False
            if path:
                path.pop()
            continue
        frame[1] += 1
        a = outs[pos]
        head = g.arcs[a].head
        if (allowed is not None and not allowed[a]) or on_path[head]:
            continue
        partial += 1
        if partial > limit:
            raise TooLarge(f"more than {limit} partial paths")
        on_path[head] = True
        path.append(a)
        stack.append([head, 0])

    logger.debug("enumerated %d partial paths, best cost %g", partial, best_cost)
    if best_path:
        return OracleResult(Status.OPTIMAL, best_path, best_cost, partial)
    return OracleResult(Status.INFEASIBLE, partial_paths=partial)


def is_acyclic(g: Graph) -> bool:
    indegree = [len(g.in_arcs(u)) for u in range(g.nodes)]
    queue = deque(u for u in range(g.nodes) if indegree[u] == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for a in g.out_arcs(u):
            v = g.arcs[a].head
            indegree[v] -= 1
            if indegree[v] == 0:
                queue.append(v)
    return seen == g.nodes


def compact_relaxation(g: Graph, constraints: Sequence[ConstraintSpec]) -> float:
    """LP value of the unit-flow relaxation; +inf when the relaxation is infeasible"""
    if not is_acyclic(g):
        raise CyclicGraph("the compact relaxation has no subtour elimination; graph must be acyclic")

    m = g.arc_count
    cols = np.arange(m)
    tails = np.fromiter((a.tail for a in g.arcs), dtype=int, count=m)
    heads = np.fromiter((a.head for a in g.arcs), dtype=int, count=m)
    incidence = sp.csr_matrix(
        (np.concatenate([np.ones(m), -np.ones(m)]),
         (np.concatenate([tails, heads]), np.concatenate([cols, cols]))),
        shape=(g.nodes, m),
    )
    b_eq = np.zeros(g.nodes)
    b_eq[g.source] = 1.0
    b_eq[g.target] = -1.0

    rows, rhs = [], []
    for c in constraints:
        cons = np.asarray(c.consumption(g), dtype=float)
        rows.append(cons)
        rhs.append(c.upper)
        if c.has_lower:
            rows.append(-cons)
            rhs.append(-c.lower)
    a_ub: Optional[sp.csr_matrix] = sp.csr_matrix(np.vstack(rows)) if rows else None
    b_ub = np.asarray(rhs) if rows else None

    result = linprog(
        np.asarray(g.costs, dtype=float),
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=incidence,
        b_eq=b_eq,
        bounds=(0.0, 1.0),
        method="highs",
    )
    if result.status == 2:
        return math.inf
    if result.status != 0:
        raise NumericalFailure(f"compact relaxation failed: {result.message}")
    return float(result.fun)
