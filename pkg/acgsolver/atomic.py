"""
Atomic path algorithms

Constraint kinds, Dijkstra, the MultiPulse exact RCSP engine (upper and
lower bounds) and the atomic-algorithm wrapper returning a path together
with optimality / unfeasibility certificates.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

from .error_handling import InvalidConstraint, NegativeCost
from .graph import Graph, Path
from .utils import Deadline

logger = logging.getLogger(__name__)

INF = math.inf
TOL = 1e-9
DEADLINE_CHECK_MASK = 1023

# Bitmask over arc ids; None means every arc is allowed
ArcMask = Optional[bytearray]


def full_mask(g: Graph) -> bytearray:
    return bytearray(b"\x01") * g.arc_count


def mask_of(g: Graph, arcs) -> bytearray:
    mask = bytearray(g.arc_count)
    for a in arcs:
        mask[a] = 1
    return mask


class ConstraintKind(Enum):
    UPPER = "upper"
    RANGE = "range"
    INCLUDE = "include"


@dataclass(frozen=True)
class ConstraintSpec:
    """One additional constraint; Include is a unit resource on δ⁺(node) with l=u=1"""
    kind: ConstraintKind
    resource_index: Optional[int] = None
    upper: Optional[float] = None
    lower: Optional[float] = None
    node: Optional[int] = None

    def __post_init__(self):
        kind = ConstraintKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind == ConstraintKind.INCLUDE:
            if self.node is None:
                raise InvalidConstraint("include constraint needs a node")
            object.__setattr__(self, "lower", 1.0)
            object.__setattr__(self, "upper", 1.0)
            return
        if self.resource_index is None or self.resource_index < 0:
            raise InvalidConstraint(f"{kind.value} constraint needs a resource index")
        if self.upper is None or not math.isfinite(self.upper):
            raise InvalidConstraint(f"{kind.value} constraint needs a finite upper bound")
        object.__setattr__(self, "upper", float(self.upper))
        if kind == ConstraintKind.RANGE:
            if self.lower is None or not math.isfinite(self.lower):
                raise InvalidConstraint("range constraint needs a finite lower bound")
            object.__setattr__(self, "lower", float(self.lower))
            if self.lower > self.upper:
                raise InvalidConstraint(f"range lower {self.lower} exceeds upper {self.upper}")
        elif self.lower is not None:
            raise InvalidConstraint("upper constraint takes no lower bound")

    @classmethod
    def upper_bound(cls, resource: int, upper: float) -> "ConstraintSpec":
        return cls(ConstraintKind.UPPER, resource_index=resource, upper=upper)

    @classmethod
    def range_bound(cls, resource: int, lower: float, upper: float) -> "ConstraintSpec":
        return cls(ConstraintKind.RANGE, resource_index=resource, lower=lower, upper=upper)

    @classmethod
    def include(cls, node: int) -> "ConstraintSpec":
        return cls(ConstraintKind.INCLUDE, node=node)

    @property
    def has_lower(self) -> bool:
        return self.kind != ConstraintKind.UPPER

    def consumption(self, g: Graph) -> List[float]:
        """Per-arc consumption of the metric this constraint bounds"""
        if self.kind == ConstraintKind.INCLUDE:
            return [1.0 if arc.tail == self.node else 0.0 for arc in g.arcs]
        if self.resource_index >= g.resource_count:
            raise InvalidConstraint(
                f"resource {self.resource_index} out of range for {g.resource_count} metrics"
            )
        return g.resource(self.resource_index)

    def satisfied_by(self, total: float) -> bool:
        if total > self.upper + TOL:
            return False
        if self.has_lower and total < self.lower - TOL:
            return False
        return True

    def __str__(self) -> str:
        if self.kind == ConstraintKind.INCLUDE:
            return f"include({self.node})"
        if self.kind == ConstraintKind.UPPER:
            return f"r{self.resource_index}<={self.upper:g}"
        return f"r{self.resource_index} in [{self.lower:g},{self.upper:g}]"


@dataclass
class AtomicResult:
    path: Path = ()
    opt: bool = False
    unfeas: bool = False
    cost: float = INF
    expansions: int = 0
    # search stopped at its deadline before exhausting (V, Ā)
    timed_out: bool = False


@dataclass
class Bounds:
    """Reverse shortest-path minima to the target on the allowed arcs"""
    min_cost_to_t: List[float]
    # indexed [constraint][node]
    min_resource_to_t: List[List[float]]


def dijkstra(g: Graph,
             arc_costs: Sequence[float],
             origin: int,
             reversed: bool = False,
             allowed: ArcMask = None) -> List[float]:
    """Exact distances from (or, reversed, to) `origin`; +inf when unreachable"""
    for a, c in enumerate(arc_costs):
        if c < 0 and (allowed is None or allowed[a]):
            raise NegativeCost(f"arc {a} has negative cost {c}")

    dist = [INF] * g.nodes
    dist[origin] = 0.0
    heap = [(0.0, origin)]
    arcs = g.arcs
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for a in (g.in_arcs(u) if reversed else g.out_arcs(u)):
            if allowed is not None and not allowed[a]:
                continue
            c = arc_costs[a]
            if c == INF:
                continue
            v = arcs[a].tail if reversed else arcs[a].head
            nd = d + c
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def pulse_preprocess(g: Graph,
                     arc_costs: Sequence[float],
                     constraints: Sequence[ConstraintSpec],
                     allowed: ArcMask = None,
                     consumption: Optional[Sequence[Sequence[float]]] = None) -> Bounds:
    if consumption is None:
        consumption = [c.consumption(g) for c in constraints]
    t = g.target
    return Bounds(
        min_cost_to_t=dijkstra(g, arc_costs, t, reversed=True, allowed=allowed),
        min_resource_to_t=[dijkstra(g, cons, t, reversed=True, allowed=allowed) for cons in consumption],
    )


def pulse_next_arc(g: Graph,
                   consumed: Sequence[float],
                   candidates: Sequence[int],
                   constraints: Sequence[ConstraintSpec],
                   consumption: Sequence[Sequence[float]],
                   arc_costs: Sequence[float],
                   bounds: Bounds) -> List[int]:
    """Order candidate extensions: close the worst lower-bound gap first, else shortest path"""
    if len(candidates) <= 1:
        return list(candidates)

    lowered = [k for k, c in enumerate(constraints) if c.has_lower]
    worst_gap = max((constraints[k].lower - consumed[k] for k in lowered), default=-INF)

    if worst_gap > 0:
        def key(a):
            gap = max(constraints[k].lower - consumed[k] - consumption[k][a] for k in lowered)
            return gap, a
    else:
        arcs = g.arcs
        to_t = bounds.min_cost_to_t

        def key(a):
            return arc_costs[a] + to_t[arcs[a].head], a

    return sorted(candidates, key=key)


class MultiPulse:
    """Pulse depth-first search generalised to lower bounds"""

    def __init__(self, constraints: Sequence[ConstraintSpec]):
        self.constraints: Tuple[ConstraintSpec, ...] = tuple(constraints)
        self._cache: Optional[Tuple[Graph, List[List[float]]]] = None

    def consumption(self, g: Graph) -> List[List[float]]:
        cache = self._cache
        if cache is not None and cache[0] is g:
            return cache[1]
        vectors = [c.consumption(g) for c in self.constraints]
        self._cache = (g, vectors)
        return vectors

    def solve(self,
              g: Graph,
              arc_costs: Sequence[float],
              allowed: ArcMask = None,
              deadline: Optional[Deadline] = None) -> AtomicResult:
        constraints = self.constraints
        consumption = self.consumption(g)
        bounds = pulse_preprocess(g, arc_costs, constraints, allowed, consumption)
        s, t = g.source, g.target
        min_cost = bounds.min_cost_to_t
        min_res = bounds.min_resource_to_t
        uppers = [c.upper for c in constraints]
        lowers = [c.lower if c.has_lower else -INF for c in constraints]
        K = range(len(constraints))

        if min_cost[s] == INF or any(min_res[k][s] > uppers[k] + TOL for k in K):
            return AtomicResult(unfeas=True)

        arcs = g.arcs
        visited = bytearray(g.nodes)
        visited[s] = 1

        def ordered(node, consumed):
            candidates = [
                a for a in g.out_arcs(node)
                if (allowed is None or allowed[a])
                and arc_costs[a] != INF
                and not visited[arcs[a].head]
            ]
            return iter(pulse_next_arc(g, consumed, candidates, constraints, consumption, arc_costs, bounds))

        best_cost = INF
        best_path: Path = ()
        path: List[int] = []
        expansions = 0
        timed_out = False

        root = (0.0,) * len(constraints)
        stack = [(s, ordered(s, root), 0.0, root)]
        while stack:
            node, it, cost, consumed = stack[-1]
            a = next(it, None)
            if a is None:
                stack.pop()
                if path:
                    visited[arcs[path.pop()].head] = 0
                continue

            expansions += 1
            if (expansions & DEADLINE_CHECK_MASK) == 0 and deadline is not None and deadline.expired():
                timed_out = True
                break

            head = arcs[a].head
            if visited[head]:
                continue
            new_cost = cost + arc_costs[a]
            # (ii) bound against the incumbent
            if new_cost + min_cost[head] >= best_cost - 1e-12:
                continue
            new_consumed = tuple(consumed[k] + consumption[k][a] for k in K)
            # (i) infeasibility against upper bounds
            if any(new_consumed[k] + min_res[k][head] > uppers[k] + TOL for k in K):
                continue
            if head == t:
                if all(new_consumed[k] >= lowers[k] - TOL for k in K):
                    best_cost = new_cost
                    best_path = tuple(path) + (a,)
                continue

            path.append(a)
            visited[head] = 1
            stack.append((head, ordered(head, new_consumed), new_cost, new_consumed))

        if timed_out:
            logger.debug("multipulse hit its deadline after %d expansions", expansions)
            return AtomicResult(best_path, False, False, best_cost, expansions, timed_out=True)
        if best_path:
            return AtomicResult(best_path, True, False, best_cost, expansions)
        return AtomicResult((), False, True, INF, expansions)


def multipulse(g: Graph,
               arc_costs: Sequence[float],
               constraints: Sequence[ConstraintSpec],
               allowed: ArcMask = None,
               deadline: Optional[Deadline] = None) -> AtomicResult:
    return MultiPulse(constraints).solve(g, arc_costs, allowed, deadline)


def sole_path(g: Graph, allowed: ArcMask) -> Optional[Path]:
    """The s–t path when the useful part of (V, Ā) is exactly one path, else None"""
    s, t = g.source, g.target
    unit = [1.0] * g.arc_count
    forward = dijkstra(g, unit, s, allowed=allowed)
    backward = dijkstra(g, unit, t, reversed=True, allowed=allowed)
    if forward[t] == INF:
        return None

    def useful(a):
        arc = g.arcs[a]
        return (allowed is None or allowed[a]) and forward[arc.tail] < INF and backward[arc.head] < INF

    useful_count = sum(1 for a in range(g.arc_count) if useful(a))
    path: List[int] = []
    seen = {s}
    node = s
    while node != t:
        outs = [a for a in g.out_arcs(node) if useful(a)]
        if len(outs) != 1:
            return None
        a = outs[0]
        node = g.arcs[a].head
        if node in seen:
            return None
        seen.add(node)
        path.append(a)
    if len(path) != useful_count:
        return None
    return tuple(path)


@dataclass
class AtomicAlgorithm:
    """Black-box path solver for a subset of the additional constraints"""
    constraints: Tuple[ConstraintSpec, ...]
    heuristic_mode: bool = False
    name: str = ""
    engine: MultiPulse = field(init=False, repr=False)

    def __post_init__(self):
        self.constraints = tuple(self.constraints)
        if not self.name:
            self.name = " & ".join(str(c) for c in self.constraints) or "unconstrained"
        self.engine = MultiPulse(self.constraints)

    def check(self, g: Graph, path: Path) -> bool:
        """True iff `path` is an elementary s–t path meeting every constraint"""
        if not g.is_elementary_st_path(path):
            return False
        for constraint, cons in zip(self.constraints, self.engine.consumption(g)):
            if not constraint.satisfied_by(sum(cons[a] for a in path)):
                return False
        return True

    def solve(self,
              g: Graph,
              arc_costs: Sequence[float],
              allowed: ArcMask = None,
              deadline: Optional[Deadline] = None) -> AtomicResult:
        result = self.engine.solve(g, arc_costs, allowed, deadline)
        if self.heuristic_mode and (result.opt or result.unfeas) and sole_path(g, allowed) is None:
            result.opt = False
            result.unfeas = False
        return result


def check(alg: AtomicAlgorithm, g: Graph, path: Path) -> bool:
    return alg.check(g, path)


def atomic_solve(alg: AtomicAlgorithm,
                 g: Graph,
                 arc_costs: Sequence[float],
                 allowed: ArcMask = None,
                 deadline: Optional[Deadline] = None) -> AtomicResult:
    return alg.solve(g, arc_costs, allowed, deadline)
