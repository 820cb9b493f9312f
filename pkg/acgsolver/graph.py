"""
Directed multigraph with arc costs and additive resource metrics
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

from .error_handling import BadEndpoint, NegativeCost, ResourceArityMismatch

Path = Tuple[int, ...]


@dataclass(frozen=True)
class Arc:
    id: int
    tail: int
    head: int
    cost: float
    resources: Tuple[float, ...]


@dataclass(frozen=True)
class PathMetrics:
    """Totals of one path as returned by `Graph.evaluate`"""
    cost: float
    resource_totals: Tuple[float, ...]
    elementary: bool
    connects_s_to_t: bool


class Graph:
    """Immutable after construction; use `build` to validate input"""

    def __init__(self, nodes: int, arcs: Sequence[Arc], source: int, target: int, resource_count: int):
        self.nodes = nodes
        self.arcs: Tuple[Arc, ...] = tuple(arcs)
        self.source = source
        self.target = target
        self.resource_count = resource_count

        out_adj: List[List[int]] = [[] for _ in range(nodes)]
        in_adj: List[List[int]] = [[] for _ in range(nodes)]
        for arc in self.arcs:
            out_adj[arc.tail].append(arc.id)
            in_adj[arc.head].append(arc.id)
        self._out = tuple(tuple(a) for a in out_adj)
        self._in = tuple(tuple(a) for a in in_adj)

        self.costs: Tuple[float, ...] = tuple(a.cost for a in self.arcs)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    def out_arcs(self, u: int) -> Tuple[int, ...]:
        """δ⁺(u) in insertion order"""
        return self._out[u]

    def in_arcs(self, u: int) -> Tuple[int, ...]:
        """δ⁻(u) in insertion order"""
        return self._in[u]

    def resource(self, j: int) -> List[float]:
        """Per-arc values of metric j"""
        return [a.resources[j] for a in self.arcs]

    def with_endpoints(self, source: int, target: int) -> "Graph":
        """Same arcs, different s and t"""
        _check_endpoints(self.nodes, source, target)
        return Graph(self.nodes, self.arcs, source, target, self.resource_count)

    def node_sequence(self, path: Path) -> List[int]:
        """Tail of the first arc followed by every head; empty for an empty path"""
        if not path:
            return []
        nodes = [self.arcs[path[0]].tail]
        nodes.extend(self.arcs[a].head for a in path)
        return nodes

    def evaluate(self, path: Path) -> PathMetrics:
        """Cost and resource totals of path, plus whether it is elementary and runs from s to t

        Arc ids are not checked to chain; a broken chain only clears connects_s_to_t.
        """
        cost = 0.0
        totals = [0.0] * self.resource_count
        for a in path:
            arc = self.arcs[a]
            cost += arc.cost
            for j, r in enumerate(arc.resources):
                totals[j] += r

        nodes = self.node_sequence(path)
        elementary = len(set(nodes)) == len(nodes)
        chained = all(self.arcs[x].head == self.arcs[y].tail for x, y in zip(path, path[1:]))
        connects = (
            bool(path)
            and chained
            and nodes[0] == self.source
            and nodes[-1] == self.target
        )
        return PathMetrics(cost, tuple(totals), elementary, connects)

    def is_elementary_st_path(self, path: Path) -> bool:
        """True for a simple s-t path; the empty path never qualifies"""
        metrics = self.evaluate(path)
        return metrics.elementary and metrics.connects_s_to_t

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.source == other.source
            and self.target == other.target
            and self.resource_count == other.resource_count
            and self.arcs == other.arcs
        )

    def __hash__(self):
        return hash((self.nodes, self.source, self.target, self.resource_count, self.arcs))

    def __repr__(self) -> str:
        return (f"Graph(nodes={self.nodes}, arcs={len(self.arcs)}, "
                f"s={self.source}, t={self.target}, resources={self.resource_count})")


def _check_endpoints(nodes: int, source: int, target: int):
    if not (0 <= source < nodes and 0 <= target < nodes):
        raise BadEndpoint(f"source {source} / target {target} outside 0..{nodes - 1}")
    if source == target:
        raise BadEndpoint(f"source and target coincide ({source})")


def build(nodes: int,
          arcs: Iterable[Tuple[int, int, float, Sequence[float]]],
          source: int,
          target: int,
          resource_count: int) -> Graph:
    """Validate (tail, head, cost, resources) tuples and build a Graph"""
    if nodes < 2:
        raise BadEndpoint(f"a graph needs at least two nodes, got {nodes}")
    _check_endpoints(nodes, source, target)

    built: List[Arc] = []
    for idx, (tail, head, cost, resources) in enumerate(arcs):
        if not (0 <= tail < nodes and 0 <= head < nodes):
            raise BadEndpoint(f"arc {idx} ({tail}->{head}) has an endpoint outside 0..{nodes - 1}")
        if tail == head:
            raise BadEndpoint(f"arc {idx} is a self-loop on node {tail}")
        cost = float(cost)
        if cost < 0:
            raise NegativeCost(f"arc {idx} has negative cost {cost}")
        resources = tuple(float(r) for r in resources)
        if len(resources) != resource_count:
            raise ResourceArityMismatch(
                f"arc {idx} carries {len(resources)} resources, expected {resource_count}"
            )
        if any(r < 0 for r in resources):
            raise NegativeCost(f"arc {idx} has a negative resource value {resources}")
        built.append(Arc(idx, int(tail), int(head), cost, resources))

    return Graph(nodes, built, source, target, resource_count)


def out_arcs(g: Graph, u: int) -> Tuple[int, ...]:
    """Function form of `Graph.out_arcs`"""
    return g.out_arcs(u)


def evaluate(g: Graph, path: Path) -> PathMetrics:
    return g.evaluate(path)
