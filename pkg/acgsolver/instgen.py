"""
Instance generation and serialization

Seeded grid, layered and topology-file graphs; random-walk instances that
are feasible by construction; instances whose constraints are individually
satisfiable but jointly infeasible; JSON instance and solution files.
All randomness comes from numpy's PCG64 generator seeded by the caller.
"""

import io
import json
import logging
import math
import re
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union
from xml.etree import ElementTree

import networkx as nx
import numpy as np

from .atomic import AtomicAlgorithm, ConstraintKind, ConstraintSpec, dijkstra, multipulse
from .branch import Solution, Status
from .error_handling import (
    BaseInfeasible,
    GenerationError,
    InvalidConstraint,
    ParseError,
    WalkTooShort,
)
from .graph import Graph, Path, build
from .progress import SolveStats
from .utils import json_number

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
WEIGHT_LOW, WEIGHT_HIGH = 10, 100
DEFAULT_RESOURCES = 6
VARIATION = 0.2
UNFEASIBLE_ATTEMPTS = 64


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class Instance:
    graph: Graph
    constraints: List[ConstraintSpec]
    grouping: List[List[int]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)
    # Generator witness path; not serialized
    witness: Path = field(default=(), compare=False)

    def __post_init__(self):
        self.constraints = list(self.constraints)
        if not self.grouping:
            self.grouping = [[i] for i in range(len(self.constraints))]
        self.grouping = [list(group) for group in self.grouping]
        self.validate()

    def validate(self):
        g = self.graph
        for i, c in enumerate(self.constraints):
            if c.kind == ConstraintKind.INCLUDE:
                if not 0 <= c.node < g.nodes:
                    raise InvalidConstraint(f"constraint {i}: include node {c.node} outside the graph")
            elif c.resource_index >= g.resource_count:
                raise InvalidConstraint(
                    f"constraint {i}: resource {c.resource_index} outside 0..{g.resource_count - 1}"
                )
        covered = set()
        for group in self.grouping:
            for i in group:
                if not 0 <= i < len(self.constraints):
                    raise InvalidConstraint(f"grouping refers to unknown constraint {i}")
                covered.add(i)
        missing = set(range(len(self.constraints))) - covered
        if missing:
            raise InvalidConstraint(f"constraints {sorted(missing)} belong to no atomic algorithm")

    def atomic_algorithms(self, heuristic: bool = False) -> List[AtomicAlgorithm]:
        """One atomic algorithm per group; an unconstrained instance gets a plain shortest path"""
        if not self.grouping:
            return [AtomicAlgorithm((), heuristic_mode=heuristic)]
        return [
            AtomicAlgorithm(tuple(self.constraints[i] for i in group), heuristic_mode=heuristic)
            for group in self.grouping
        ]


def _weighted_arcs(pairs: Sequence[Tuple[int, int]], rng: np.random.Generator, resource_count: int) -> List[tuple]:
    # cost then each resource, arc by arc, uniform integers in [10, 100]
    draws = rng.integers(WEIGHT_LOW, WEIGHT_HIGH + 1, size=(len(pairs), 1 + resource_count))
    return [
        (u, v, int(row[0]), [int(x) for x in row[1:]])
        for (u, v), row in zip(pairs, draws)
    ]


def _weighted_graph(nodes: int,
                    pairs: Sequence[Tuple[int, int]],
                    rng: np.random.Generator,
                    source: int,
                    target: int,
                    resource_count: int) -> Graph:
    arcs = _weighted_arcs(pairs, rng, resource_count)
    return build(nodes, arcs, source, target, resource_count)


def grid(width: int, height: int, seed: int, resource_count: int = DEFAULT_RESOURCES) -> Graph:
    """Bidirected 4-neighbour grid; node id = y * width + x, source 0, target the last node"""
    if width < 2 or height < 2:
        raise GenerationError(f"grid needs width and height >= 2, got {width}x{height}")
    pairs = []
    for y in range(height):
        for x in range(width):
            u = y * width + x
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                gx, gy = x + dx, y + dy
                if 0 <= gx < width and 0 <= gy < height:
                    pairs.append((u, gy * width + gx))
    n = width * height
    g = _weighted_graph(n, pairs, make_rng(seed), 0, n - 1, resource_count)
    logger.debug("grid %dx%d: %d nodes, %d arcs", width, height, g.nodes, g.arc_count)
    return g


def layered(layers: int, width: int, seed: int, resource_count: int = 2) -> Graph:
    """Acyclic graph: source, `layers` layers of `width` nodes fully linked layer to layer, target"""
    if layers < 1 or width < 1:
        raise GenerationError(f"layered graph needs layers, width >= 1, got {layers}, {width}")
    n = layers * width + 2
    source, target = 0, n - 1

    def layer(k):
        return range(1 + k * width, 1 + (k + 1) * width)

    pairs = [(source, v) for v in layer(0)]
    for k in range(layers - 1):
        pairs.extend((u, v) for u in layer(k) for v in layer(k + 1))
    pairs.extend((u, target) for u in layer(layers - 1))
    return _weighted_graph(n, pairs, make_rng(seed), source, target, resource_count)


_SNDLIB_SECTION = re.compile(r"^\s*(NODES|LINKS)\s*\(\s*$")
_SNDLIB_NODE = re.compile(r"^\s*(\S+)\s*\(")
_SNDLIB_LINK = re.compile(r"^\s*\S+\s*\(\s*(\S+)\s+(\S+)\s*\)")


Link = Tuple[str, str, Optional[float]]


def _loss(value: str, lineno: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"bad loss probability {value!r}", line=lineno) from None


def _sndlib_links(lines: List[str]) -> Tuple[List[str], List[Link]]:
    names: List[str] = []
    links: List[Link] = []
    section = None
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        match = _SNDLIB_SECTION.match(stripped)
        if match:
            section = match.group(1)
            continue
        if stripped == ")":
            section = None
            continue
        if section == "NODES":
            node = _SNDLIB_NODE.match(stripped)
            if not node:
                raise ParseError(f"bad node line {stripped!r}", line=lineno)
            names.append(node.group(1))
        elif section == "LINKS":
            link = _SNDLIB_LINK.match(stripped)
            if not link:
                raise ParseError(f"bad link line {stripped!r}", line=lineno)
            links.append((link.group(1), link.group(2), None))
    return names, links


def _edge_list(lines: List[str]) -> Tuple[List[str], List[Link]]:
    """'u v' per line, optionally followed by the link's loss probability"""
    names: List[str] = []
    links: List[Link] = []
    for lineno, line in enumerate(lines, 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v [loss]', got {stripped!r}", line=lineno)
        loss = _loss(parts[2], lineno) if len(parts) == 3 else None
        links.append((parts[0], parts[1], loss))
    return names, links


def _graphml_links(text: str) -> Tuple[List[str], List[Link]]:
    """Topology-zoo style GraphML; an edge attribute 'loss' is read as a probability"""
    try:
        topo = nx.read_graphml(io.BytesIO(text.encode("utf-8")))
    except (nx.NetworkXError, ElementTree.ParseError) as exc:
        raise ParseError(f"bad GraphML: {exc}") from exc
    names = [str(n) for n in topo.nodes]
    links: List[Link] = []
    for u, v, data in topo.edges(data=True):
        loss = data.get("loss")
        try:
            links.append((str(u), str(v), None if loss is None else float(loss)))
        except ValueError:
            raise ParseError(f"bad loss probability {loss!r} on link {u}-{v}") from None
    return names, links


def read_topology(text: str, seed: int, resource_count: int = DEFAULT_RESOURCES) -> Graph:
    """GraphML, SNDlib native (NODES/LINKS sections) or 'u v [loss]' edge list; links are bidirected

    When any link carries a loss probability, metric 0 holds the additive
    loss of each arc (links without one are lossless) instead of a random weight.
    """
    lines = text.splitlines()
    if text.lstrip().startswith("<"):
        names, links = _graphml_links(text)
    elif any(_SNDLIB_SECTION.match(line.split("#", 1)[0].strip()) for line in lines):
        names, links = _sndlib_links(lines)
    else:
        names, links = _edge_list(lines)

    ids: Dict[str, int] = {}
    for name in names:
        ids.setdefault(name, len(ids))
    pairs = []
    losses = []
    for u, v, loss in links:
        for name in (u, v):
            ids.setdefault(name, len(ids))
        if u == v:
            continue
        pairs.extend([(ids[u], ids[v]), (ids[v], ids[u])])
        losses.extend([loss, loss])
    if len(ids) < 2:
        raise ParseError("topology has fewer than two nodes")

    arcs = _weighted_arcs(pairs, make_rng(seed), resource_count)
    if any(loss is not None for loss in losses):
        if resource_count < 1:
            raise ParseError("loss probabilities need at least one metric")
        try:
            for arc, loss in zip(arcs, losses):
                arc[3][0] = additive_loss(loss or 0.0)
        except InvalidConstraint as exc:
            raise ParseError(str(exc)) from exc
    return build(len(ids), arcs, 0, len(ids) - 1, resource_count)


def additive_loss(p: float) -> float:
    """-log(1 - p): packet-loss probabilities become an additive metric"""
    if not 0.0 <= p < 1.0:
        raise InvalidConstraint(f"loss probability must lie in [0, 1), got {p}")
    return -math.log1p(-p)


def random_walk(g: Graph, path_size: int, rng: np.random.Generator, start: Optional[int] = None) -> Path:
    """Elementary walk from `start` (default a uniform random node); stops at path_size arcs or a dead end"""
    node = int(rng.integers(g.nodes)) if start is None else start
    visited = {node}
    walk: List[int] = []
    while len(walk) < path_size:
        candidates = [a for a in g.out_arcs(node) if g.arcs[a].head not in visited]
        if not candidates:
            break
        a = candidates[int(rng.integers(len(candidates)))]
        walk.append(a)
        node = g.arcs[a].head
        visited.add(node)
    return tuple(walk)


def gen_feasible(g: Graph,
                 path_size: int,
                 seed: int,
                 n_upper: int = 3,
                 n_range: int = 3,
                 include: bool = True,
                 start: Optional[int] = None) -> Instance:
    """Bounds from the totals of a random elementary walk; the walk witnesses feasibility"""
    if path_size < 1:
        raise WalkTooShort(f"path_size must be at least 1, got {path_size}")
    if n_upper + n_range > g.resource_count:
        raise GenerationError(
            f"{n_upper} upper + {n_range} range constraints need more than {g.resource_count} metrics"
        )
    rng = make_rng(seed)
    walk = random_walk(g, path_size, rng, start)
    if not walk:
        raise WalkTooShort("random walk found no arc to leave its start node")
    nodes = g.node_sequence(walk)
    walk_graph = g.with_endpoints(nodes[0], nodes[-1])
    totals = walk_graph.evaluate(walk).resource_totals

    constraints = [
        ConstraintSpec.upper_bound(j, totals[j] * (1 + VARIATION))
        for j in range(n_upper)
    ]
    constraints += [
        ConstraintSpec.range_bound(j, totals[j] * (1 - VARIATION), totals[j] * (1 + VARIATION))
        for j in range(n_upper, n_upper + n_range)
    ]
    if include:
        interior = nodes[1:-1]
        if not interior:
            raise WalkTooShort(f"walk of {len(walk)} arc(s) has no interior node to include")
        constraints.append(ConstraintSpec.include(interior[int(rng.integers(len(interior)))]))

    logger.debug("feasible instance: walk %d -> %d over %d arcs", nodes[0], nodes[-1], len(walk))
    return Instance(
        walk_graph,
        constraints,
        meta={"seed": seed, "generator": "feasible", "path_size": path_size},
        witness=walk,
    )


def make_unfeasible(base: Instance) -> Instance:
    """Keep the first range constraint r1 and cap a second metric r2 one below its minimum under r1"""
    g = base.graph
    r1 = next((c for c in base.constraints if c.kind == ConstraintKind.RANGE), None)
    if r1 is None:
        raise GenerationError("base instance has no range constraint")
    r2 = next(j for j in range(g.resource_count) if j != r1.resource_index) if g.resource_count > 1 else None
    if r2 is None:
        raise GenerationError("unfeasible construction needs two metrics")

    result = multipulse(g, g.resource(r2), [r1])
    if not result.path:
        raise BaseInfeasible(f"no path satisfies {r1}")
    cap = result.cost - 1
    if cap < 0:
        raise GenerationError(f"minimum of r{r2} under {r1} is {result.cost:g}; nothing to cap")

    meta = dict(base.meta)
    meta["generator"] = "unfeasible"
    return Instance(g, [r1, ConstraintSpec.upper_bound(r2, cap)], meta=meta)


def _separable(inst: Instance) -> bool:
    """Each constraint alone admits a path: r1 by the base witness, r2 by its unconstrained minimum"""
    cap = inst.constraints[1]
    g = inst.graph
    return dijkstra(g, g.resource(cap.resource_index), g.source)[g.target] <= cap.upper


def gen_unfeasible(g: Graph, seed: int, path_size: int = 8) -> Instance:
    """Jointly infeasible instance whose two constraints are each satisfiable"""
    rng = make_rng(seed)
    for attempt in range(UNFEASIBLE_ATTEMPTS):
        walk_seed = int(rng.integers(2**32))
        try:
            base = gen_feasible(g, path_size, walk_seed, n_upper=0, n_range=1, include=False)
            inst = make_unfeasible(base)
        except (WalkTooShort, GenerationError) as exc:
            logger.debug("attempt %d rejected: %s", attempt, exc)
            continue
        if _separable(inst):
            inst.meta.update({"seed": seed, "path_size": path_size})
            return inst
        logger.debug("attempt %d rejected: the cap alone is unsatisfiable", attempt)
    raise GenerationError(f"no separable unfeasible instance after {UNFEASIBLE_ATTEMPTS} walks")


# Files

def _constraint_doc(c: ConstraintSpec) -> Dict[str, Any]:
    include = c.kind == ConstraintKind.INCLUDE
    return {
        "kind": c.kind.value,
        "resource": None if include else c.resource_index,
        "lower": json_number(c.lower) if c.has_lower else None,
        "upper": json_number(c.upper),
        "node": c.node if include else None,
    }


def write_instance(inst: Instance) -> bytes:
    g = inst.graph
    doc = {
        "version": FORMAT_VERSION,
        "nodes": g.nodes,
        "source": g.source,
        "target": g.target,
        "resource_count": g.resource_count,
        "arcs": [
            {
                "tail": a.tail,
                "head": a.head,
                "cost": json_number(a.cost),
                "resources": [json_number(r) for r in a.resources],
            }
            for a in g.arcs
        ],
        "constraints": [_constraint_doc(c) for c in inst.constraints],
        "grouping": inst.grouping,
        "meta": inst.meta,
    }
    return (json.dumps(doc, indent=1) + "\n").encode("utf-8")


def _load(data: Union[bytes, str]) -> Any:
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc.reason}") from exc
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc


def _get(doc: Any, key: str, kind, where: str, optional: bool = False):
    if not isinstance(doc, dict):
        raise ParseError("expected an object", field=where or "$")
    path = f"{where}.{key}" if where else key
    if key not in doc or doc[key] is None:
        if optional:
            return None
        raise ParseError("missing field", field=path)
    value = doc[key]
    # bool is an int subclass; reject it for numeric fields
    if isinstance(value, bool) or not isinstance(value, kind):
        raise ParseError(f"unexpected {type(value).__name__}", field=path)
    return value


def _numbers(doc: Any, key: str, where: str) -> List[float]:
    """A list field whose elements are all JSON numbers"""
    values = _get(doc, key, list, where)
    for j, value in enumerate(values):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ParseError(f"unexpected {type(value).__name__}", field=f"{where}.{key}[{j}]")
    return values


def _parse_constraint(doc: Any, where: str) -> ConstraintSpec:
    kind = _get(doc, "kind", str, where)
    try:
        kind = ConstraintKind(kind)
    except ValueError:
        raise ParseError(f"unknown constraint kind {kind!r}", field=f"{where}.kind") from None
    try:
        if kind == ConstraintKind.INCLUDE:
            return ConstraintSpec.include(_get(doc, "node", int, where))
        resource = _get(doc, "resource", int, where)
        upper = _get(doc, "upper", (int, float), where)
        if kind == ConstraintKind.UPPER:
            return ConstraintSpec.upper_bound(resource, upper)
        return ConstraintSpec.range_bound(resource, _get(doc, "lower", (int, float), where), upper)
    except InvalidConstraint as exc:
        raise ParseError(str(exc), field=where) from exc


def read_instance(data: Union[bytes, str]) -> Instance:
    doc = _load(data)
    version = _get(doc, "version", int, "")
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported version {version}", field="version")

    arcs = []
    for i, arc in enumerate(_get(doc, "arcs", list, "")):
        where = f"arcs[{i}]"
        arcs.append((
            _get(arc, "tail", int, where),
            _get(arc, "head", int, where),
            _get(arc, "cost", (int, float), where),
            _numbers(arc, "resources", where),
        ))
    g = build(
        _get(doc, "nodes", int, ""),
        arcs,
        _get(doc, "source", int, ""),
        _get(doc, "target", int, ""),
        _get(doc, "resource_count", int, ""),
    )
    constraints = [
        _parse_constraint(c, f"constraints[{i}]")
        for i, c in enumerate(_get(doc, "constraints", list, ""))
    ]
    grouping = _get(doc, "grouping", list, "", optional=True) or []
    meta = _get(doc, "meta", dict, "", optional=True) or {}
    try:
        return Instance(g, constraints, grouping, meta)
    except (InvalidConstraint, TypeError) as exc:
        raise ParseError(str(exc), field="constraints") from exc


def write_solution(sol: Solution, timing: bool = True) -> bytes:
    stats = sol.stats.to_dict()
    if not timing:
        stats["wall_ms"] = 0
    doc = {
        "status": sol.status.value,
        "cost": json_number(sol.cost),
        "lower_bound": json_number(sol.lower_bound),
        "path": list(sol.path),
        "resource_totals": [json_number(r) for r in sol.resource_totals],
        "stats": stats,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def _missing_bound(status: Status) -> float:
    """null bound: proven infinite for infeasible runs, unknown otherwise"""
    return math.inf if status == Status.INFEASIBLE else -math.inf


def read_solution(data: Union[bytes, str]) -> Solution:
    doc = _load(data)
    status = _get(doc, "status", str, "")
    try:
        status = Status(status)
    except ValueError:
        raise ParseError(f"unknown status {status!r}", field="status") from None
    cost = _get(doc, "cost", (int, float), "", optional=True)
    bound = _get(doc, "lower_bound", (int, float), "", optional=True)
    path = _get(doc, "path", list, "")
    if not all(isinstance(a, int) and not isinstance(a, bool) for a in path):
        raise ParseError("arc ids must be integers", field="path")
    totals = _get(doc, "resource_totals", list, "", optional=True) or []
    for j, value in enumerate(totals):
        if value is not None and (isinstance(value, bool) or not isinstance(value, (int, float))):
            raise ParseError(f"unexpected {type(value).__name__}", field=f"resource_totals[{j}]")
    stats = SolveStats()
    raw_stats = _get(doc, "stats", dict, "", optional=True) or {}
    for name in stats.to_dict():
        value = raw_stats.get(name, 0)
        if isinstance(value, int) and not isinstance(value, bool):
            setattr(stats, name, value)
    return Solution(
        status,
        tuple(path),
        math.inf if cost is None else float(cost),
        _missing_bound(status) if bound is None else float(bound),
        stats,
        tuple(float(r) if r is not None else math.inf for r in totals),
    )
