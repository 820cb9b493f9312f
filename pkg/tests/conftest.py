import pytest

from acgsolver.atomic import AtomicAlgorithm, ConstraintSpec
from acgsolver.config import SolverConfig
from acgsolver.graph import build
from acgsolver.error_handling import WalkTooShort
from acgsolver.instgen import Instance, gen_feasible, grid

# Arc ids of the four-node instance
SU, UT, SV, VT = 0, 1, 2, 3


@pytest.fixture
def p2_graph():
    """s=0, u=1, v=2, t=3; the cheap path s-v-t is too heavy on the second metric"""
    return build(
        4,
        [
            (0, 1, 2, (3, 3)),  # su
            (1, 3, 2, (3, 3)),  # ut
            (0, 2, 1, (6, 6)),  # sv
            (2, 3, 1, (6, 6)),  # vt
        ],
        source=0,
        target=3,
        resource_count=2,
    )


@pytest.fixture
def p2_constraints():
    return [ConstraintSpec.upper_bound(0, 12), ConstraintSpec.upper_bound(1, 9)]


@pytest.fixture
def p2_algs(p2_constraints):
    return [AtomicAlgorithm((c,)) for c in p2_constraints]


@pytest.fixture
def p2_instance(p2_graph, p2_constraints):
    return Instance(p2_graph, p2_constraints, meta={"seed": 0, "generator": "fixture", "path_size": 2})


@pytest.fixture
def single_arc_graph():
    return build(2, [(0, 1, 5, ())], source=0, target=1, resource_count=0)


@pytest.fixture
def fast_config():
    """Single-threaded, generous per-call budgets so small runs never hit a deadline"""
    return SolverConfig(variant="acg1", t_acg_ms=10_000, t_atomic_ms=10_000, global_limit_ms=60_000, workers=1)


def small_instance(seed: int, size: int = 3, path_size: int = 4, include: bool = True) -> Instance:
    """Seeded feasible instance on a size x size grid: 3 upper, 2 range and optionally 1 include"""
    g = grid(size, size, seed)
    return gen_feasible(g, path_size, seed, n_upper=3, n_range=2, include=include)


def feasible_instances(count: int, sizes=(3, 4, 5)):
    """Seeded instances, skipping seeds whose walk is too short for an include constraint"""
    instances = []
    seed = 0
    while len(instances) < count:
        size = sizes[seed % len(sizes)]
        try:
            instances.append(small_instance(seed, size=size, path_size=2 + seed % 5))
        except WalkTooShort:
            pass
        seed += 1
    return instances
