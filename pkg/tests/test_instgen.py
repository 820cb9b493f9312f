import json
import math

import pytest

from acgsolver.atomic import ConstraintKind, ConstraintSpec
from acgsolver.branch import Solution, Status
from acgsolver.error_handling import GenerationError, ParseError, WalkTooShort
from acgsolver.graph import build
from acgsolver.instgen import (
    Instance,
    additive_loss,
    gen_feasible,
    gen_unfeasible,
    grid,
    layered,
    make_unfeasible,
    read_instance,
    read_solution,
    read_topology,
    write_instance,
    write_solution,
)
from acgsolver.oracle import enumerate_paths, is_acyclic
from acgsolver.progress import SolveStats

from conftest import SU, UT


def test_grid_31_by_31_counts():
    g = grid(31, 31, seed=1)
    assert g.nodes == 961
    assert g.arc_count == 3720
    assert (g.source, g.target) == (0, 960)


def test_grid_2_by_2():
    g = grid(2, 2, seed=0)
    assert g.nodes == 4 and g.arc_count == 8


def test_grid_weights_in_range_and_seeded():
    g = grid(4, 3, seed=42)
    values = [v for a in g.arcs for v in (a.cost,) + a.resources]
    assert min(values) >= 10 and max(values) <= 100
    assert grid(4, 3, seed=42) == g
    assert grid(4, 3, seed=43) != g


def test_grid_too_small():
    with pytest.raises(GenerationError):
        grid(1, 5, seed=0)


def test_layered_is_acyclic():
    g = layered(3, 2, seed=5)
    assert g.nodes == 8
    assert g.arc_count == 2 + 4 + 4 + 2
    assert is_acyclic(g)


def test_feasible_instance_is_witnessed():
    g = grid(5, 5, seed=3)
    inst = gen_feasible(g, 6, seed=3)
    assert len(inst.constraints) == 7
    kinds = [c.kind for c in inst.constraints]
    assert kinds == [ConstraintKind.UPPER] * 3 + [ConstraintKind.RANGE] * 3 + [ConstraintKind.INCLUDE]
    assert inst.graph.is_elementary_st_path(inst.witness)
    assert all(alg.check(inst.graph, inst.witness) for alg in inst.atomic_algorithms())
    include = inst.constraints[-1].node
    assert include in inst.graph.node_sequence(inst.witness)[1:-1]


def test_range_bounds_vary_by_twenty_percent():
    g = build(2, [(0, 1, 1, (100,)), (1, 0, 1, (100,))], 0, 1, 1)
    inst = gen_feasible(g, 1, seed=0, n_upper=0, n_range=1, include=False)
    (bound,) = inst.constraints
    assert bound.lower == pytest.approx(80)
    assert bound.upper == pytest.approx(120)


def test_single_arc_walk_has_no_interior_node():
    with pytest.raises(WalkTooShort):
        gen_feasible(grid(3, 3, seed=0), 1, seed=0)


def test_generation_is_deterministic():
    g = grid(4, 4, seed=9)
    assert write_instance(gen_feasible(g, 5, seed=9)) == write_instance(gen_feasible(g, 5, seed=9))


def test_make_unfeasible_on_four_nodes(p2_graph):
    base = Instance(p2_graph, [ConstraintSpec.range_bound(0, 6, 12)])
    inst = make_unfeasible(base)
    cap = inst.constraints[1]
    assert (cap.resource_index, cap.upper) == (1, 5)
    assert not enumerate_paths(inst.graph, inst.constraints).feasible


@pytest.mark.parametrize("seed", range(5))
def test_unfeasible_instances_are_separable(seed):
    inst = gen_unfeasible(grid(4, 4, seed=seed), seed)
    g = inst.graph
    assert not enumerate_paths(g, inst.constraints).feasible
    for c in inst.constraints:
        assert enumerate_paths(g, [c]).feasible


def test_instance_round_trip(p2_instance):
    data = write_instance(p2_instance)
    assert read_instance(data) == p2_instance
    assert write_instance(read_instance(data)) == data


def test_round_trip_with_include_and_range():
    inst = gen_feasible(grid(4, 4, seed=2), 5, seed=2)
    assert read_instance(write_instance(inst)) == inst


def test_truncated_file(p2_instance):
    data = write_instance(p2_instance)
    with pytest.raises(ParseError) as err:
        read_instance(data[: len(data) // 2])
    assert err.value.line is not None


def test_unknown_constraint_kind(p2_instance):
    data = write_instance(p2_instance).replace(b'"upper"', b'"sideways"', 1)
    with pytest.raises(ParseError, match="sideways"):
        read_instance(data)


def test_missing_field_names_path(p2_instance):
    data = write_instance(p2_instance).replace(b'"tail"', b'"tale"', 1)
    with pytest.raises(ParseError) as err:
        read_instance(data)
    assert err.value.field == "arcs[0].tail"


@pytest.mark.parametrize("bad", [b'"x"', b"null", b"[1]", b"true"])
def test_non_numeric_resource_names_field(p2_instance, bad):
    data = write_instance(p2_instance)
    doc = json.loads(data)
    doc["arcs"][1]["resources"][0] = json.loads(bad)
    with pytest.raises(ParseError) as err:
        read_instance(json.dumps(doc))
    assert err.value.field == "arcs[1].resources[0]"


def test_solution_round_trip(p2_graph):
    stats = SolveStats(columns=3, nodes_expanded=2, atomic_calls=9, cg_calls=1, wall_ms=17)
    sol = Solution(Status.OPTIMAL, (SU, UT), 4.0, 4.0, stats, (6.0, 6.0))
    back = read_solution(write_solution(sol))
    assert back.status == Status.OPTIMAL
    assert back.path == (SU, UT) and back.cost == 4 and back.lower_bound == 4
    assert back.stats.to_dict() == stats.to_dict()
    assert b'"wall_ms": 0' in write_solution(sol, timing=False)


def test_infeasible_solution_serializes_null_cost():
    sol = Solution(Status.INFEASIBLE, (), math.inf, math.inf, SolveStats())
    data = write_solution(sol)
    assert b'"cost": null' in data
    assert read_solution(data).cost == math.inf


def test_unproven_bound_reads_back_as_unknown():
    sol = Solution(Status.FEASIBLE, (SU, UT), 4.0, -math.inf, SolveStats(), (6.0, 6.0))
    data = write_solution(sol)
    assert b'"lower_bound": null' in data
    assert read_solution(data).lower_bound == -math.inf
    infeasible = Solution(Status.INFEASIBLE, (), math.inf, math.inf, SolveStats())
    assert read_solution(write_solution(infeasible)).lower_bound == math.inf


def test_edge_list_topology():
    g = read_topology("# ring\na b\nb c\nc a\n", seed=1)
    assert g.nodes == 3 and g.arc_count == 6
    assert (g.source, g.target) == (0, 2)


def test_sndlib_topology():
    text = """
NODES (
  Aachen ( 6.04 50.76 )
  Berlin ( 13.48 52.52 )
  Koeln ( 7.00 50.94 )
)
LINKS (
  L1 ( Aachen Berlin ) 0.00 0.00 0.00 0.00 ( 40.00 1.00 )
  L2 ( Berlin Koeln ) 0.00 0.00 0.00 0.00 ( 40.00 1.00 )
)
DEMANDS (
  D1 ( Aachen Koeln ) 1 1.0 UNLIMITED
)
"""
    g = read_topology(text, seed=0, resource_count=2)
    assert g.nodes == 3
    assert g.arc_count == 4
    assert g.arcs[0].tail == 0 and g.arcs[0].head == 1


def test_bad_topology_line():
    with pytest.raises(ParseError):
        read_topology("a\n", seed=0)


GRAPHML = """<?xml version="1.0" encoding="utf-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="edge" attr.name="loss" attr.type="double"/>
  <graph edgedefault="undirected">
    <node id="Paris"/>
    <node id="Lyon"/>
    <node id="Nice"/>
    <edge source="Paris" target="Lyon"><data key="d0">0.1</data></edge>
    <edge source="Lyon" target="Nice"/>
  </graph>
</graphml>
"""


def test_graphml_topology():
    g = read_topology(GRAPHML, seed=3, resource_count=2)
    assert (g.nodes, g.arc_count) == (3, 4)
    assert (g.source, g.target) == (0, 2)
    paris_lyon = [a for a in g.arcs if (a.tail, a.head) in ((0, 1), (1, 0))]
    assert [a.resources[0] for a in paris_lyon] == pytest.approx([additive_loss(0.1)] * 2)
    lyon_nice = [a for a in g.arcs if (a.tail, a.head) in ((1, 2), (2, 1))]
    assert [a.resources[0] for a in lyon_nice] == [0.0, 0.0]


def test_bad_graphml():
    with pytest.raises(ParseError):
        read_topology("<graphml><graph><node id='a'/>", seed=0)


def test_edge_list_loss_column_sets_first_metric():
    g = read_topology("a b 0.5\nb c 0.19\n", seed=1, resource_count=2)
    assert [a.resources[0] for a in g.arcs] == pytest.approx(
        [math.log(2), math.log(2), 2 * additive_loss(0.1), 2 * additive_loss(0.1)])
    # the second metric keeps its seeded weight
    assert all(10 <= a.resources[1] <= 100 for a in g.arcs)


def test_lossless_topology_keeps_seeded_weights():
    g = read_topology("a b\nb c\n", seed=4, resource_count=2)
    assert all(10 <= r <= 100 for a in g.arcs for r in a.resources)


@pytest.mark.parametrize("text", ["a b 1.0\n", "a b -0.2\n", "a b lossy\n"])
def test_bad_loss_probability(text):
    with pytest.raises(ParseError):
        read_topology(text + "b c\n", seed=0)


def test_additive_loss():
    assert additive_loss(0.0) == 0.0
    assert additive_loss(0.5) == pytest.approx(math.log(2))
    # losses of a series of links add up
    assert additive_loss(0.19) == pytest.approx(2 * additive_loss(0.1))
