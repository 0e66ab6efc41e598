"""Flow program assembly and the integral-vector decoder."""

import numpy as np
import pytest

from entroute.formulation import (
    DecodeError,
    build_merr_model,
    decode_paths,
    relax,
    vector_from_paths,
    walk_arcs,
)
from entroute.lp import SENSE_EQ, SENSE_LE, LpStatus, solve_lp
from entroute.outcome import DemandStatus
from entroute.topology import Demand, Edge, MerrInstance, NetworkGraph


def golden_instance():
    nodes = ["d1", "d2", "s1", "s2", "u", "v"]
    edges = [
        Edge("s1", "d2"), Edge("d2", "v"), Edge("v", "d1"),
        Edge("d2", "u"), Edge("u", "s2"), Edge("u", "d1"),
    ]
    demands = (Demand(0, "s1", "d1"), Demand(1, "s2", "d2"))
    return MerrInstance(NetworkGraph(nodes, edges), demands, 8)


def test_model_shape_and_row_blocks():
    model = build_merr_model(golden_instance())
    lp = model.lp
    # 6 edges * 2 directions * 2 demands columns
    assert lp.num_vars == 24
    assert model.capacity_rows == slice(0, 6)
    # 2 demands * (6 nodes - endpoints) conservation rows
    assert model.conservation_rows == slice(6, 14)
    assert model.length_rows == slice(14, 16)
    assert model.source_rows == slice(16, 18)
    assert lp.num_rows == 18
    senses = lp.senses
    assert np.all(senses[model.capacity_rows] == SENSE_LE)
    assert np.all(senses[model.conservation_rows] == SENSE_EQ)
    assert np.all(senses[model.length_rows] == SENSE_LE)
    assert np.all(senses[model.source_rows] == SENSE_LE)
    assert np.all(lp.rhs[model.length_rows] == 8.0)


def test_objective_counts_source_out_arcs_only():
    model = build_merr_model(golden_instance())
    vi = model.vars
    expected = np.zeros(model.lp.num_vars)
    for d in model.instance.demands:
        for pos in vi.arcs_out(d.source):
            expected[d.index * vi.num_arcs + pos] = 1.0
    assert np.array_equal(model.lp.objective, expected)


def test_source_inflow_is_pinned_to_zero_even_after_relaxing():
    model = build_merr_model(golden_instance())
    vi = model.vars
    rel = relax(model)
    assert np.all(rel.lower == 0.0)
    for d in model.instance.demands:
        for pos in vi.arcs_in(d.source):
            j = d.index * vi.num_arcs + pos
            assert model.lp.upper[j] == 0.0
            assert rel.upper[j] == 0.0
    # every unpinned column is free in [0, 1]
    assert set(np.unique(rel.upper)) <= {0.0, 1.0}


def test_vector_round_trips_through_decode():
    model = build_merr_model(golden_instance())
    paths = {0: ("s1", "d2", "v", "d1"), 1: ("s2", "u", "d2")}
    x = vector_from_paths(model, paths)
    out = decode_paths(model, x)
    assert out.stats.met_count == 2
    assert out.stats.cycles_stripped == 0
    got = {d.demand.index: d.path for d in out.decisions}
    assert got == paths


def test_vector_from_paths_checks_endpoints():
    model = build_merr_model(golden_instance())
    with pytest.raises(ValueError):
        vector_from_paths(model, {0: ("s1", "d2")})  # ends at the wrong node
    with pytest.raises(KeyError):
        vector_from_paths(model, {0: ("s1", "u", "d1")})  # no edge s1-u


def test_decode_strips_disjoint_cycle():
    # an s-t link plus a free-floating triangle a-b-c
    nodes = ["a", "b", "c", "s", "t"]
    edges = [Edge("s", "t"), Edge("a", "b"), Edge("b", "c"), Edge("c", "a")]
    inst = MerrInstance(
        NetworkGraph(nodes, edges), (Demand(0, "s", "t"),), 4
    )
    model = build_merr_model(inst)
    x = vector_from_paths(model, {0: ("s", "t")})
    vi = model.vars
    # stack a closed loop a->b->c->a onto the same demand block
    for u, v in [("a", "b"), ("b", "c"), ("c", "a")]:
        x[vi.col(0, u, v)] = 1.0
    out = decode_paths(model, x)
    assert out.stats.cycles_stripped == 1
    assert out.stats.met_count == 1
    assert out.decisions[0].path == ("s", "t")


def test_decode_rejects_fractional_and_infeasible_vectors():
    model = build_merr_model(golden_instance())
    x = np.zeros(model.lp.num_vars)
    x[0] = 0.5
    with pytest.raises(DecodeError):
        decode_paths(model, x)
    # all-ones violates capacity rows and the pinned source-in bounds
    with pytest.raises(DecodeError):
        decode_paths(model, np.ones(model.lp.num_vars))
    with pytest.raises(DecodeError):
        decode_paths(model, np.zeros(5))
    # two paths colliding on edge d1-v break a capacity row
    clash = vector_from_paths(model, {0: ("s1", "d2", "v", "d1")})
    clash += vector_from_paths(model, {1: ("s2", "u", "d1", "v", "d2")})
    with pytest.raises(DecodeError):
        decode_paths(model, clash)


def test_decode_enforces_the_hop_budget():
    # line s-a-b-t with l_max 2: the only path needs 3 hops
    nodes = ["a", "b", "s", "t"]
    edges = [Edge("s", "a"), Edge("a", "b"), Edge("b", "t")]
    inst = MerrInstance(
        NetworkGraph(nodes, edges), (Demand(0, "s", "t"),), 2
    )
    model = build_merr_model(inst)
    x = vector_from_paths(model, {0: ("s", "a", "b", "t")})
    with pytest.raises(DecodeError):
        decode_paths(model, x)


def test_walk_arcs_handles_paths_loops_and_errors():
    path, cycles = walk_arcs([("s", "a"), ("a", "t")], "s", "t")
    assert path == ("s", "a", "t") and cycles == 0
    path, cycles = walk_arcs(
        [("s", "a"), ("a", "b"), ("b", "a"), ("a", "t")], "s", "t"
    )
    assert path == ("s", "a", "t") and cycles == 1
    path, cycles = walk_arcs([("p", "q"), ("q", "p")], "s", "t")
    assert path is None and cycles == 1
    with pytest.raises(DecodeError):
        walk_arcs([("s", "a")], "s", "t")  # stuck before reaching t
    with pytest.raises(DecodeError):
        walk_arcs([("s", "a"), ("s", "b")], "s", "t")  # double outflow
    with pytest.raises(DecodeError):
        walk_arcs([("p", "q")], "s", "t")  # leftovers are not loops


def test_relaxation_solves_and_bounds_the_golden_instance():
    model = build_merr_model(golden_instance())
    sol = solve_lp(relax(model))
    assert sol.status == LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(2.0, abs=1e-9)
