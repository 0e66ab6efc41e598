"""Graph model, file formats, and seeded sampling helpers."""

import io

import numpy as np
import pytest

from entroute.topology import (
    DEFAULT_DISTANCE_KM,
    Demand,
    DemandError,
    Edge,
    MerrInstance,
    NetworkGraph,
    TopologyError,
    edge_key,
    generate_demands,
    load_topology,
    path_edge_keys,
    sample_reduced_network,
    serialize_topology,
    shortest_path,
)

TOPOLOGY_DIR = "src/entroute/data/topologies"


def line_graph(k):
    names = [f"n{i}" for i in range(k)]
    edges = [Edge(names[i], names[i + 1]) for i in range(k - 1)]
    return NetworkGraph(names, edges)


def random_graph(rng, num_nodes, p):
    names = [f"n{i}" for i in range(num_nodes)]
    edges = []
    for i in range(num_nodes):
        for j in range(i + 1, num_nodes):
            if rng.random() < p:
                edges.append(Edge(names[i], names[j]))
    return NetworkGraph(names, edges)


def test_graph_orders_everything_lexicographically():
    g = NetworkGraph(["b", "a", "c"], [Edge("c", "a"), Edge("b", "a")])
    assert g.nodes == ("a", "b", "c")
    assert g.edge_keys() == (("a", "b"), ("a", "c"))
    assert g.neighbors("a") == ("b", "c")
    assert g.num_nodes == 3 and g.num_edges == 2


def test_graph_rejects_self_loop_and_unknown_endpoint():
    with pytest.raises(TopologyError):
        NetworkGraph(["a"], [Edge("a", "a")])
    with pytest.raises(TopologyError):
        NetworkGraph(["a", "b"], [Edge("a", "zz")])
    with pytest.raises(TopologyError):
        NetworkGraph([], [])
    with pytest.raises(TopologyError):
        NetworkGraph(["a", "b"], [Edge("a", "b", distance_km=-1.0)])


def test_duplicate_edges_collapse_to_first():
    g = NetworkGraph(
        ["a", "b"], [Edge("a", "b", 5.0), Edge("b", "a", 9.0)]
    )
    assert g.num_edges == 1
    assert g.distance_km("b", "a") == 5.0


def test_edge_key_is_order_free():
    assert edge_key("x", "a") == ("a", "x") == edge_key("a", "x")
    assert list(path_edge_keys(["a", "b", "c"])) == [("a", "b"), ("b", "c")]


def test_without_edges_keeps_nodes():
    g = line_graph(4)
    g2 = g.without_edges([("n1", "n2")])
    assert g2.num_edges == 2
    assert g2.nodes == g.nodes
    assert not g2.has_edge("n1", "n2")


def test_shortest_path_line_and_disconnected():
    g = line_graph(5)
    path, hops = shortest_path(g, "n0", "n4")
    assert path == ["n0", "n1", "n2", "n3", "n4"] and hops == 4
    assert shortest_path(g, "n0", "n0") == (["n0"], 0)

    g2 = NetworkGraph(["a", "b", "c"], [Edge("a", "b")])
    assert shortest_path(g2, "a", "c") is None
    with pytest.raises(TopologyError):
        shortest_path(g2, "a", "nope")


def test_shortest_path_respects_allowed_edges():
    # square a-b-d-c-a: banning one side forces the long way round
    g = NetworkGraph(
        ["a", "b", "c", "d"],
        [Edge("a", "b"), Edge("b", "d"), Edge("a", "c"), Edge("c", "d")],
    )
    full = shortest_path(g, "a", "d")
    assert full[1] == 2
    allowed = [("a", "c"), ("c", "d")]
    restricted = shortest_path(g, "a", "d", allowed_edges=allowed)
    assert restricted == (["a", "c", "d"], 2)


def test_json_round_trip_and_default_distance():
    g = NetworkGraph(["a", "b", "c"], [Edge("a", "b", 7.5), Edge("b", "c")])
    payload = serialize_topology(g)
    back = load_topology(io.StringIO(__import__("json").dumps(payload)))
    assert back == g
    assert back.distance_km("b", "c") == DEFAULT_DISTANCE_KM


def test_graphml_subset_parses_nodes_edges_and_distance():
    doc = """<?xml version="1.0"?>
    <graphml xmlns="http://graphml.graphdrawing.org/ns/graphml">
      <key id="d0" for="edge" attr.name="distance_km" attr.type="double"/>
      <graph edgedefault="undirected">
        <node id="x"/><node id="y"/><node id="z"/>
        <edge source="x" target="y"><data key="d0">33.0</data></edge>
        <edge source="y" target="z"/>
      </graph>
    </graphml>"""
    g = load_topology(doc, "graphml-subset")
    assert g.nodes == ("x", "y", "z")
    assert g.distance_km("x", "y") == 33.0
    assert g.distance_km("y", "z") == DEFAULT_DISTANCE_KM


def test_load_topology_rejects_junk():
    with pytest.raises(TopologyError):
        load_topology("{not json", "json")
    with pytest.raises(TopologyError):
        load_topology("<graphml><broken", "graphml")
    with pytest.raises(TopologyError):
        load_topology("{}", "not-a-format")


def test_bundled_topologies_load():
    surfnet = load_topology(f"{TOPOLOGY_DIR}/surfnet_like.graphml")
    assert (surfnet.num_nodes, surfnet.num_edges) == (50, 68)
    carrier = load_topology(f"{TOPOLOGY_DIR}/uscarrier_like.graphml")
    assert (carrier.num_nodes, carrier.num_edges) == (158, 189)


def test_sample_reduced_network_extremes_and_determinism():
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = random_graph(rng, 8, 0.5)
        seed = int(rng.integers(0, 2**31))
        assert sample_reduced_network(g, 1.0, seed) == g
        assert sample_reduced_network(g, 0.0, seed).num_edges == 0
        a = sample_reduced_network(g, 0.6, seed)
        b = sample_reduced_network(g, 0.6, seed)
        assert a == b
        # kept edges are always a subset of the originals
        assert set(a.edge_keys()) <= set(g.edge_keys())
        assert a.nodes == g.nodes


def test_sample_reduced_network_rejects_bad_probability():
    g = line_graph(3)
    with pytest.raises(ValueError):
        sample_reduced_network(g, 1.5, 0)


def test_generate_demands_deterministic_and_within_hop_bound():
    rng = np.random.default_rng(123)
    for _ in range(25):
        g = random_graph(rng, 9, 0.4)
        seed = int(rng.integers(0, 2**31))
        try:
            demands = generate_demands(g, 4, 3, seed)
        except DemandError:
            continue  # too few eligible pairs in this draw
        again = generate_demands(g, 4, 3, seed)
        assert demands == again
        assert [d.index for d in demands] == [0, 1, 2, 3]
        pairs = {(d.source, d.dest) for d in demands}
        assert len(pairs) == 4
        for d in demands:
            assert d.source < d.dest
            hit = shortest_path(g, d.source, d.dest)
            assert hit is not None and 1 <= hit[1] <= 3


def test_generate_demands_errors_name_the_limit():
    g = line_graph(3)  # eligible pairs at sp<=1: n0-n1, n1-n2
    with pytest.raises(DemandError, match="2"):
        generate_demands(g, 5, 1, seed=0)
    with pytest.raises(DemandError):
        generate_demands(g, -1, 1, seed=0)
    with pytest.raises(DemandError):
        generate_demands(g, 1, 0, seed=0)


def test_demand_and_instance_validation():
    with pytest.raises(DemandError):
        Demand(0, "a", "a")
    with pytest.raises(DemandError):
        Demand(-1, "a", "b")
    g = line_graph(3)
    with pytest.raises(DemandError):
        MerrInstance(g, (Demand(1, "n0", "n1"),), 3)  # index != position
    with pytest.raises(DemandError):
        MerrInstance(g, (Demand(0, "n0", "zz"),), 3)
    with pytest.raises(DemandError):
        MerrInstance(g, (Demand(0, "n0", "n1"),), 0)
