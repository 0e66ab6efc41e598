"""Network model: undirected graphs, demands, and deterministic helpers.

Nodes are string labels.  Every iteration order in this module (node
lists, neighbor lists, edge lists) is lexicographic, so any seeded
procedure built on top of it is reproducible across runs and platforms.
Randomness comes exclusively from numpy's PCG64 generator seeded by the
caller.
"""

from __future__ import annotations

import json
import logging
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

logger = logging.getLogger(__name__)

NodeId = str
EdgeKey = tuple[str, str]

DEFAULT_DISTANCE_KM = 20.0


class TopologyError(ValueError):
    """Raised for malformed graphs or unparseable topology files."""


class DemandError(ValueError):
    """Raised for invalid demands or unsatisfiable demand sampling."""


def edge_key(u: NodeId, v: NodeId) -> EdgeKey:
    """Canonical undirected key: endpoints in lexicographic order."""
    return (u, v) if u <= v else (v, u)


@dataclass(frozen=True)
class Edge:
    """Undirected link with a physical length in kilometres."""

    u: NodeId
    v: NodeId
    distance_km: float = DEFAULT_DISTANCE_KM

    def key(self) -> EdgeKey:
        return edge_key(self.u, self.v)


class NetworkGraph:
    """Immutable undirected simple graph with per-edge distances.

    Construction validates labels, rejects self-loops, and collapses
    duplicate edges (keeping the first occurrence and logging a
    warning).  Isolated nodes are allowed.
    """

    __slots__ = ("_nodes", "_dist", "_adj", "_edges")

    def __init__(self, nodes: Iterable[NodeId], edges: Iterable[Edge]) -> None:
        node_set: set[NodeId] = set()
        for n in nodes:
            if not isinstance(n, str) or not n:
                raise TopologyError(f"node labels must be non-empty strings, got {n!r}")
            node_set.add(n)
        if not node_set:
            raise TopologyError("graph must have at least one node")

        dist: dict[EdgeKey, float] = {}
        for pos, e in enumerate(edges):
            if e.u == e.v:
                raise TopologyError(f"self-loop at node {e.u!r} (edge #{pos})")
            for endpoint in (e.u, e.v):
                if endpoint not in node_set:
                    raise TopologyError(
                        f"edge #{pos} references unknown node {endpoint!r}"
                    )
            if not (e.distance_km > 0.0) or not np.isfinite(e.distance_km):
                raise TopologyError(
                    f"edge {e.u!r}-{e.v!r} has invalid distance {e.distance_km!r}"
                )
            k = e.key()
            if k in dist:
                logger.warning(
                    "duplicate edge %s-%s collapsed (keeping first distance %g km)",
                    k[0], k[1], dist[k],
                )
                continue
            dist[k] = float(e.distance_km)

        self._nodes: tuple[NodeId, ...] = tuple(sorted(node_set))
        self._dist: dict[EdgeKey, float] = {k: dist[k] for k in sorted(dist)}
        adj: dict[NodeId, list[NodeId]] = {n: [] for n in self._nodes}
        for (a, b) in self._dist:
            adj[a].append(b)
            adj[b].append(a)
        self._adj: dict[NodeId, tuple[NodeId, ...]] = {
            n: tuple(sorted(nbrs)) for n, nbrs in adj.items()
        }
        self._edges: tuple[Edge, ...] = tuple(
            Edge(a, b, d) for (a, b), d in self._dist.items()
        )

    @property
    def nodes(self) -> tuple[NodeId, ...]:
        return self._nodes

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def num_nodes(self) -> int:
        return len(self._nodes)

    @property
    def num_edges(self) -> int:
        return len(self._dist)

    def has_node(self, n: NodeId) -> bool:
        return n in self._adj

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return edge_key(u, v) in self._dist

    def neighbors(self, n: NodeId) -> tuple[NodeId, ...]:
        try:
            return self._adj[n]
        except KeyError:
            raise TopologyError(f"unknown node {n!r}") from None

    def distance_km(self, u: NodeId, v: NodeId) -> float:
        try:
            return self._dist[edge_key(u, v)]
        except KeyError:
            raise TopologyError(f"no edge {u!r}-{v!r}") from None

    def edge_keys(self) -> tuple[EdgeKey, ...]:
        return tuple(self._dist)

    def without_edges(self, removed: Iterable[EdgeKey]) -> "NetworkGraph":
        """Copy of the graph minus the given edges (nodes unchanged)."""
        gone = {edge_key(*k) for k in removed}
        kept = [e for e in self._edges if e.key() not in gone]
        return NetworkGraph(self._nodes, kept)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkGraph):
            return NotImplemented
        return self._nodes == other._nodes and self._dist == other._dist

    def __hash__(self) -> int:
        return hash((self._nodes, tuple(self._dist.items())))

    def __repr__(self) -> str:
        return f"NetworkGraph(num_nodes={self.num_nodes}, num_edges={self.num_edges})"


@dataclass(frozen=True)
class Demand:
    """A request to connect source to dest by one end-to-end path.

    ``index`` is the demand's 0-based position within its instance;
    algorithms use it for deterministic tie-breaking.
    """

    index: int
    source: NodeId
    dest: NodeId

    def __post_init__(self) -> None:
        if self.index < 0:
            raise DemandError(f"demand index must be >= 0, got {self.index}")
        if self.source == self.dest:
            raise DemandError(f"demand endpoints must differ, got {self.source!r}")


@dataclass(frozen=True)
class MerrInstance:
    """A routing problem: graph, demand list, and per-path hop budget."""

    graph: NetworkGraph
    demands: tuple[Demand, ...]
    l_max: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "demands", tuple(self.demands))
        if self.l_max < 1:
            raise DemandError(f"l_max must be >= 1, got {self.l_max}")
        for i, d in enumerate(self.demands):
            if d.index != i:
                raise DemandError(
                    f"demand at position {i} carries index {d.index}"
                )
            if not self.graph.has_node(d.source) or not self.graph.has_node(d.dest):
                raise DemandError(f"demand #{i} references nodes outside the graph")


# ---------------------------------------------------------------------------
# serialization


def _parse_edge_list_json(payload: Mapping) -> NetworkGraph:
    try:
        raw_nodes = payload["nodes"]
        raw_edges = payload["edges"]
    except (KeyError, TypeError) as exc:
        raise TopologyError(f"edge-list JSON needs 'nodes' and 'edges': {exc}") from exc
    edges = []
    for pos, item in enumerate(raw_edges):
        try:
            u, v = item["u"], item["v"]
        except (KeyError, TypeError) as exc:
            raise TopologyError(f"edge #{pos} needs 'u' and 'v': {exc}") from exc
        d = item.get("distance_km", DEFAULT_DISTANCE_KM)
        edges.append(Edge(u, v, float(d)))
    return NetworkGraph(raw_nodes, edges)


_GRAPHML_NS = "{http://graphml.graphdrawing.org/ns/graphml}"


def _parse_graphml(text: str) -> NetworkGraph:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise TopologyError(f"invalid GraphML: {exc}") from exc

    def tag(el: ET.Element) -> str:
        return el.tag.split("}")[-1]

    # keys whose declared attribute name marks the link length
    dist_keys = set()
    for key_el in root.iter():
        if tag(key_el) == "key":
            name = (key_el.get("attr.name") or key_el.get("attr_name") or "").lower()
            if name in ("distance_km", "distance", "length", "linklength"):
                dist_keys.add(key_el.get("id"))

    graph_el = None
    for el in root.iter():
        if tag(el) == "graph":
            graph_el = el
            break
    if graph_el is None:
        raise TopologyError("GraphML file has no <graph> element")

    nodes: list[NodeId] = []
    edges: list[Edge] = []
    for el in graph_el:
        t = tag(el)
        if t == "node":
            nid = el.get("id")
            if nid is None:
                raise TopologyError("GraphML node without id")
            nodes.append(nid)
        elif t == "edge":
            u, v = el.get("source"), el.get("target")
            if u is None or v is None:
                raise TopologyError("GraphML edge without source/target")
            d = DEFAULT_DISTANCE_KM
            for data_el in el:
                if tag(data_el) == "data" and data_el.get("key") in dist_keys:
                    try:
                        d = float(data_el.text or "")
                    except ValueError as exc:
                        raise TopologyError(
                            f"edge {u!r}-{v!r}: bad distance {data_el.text!r}"
                        ) from exc
            edges.append(Edge(u, v, d))
    return NetworkGraph(nodes, edges)


_FORMAT_ALIASES = {
    "json": "json",
    "edge-list-json": "json",
    "graphml": "graphml",
    "graphml-subset": "graphml",
}


def load_topology(source: str | bytes | IO, format: str | None = None) -> NetworkGraph:
    """Load a graph from edge-list JSON or a GraphML subset.

    ``source`` may be a filesystem path, raw document text/bytes, or an
    open file object.  ``format`` is ``"edge-list-json"`` or
    ``"graphml-subset"`` (short forms ``"json"``/``"graphml"`` also
    work); when omitted it is inferred from a path suffix or from the
    document itself (leading ``<`` means XML).
    """
    text: str
    path_hint = ""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        path_hint = getattr(source, "name", "") or ""
    elif isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str) and "\n" not in source and (
        source.endswith(".json") or source.endswith(".graphml") or source.endswith(".xml")
    ):
        path_hint = source
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = str(source)

    if format is None:
        if path_hint.endswith(".json"):
            kind = "json"
        elif path_hint.endswith((".graphml", ".xml")):
            kind = "graphml"
        else:
            kind = "graphml" if text.lstrip().startswith("<") else "json"
    else:
        kind = _FORMAT_ALIASES.get(format, "")

    if kind == "json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise TopologyError(f"invalid JSON: {exc}") from exc
        return _parse_edge_list_json(payload)
    if kind == "graphml":
        return _parse_graphml(text)
    raise TopologyError(f"unknown topology format {format!r}")


def serialize_topology(graph: NetworkGraph) -> dict:
    """Edge-list JSON payload; ``load_topology`` round-trips it exactly."""
    return {
        "nodes": list(graph.nodes),
        "edges": [
            {"u": e.u, "v": e.v, "distance_km": e.distance_km} for e in graph.edges
        ],
    }


# ---------------------------------------------------------------------------
# stochastic preprocessing


def sample_reduced_network(
    graph: NetworkGraph, p_entangle: float, seed: int
) -> NetworkGraph:
    """Keep each edge independently with probability ``p_entangle``.

    Models the entanglement-generation round: an edge survives into the
    routing graph only if its link-level pair was created.  Edges are
    visited in lexicographic order with one uniform draw each, so a
    given seed always yields the same subgraph.
    """
    if not 0.0 <= p_entangle <= 1.0:
        raise ValueError(f"p_entangle must be in [0, 1], got {p_entangle}")
    rng = np.random.default_rng(seed)
    kept = [e for e in graph.edges if rng.random() < p_entangle]
    return NetworkGraph(graph.nodes, kept)


def _hops_within(graph: NetworkGraph, start: NodeId, limit: int) -> dict[NodeId, int]:
    """BFS hop counts from ``start``, truncated at ``limit`` hops."""
    dist = {start: 0}
    frontier = deque([start])
    while frontier:
        u = frontier.popleft()
        if dist[u] == limit:
            continue
        for v in graph.neighbors(u):
            if v not in dist:
                dist[v] = dist[u] + 1
                frontier.append(v)
    return dist


def generate_demands(
    graph: NetworkGraph,
    n: int,
    max_sp_hops: int,
    seed: int,
) -> tuple[Demand, ...]:
    """Sample ``n`` distinct demands uniformly without replacement.

    Eligible pairs are unordered node pairs whose shortest-path hop
    count lies in [1, max_sp_hops]; the lexicographically smaller node
    becomes the source.  Raises DemandError when the graph has fewer
    eligible pairs than requested, naming the achievable maximum.
    """
    if n < 0:
        raise DemandError(f"demand count must be >= 0, got {n}")
    if max_sp_hops < 1:
        raise DemandError(f"max_sp_hops must be >= 1, got {max_sp_hops}")
    eligible: list[tuple[NodeId, NodeId]] = []
    for u in graph.nodes:
        reach = _hops_within(graph, u, max_sp_hops)
        for v, h in reach.items():
            if u < v and h >= 1:
                eligible.append((u, v))
    eligible.sort()
    if n > len(eligible):
        raise DemandError(
            f"requested {n} demands but only {len(eligible)} node pairs "
            f"lie within {max_sp_hops} hops"
        )
    rng = np.random.default_rng(seed)
    # partial Fisher-Yates: draw the i-th demand from the unchosen tail
    pool = list(eligible)
    chosen: list[Demand] = []
    for i in range(n):
        j = i + int(rng.integers(0, len(pool) - i))
        pool[i], pool[j] = pool[j], pool[i]
        chosen.append(Demand(i, pool[i][0], pool[i][1]))
    return tuple(chosen)


# ---------------------------------------------------------------------------
# shortest paths


def shortest_path(
    graph: NetworkGraph,
    source: NodeId,
    dest: NodeId,
    allowed_edges: Iterable[EdgeKey] | None = None,
) -> tuple[list[NodeId], int] | None:
    """Minimum-hop path as ``(node list, hops)``, or None if disconnected.

    With ``allowed_edges`` the search is restricted to that edge subset.
    Ties are broken deterministically: the path is reconstructed from
    dest backwards, always stepping to the lexicographically smallest
    predecessor on a shortest path.
    """
    for n in (source, dest):
        if not graph.has_node(n):
            raise TopologyError(f"unknown node {n!r}")
    if source == dest:
        return [source], 0
    allowed = None if allowed_edges is None else {edge_key(*k) for k in allowed_edges}

    def usable(a: NodeId, b: NodeId) -> bool:
        return allowed is None or edge_key(a, b) in allowed

    dist: dict[NodeId, int] = {source: 0}
    frontier = deque([source])
    while frontier:
        u = frontier.popleft()
        if u == dest:
            break
        for v in graph.neighbors(u):
            if v not in dist and usable(u, v):
                dist[v] = dist[u] + 1
                frontier.append(v)
    if dest not in dist:
        return None

    path = [dest]
    cur = dest
    while cur != source:
        # smallest predecessor exactly one hop closer to the source
        prev = min(
            v for v in graph.neighbors(cur)
            if dist.get(v, -1) == dist[cur] - 1 and usable(v, cur)
        )
        path.append(prev)
        cur = prev
    path.reverse()
    return path, len(path) - 1


def path_edge_keys(path: Sequence[NodeId]) -> Iterator[EdgeKey]:
    """Canonical edge keys along a node path."""
    for a, b in zip(path, path[1:]):
        yield edge_key(a, b)
