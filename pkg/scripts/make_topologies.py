"""Generate the bundled synthetic topologies.

The real reference networks are not redistributable in this repo, so we
ship deterministic synthetic stand-ins with the same node/edge counts
and a similar sparse carrier-like structure: random points, a Euclidean
minimum spanning tree for connectivity, then the shortest non-tree
links that close rings of at least four hops until the edge budget is
spent.  Rerunning this script reproduces the files byte for byte.
"""

from __future__ import annotations

import pathlib
from xml.sax.saxutils import escape

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import squareform, pdist

HERE = pathlib.Path(__file__).resolve().parent
OUT = HERE.parent / "src" / "entroute" / "data" / "topologies"

SPECS = [
    # name, nodes, edges, coordinate box (km), seed
    ("surfnet_like", 50, 68, 300.0, 20240501),
    ("uscarrier_like", 158, 189, 4200.0, 20240502),
]


def hop_distance(adj: dict[int, set[int]], a: int, b: int) -> int:
    seen = {a: 0}
    frontier = [a]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in seen:
                    seen[v] = seen[u] + 1
                    if v == b:
                        return seen[v]
                    nxt.append(v)
        frontier = nxt
    return 1 << 30


def build(n_nodes: int, n_edges: int, box_km: float, seed: int):
    rng = np.random.default_rng(seed)
    pts = rng.random((n_nodes, 2)) * box_km
    dist = squareform(pdist(pts))
    mst = minimum_spanning_tree(dist).tocoo()
    edges = set()
    adj: dict[int, set[int]] = {i: set() for i in range(n_nodes)}
    for a, b in zip(mst.row, mst.col):
        a, b = int(min(a, b)), int(max(a, b))
        edges.add((a, b))
        adj[a].add(b)
        adj[b].add(a)

    candidates = sorted(
        ((dist[a, b], a, b) for a in range(n_nodes) for b in range(a + 1, n_nodes)
         if (a, b) not in edges),
        key=lambda t: (t[0], t[1], t[2]),
    )
    # first pass: only links that close a ring of length >= 4
    for min_hops in (3, 2):
        for d, a, b in candidates:
            if len(edges) >= n_edges:
                break
            if (a, b) in edges:
                continue
            if hop_distance(adj, a, b) >= min_hops:
                edges.add((a, b))
                adj[a].add(b)
                adj[b].add(a)
    assert len(edges) == n_edges, (len(edges), n_edges)
    return pts, dist, sorted(edges)


def write_graphml(path: pathlib.Path, n_nodes: int, edges, dist) -> None:
    width = len(str(n_nodes - 1))
    name = lambda i: f"n{i:0{width}d}"
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/ns/graphml">',
        '  <key id="d0" for="edge" attr.name="distance_km" attr.type="double"/>',
        '  <graph edgedefault="undirected">',
    ]
    for i in range(n_nodes):
        lines.append(f'    <node id="{escape(name(i))}"/>')
    for a, b in edges:
        d = dist[a, b]
        lines.append(
            f'    <edge source="{name(a)}" target="{name(b)}">'
            f'<data key="d0">{d:.3f}</data></edge>'
        )
    lines += ["  </graph>", "</graphml>", ""]
    path.write_text("\n".join(lines), encoding="utf-8")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for name, n_nodes, n_edges, box, seed in SPECS:
        pts, dist, edges = build(n_nodes, n_edges, box, seed)
        out = OUT / f"{name}.graphml"
        write_graphml(out, n_nodes, edges, dist)
        print(f"{out.name}: {n_nodes} nodes, {len(edges)} edges")


if __name__ == "__main__":
    main()
