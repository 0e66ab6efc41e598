"""Flow formulation of the routing problem and path decoding.

Each demand gets one binary flow variable per directed arc (two arcs
per undirected edge).  Row blocks, in order:

* capacity: both directions of an edge, summed over all demands, <= 1
* conservation: flow in == flow out at every non-endpoint node
* length: total arcs used by a demand <= l_max
* source: at most one unit leaves a demand's source

Arcs entering a demand's source are forbidden through variable upper
bounds of zero rather than extra rows.  ``decode_paths`` turns a
feasible integral vector back into node paths, stripping any closed
loops that ride along with the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from entroute.lp import SENSE_EQ, SENSE_LE, TOL_FEAS, TOL_INT, LinearProgram
from entroute.outcome import (
    DemandDecision,
    DemandStatus,
    RoutingOutcome,
    RoutingStats,
)
from entroute.topology import EdgeKey, MerrInstance, NodeId


class DecodeError(ValueError):
    """The vector handed to the decoder is not a feasible integral flow."""


class VarIndex:
    """Column layout: demand-major, then directed arc.

    Arcs come in pairs per sorted undirected edge: position ``2k`` is
    the low-to-high direction of edge ``k`` and ``2k + 1`` the reverse.
    """

    __slots__ = ("num_demands", "edges", "arcs", "_arc_pos", "_out", "_in")

    def __init__(self, instance: MerrInstance) -> None:
        self.num_demands = len(instance.demands)
        self.edges: tuple[EdgeKey, ...] = instance.graph.edge_keys()
        arcs: list[tuple[NodeId, NodeId]] = []
        for (a, b) in self.edges:
            arcs.append((a, b))
            arcs.append((b, a))
        self.arcs: tuple[tuple[NodeId, NodeId], ...] = tuple(arcs)
        self._arc_pos = {arc: pos for pos, arc in enumerate(self.arcs)}
        out: dict[NodeId, list[int]] = {n: [] for n in instance.graph.nodes}
        into: dict[NodeId, list[int]] = {n: [] for n in instance.graph.nodes}
        for pos, (tail, head) in enumerate(self.arcs):
            out[tail].append(pos)
            into[head].append(pos)
        self._out = {n: tuple(v) for n, v in out.items()}
        self._in = {n: tuple(v) for n, v in into.items()}

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    @property
    def num_cols(self) -> int:
        return self.num_demands * self.num_arcs

    def col(self, demand_idx: int, tail: NodeId, head: NodeId) -> int:
        try:
            pos = self._arc_pos[(tail, head)]
        except KeyError:
            raise KeyError(f"no arc {tail!r}->{head!r}") from None
        if not 0 <= demand_idx < self.num_demands:
            raise IndexError(f"demand index {demand_idx} out of range")
        return demand_idx * self.num_arcs + pos

    def arcs_out(self, node: NodeId) -> tuple[int, ...]:
        return self._out[node]

    def arcs_in(self, node: NodeId) -> tuple[int, ...]:
        return self._in[node]

    def demand_slice(self, demand_idx: int) -> slice:
        base = demand_idx * self.num_arcs
        return slice(base, base + self.num_arcs)

    def demand_arc(self, col: int) -> tuple[int, tuple[NodeId, NodeId]]:
        """Inverse of ``col``: which demand and directed arc a column is."""
        if not 0 <= col < self.num_cols:
            raise IndexError(f"column {col} out of range")
        return col // self.num_arcs, self.arcs[col % self.num_arcs]


@dataclass
class MerrModel:
    """Binary program for an instance plus the layout needed to read it."""

    instance: MerrInstance
    vars: VarIndex
    lp: LinearProgram
    capacity_rows: slice
    conservation_rows: slice
    length_rows: slice
    source_rows: slice

    @property
    def integer_vars(self) -> range:
        return range(self.lp.num_vars)


def build_merr_model(instance: MerrInstance) -> MerrModel:
    """Assemble the binary flow program for the given instance."""
    vi = VarIndex(instance)
    g = instance.graph
    demands = instance.demands
    num_e = len(vi.edges)
    num_d = len(demands)
    num_a = vi.num_arcs
    num_v = g.num_nodes

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    senses: list[int] = []
    rhs: list[float] = []

    def put(r: int, c: int, v: float) -> None:
        rows.append(r)
        cols.append(c)
        vals.append(v)

    r = 0
    for k in range(num_e):
        for i in range(num_d):
            base = i * num_a
            put(r, base + 2 * k, 1.0)
            put(r, base + 2 * k + 1, 1.0)
        senses.append(SENSE_LE)
        rhs.append(1.0)
        r += 1
    capacity_rows = slice(0, r)

    for i, dem in enumerate(demands):
        base = i * num_a
        for node in g.nodes:
            if node in (dem.source, dem.dest):
                continue
            for pos in vi.arcs_out(node):
                put(r, base + pos, 1.0)
            for pos in vi.arcs_in(node):
                put(r, base + pos, -1.0)
            senses.append(SENSE_EQ)
            rhs.append(0.0)
            r += 1
    conservation_rows = slice(capacity_rows.stop, r)

    for i in range(num_d):
        base = i * num_a
        for pos in range(num_a):
            put(r, base + pos, 1.0)
        senses.append(SENSE_LE)
        rhs.append(float(instance.l_max))
        r += 1
    length_rows = slice(conservation_rows.stop, r)

    for i, dem in enumerate(demands):
        base = i * num_a
        for pos in vi.arcs_out(dem.source):
            put(r, base + pos, 1.0)
        senses.append(SENSE_LE)
        rhs.append(1.0)
        r += 1
    source_rows = slice(length_rows.stop, r)

    assert r == num_e + num_d * (num_v - 2) + 2 * num_d

    a_matrix = sp.coo_matrix(
        (vals, (rows, cols)), shape=(r, vi.num_cols)
    ).tocsr()

    objective = np.zeros(vi.num_cols)
    lower = np.zeros(vi.num_cols)
    upper = np.ones(vi.num_cols)
    for i, dem in enumerate(demands):
        base = i * num_a
        for pos in vi.arcs_out(dem.source):
            objective[base + pos] = 1.0
        for pos in vi.arcs_in(dem.source):
            upper[base + pos] = 0.0  # nothing may flow back into the source

    lp = LinearProgram(objective, a_matrix, senses, rhs, lower, upper)
    return MerrModel(
        instance=instance,
        vars=vi,
        lp=lp,
        capacity_rows=capacity_rows,
        conservation_rows=conservation_rows,
        length_rows=length_rows,
        source_rows=source_rows,
    )


def relax(model: MerrModel) -> LinearProgram:
    """Fractional relaxation: binary domains widen to [0, 1].

    Upper bounds pinned to zero (arcs into a source) stay pinned.
    """
    base = model.lp
    upper = np.where(base.upper <= 0.0, 0.0, 1.0)
    return LinearProgram(
        base.objective, base.a_matrix, base.senses, base.rhs,
        np.zeros(base.num_vars), upper,
    )


def vector_from_paths(
    model: MerrModel, paths: dict[int, Sequence[NodeId]]
) -> np.ndarray:
    """Build the 0/1 column vector that routes the given demand paths.

    ``paths`` maps demand index to a node path from that demand's
    source to its dest.  No feasibility checking happens here; feed the
    result to ``decode_paths`` or the LP residuals to validate.
    """
    vi = model.vars
    x = np.zeros(model.lp.num_vars)
    for i, path in paths.items():
        dem = model.instance.demands[i]
        if path[0] != dem.source or path[-1] != dem.dest:
            raise ValueError(f"path for demand {i} has wrong endpoints")
        for a, b in zip(path, path[1:]):
            x[vi.col(i, a, b)] = 1.0
    return x


def _strip_loops(trail: Sequence[NodeId]) -> tuple[list[NodeId], int]:
    """Remove revisits from a walk; each removal is one stripped cycle."""
    simple: list[NodeId] = []
    pos: dict[NodeId, int] = {}
    cycles = 0
    for node in trail:
        if node in pos:
            j = pos[node]
            for dropped in simple[j + 1:]:
                del pos[dropped]
            simple = simple[: j + 1]
            cycles += 1
        else:
            pos[node] = len(simple)
            simple.append(node)
    return simple, cycles


def walk_arcs(
    arcs: Iterable[tuple[NodeId, NodeId]],
    source: NodeId,
    dest: NodeId,
) -> tuple[tuple[NodeId, ...] | None, int]:
    """Turn one demand's integral arc set into a simple path plus cycles.

    Returns ``(path, cycles_stripped)``; the path is None when no flow
    leaves the source.  The walk always steps to the smallest unused
    head, so the result is deterministic.  Raises DecodeError when the
    arc set is not a balanced source-to-dest flow.
    """
    out: dict[NodeId, list[NodeId]] = {}
    total = 0
    for tail, head in arcs:
        out.setdefault(tail, []).append(head)
        total += 1
    for heads in out.values():
        heads.sort()

    cycles = 0
    path: tuple[NodeId, ...] | None = None
    src_out = out.get(source, [])
    if len(src_out) > 1:
        raise DecodeError(f"source {source!r} has outflow {len(src_out)}")
    if src_out:
        trail = [source]
        cur = source
        while cur != dest:
            heads = out.get(cur)
            if not heads:
                raise DecodeError(f"flow walk stuck at {cur!r}")
            cur = heads.pop(0)
            trail.append(cur)
        simple, cycles = _strip_loops(trail)
        path = tuple(simple)

    # whatever remains must decompose into closed loops
    while True:
        open_tails = [t for t, heads in out.items() if heads]
        if not open_tails:
            break
        start = min(open_tails)
        trail = [start]
        cur = start
        while out.get(cur):
            cur = out[cur].pop(0)
            trail.append(cur)
        if cur != start:
            raise DecodeError(f"leftover flow is not closed (stuck at {cur!r})")
        simple, extra = _strip_loops(trail)
        if len(simple) != 1:
            raise DecodeError("leftover flow failed to reduce to loops")
        cycles += extra
    return path, cycles


def decode_paths(
    model: MerrModel,
    x: np.ndarray,
    *,
    tol_feas: float = TOL_FEAS,
    tol_int: float = TOL_INT,
) -> RoutingOutcome:
    """Read demand paths out of a feasible integral solution vector.

    Validates feasibility (within ``tol_feas``) and integrality (within
    ``tol_int``) before decoding; violations raise DecodeError.  The
    outcome carries per-demand decisions in input order and the total
    count of stripped cycles in its stats.
    """
    x = np.asarray(x, dtype=float).ravel()
    lp = model.lp
    if x.size != lp.num_vars:
        raise DecodeError(f"vector length {x.size} != {lp.num_vars} columns")
    off = np.abs(x - np.round(x))
    if off.size and float(off.max()) > tol_int:
        j = int(np.argmax(off))
        raise DecodeError(f"column {j} is fractional: {x[j]!r}")
    xr = np.round(x)
    if np.any(xr < lp.lower - tol_int) or np.any(xr > lp.upper + tol_int):
        raise DecodeError("vector violates variable bounds")
    resid = lp.a_matrix @ xr - lp.rhs
    le = lp.senses == SENSE_LE
    viol = np.where(le, resid, np.abs(resid))
    if viol.size and float(viol.max()) > tol_feas:
        row = int(np.argmax(viol))
        raise DecodeError(f"row {row} violated by {viol[row]:.3e}")

    vi = model.vars
    decisions: list[DemandDecision] = []
    cycles_total = 0
    for i, dem in enumerate(model.instance.demands):
        sub = xr[vi.demand_slice(i)]
        used = [vi.arcs[pos] for pos in np.flatnonzero(sub > 0.5)]
        path, cycles = walk_arcs(used, dem.source, dem.dest)
        cycles_total += cycles
        if path is None:
            decisions.append(DemandDecision(dem, DemandStatus.REJECTED))
        else:
            hops = len(path) - 1
            if hops > model.instance.l_max:
                raise DecodeError(
                    f"demand {i} decoded to {hops} hops > l_max"
                )
            decisions.append(
                DemandDecision(dem, DemandStatus.SATISFIED, path)
            )
    met = sum(1 for d in decisions if d.status == DemandStatus.SATISFIED)
    return RoutingOutcome(
        algorithm="decode",
        decisions=tuple(decisions),
        stats=RoutingStats(
            met_count=met,
            total_demands=len(decisions),
            cycles_stripped=cycles_total,
        ),
    )
