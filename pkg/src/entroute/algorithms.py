"""Routing algorithms: exact solver, two LP-rounding schemes, a greedy
shortest-path scheme, and a brute-force optimum for small instances.

All of them answer the same question: which demands get an end-to-end
path, subject to every edge carrying at most one path and every path
using at most ``l_max`` hops.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import Callable, Iterable

import numpy as np

from entroute.formulation import (
    DecodeError,
    MerrModel,
    build_merr_model,
    decode_paths,
    relax,
    vector_from_paths,
    walk_arcs,
)
from entroute.lp import (
    TOL_INT,
    LpStatus,
    MipStatus,
    NodeLimitExceeded,
    SimplexError,
    solve_lp,
    solve_mip,
)
from entroute.outcome import (
    DemandDecision,
    DemandStatus,
    RateReport,
    RoutingOutcome,
    RoutingStats,
)
from entroute.topology import (
    EdgeKey,
    MerrInstance,
    NodeId,
    path_edge_keys,
    shortest_path,
)


class OracleLimitError(RuntimeError):
    """Path enumeration abandoned: a demand has too many candidates."""


# budget for the certificate search inside the exact solver; past
# either cap the solver falls back to plain branch and bound
_SEARCH_PATH_CAP = 50_000
_SEARCH_STEP_CAP = 30_000_000


def entangled_routing_rate(outcome: RoutingOutcome, total: int) -> RateReport:
    """Connected fraction for one routing round (Definition: met / total)."""
    return RateReport.from_counts(outcome.stats.met_count, total)


def _finish(
    algorithm: str,
    decisions: Iterable[DemandDecision],
    started: float,
    **stat_kwargs,
) -> RoutingOutcome:
    decisions = tuple(decisions)
    met = sum(1 for d in decisions if d.status == DemandStatus.SATISFIED)
    stats = RoutingStats(
        met_count=met,
        total_demands=len(decisions),
        runtime_ms=(time.perf_counter() - started) * 1000.0,
        **stat_kwargs,
    )
    return RoutingOutcome(algorithm=algorithm, decisions=decisions, stats=stats)


# ---------------------------------------------------------------------------
# exact solver


def solve_ilp_exact(
    instance: MerrInstance, *, node_limit: int = 1_000_000
) -> RoutingOutcome:
    """Provably optimal routing for the flow program.

    Solves the relaxation for an upper bound, then runs a budgeted
    combinatorial search over per-demand path assignments.  The search
    certifies optimality on its own in two ways: by reaching the
    floored relaxation bound, or by exhausting the assignment space.
    Only when its budget runs out first does branch and bound on the
    binary program decide the instance, seeded with the best routing
    found so far.  If the node limit is then hit, NodeLimitExceeded is
    re-raised with that routing attached as ``incumbent_outcome``.
    """
    started = time.perf_counter()
    model = build_merr_model(instance)
    root = solve_lp(relax(model))
    if root.status != LpStatus.OPTIMAL:
        raise SimplexError(f"relaxation came back {root.status.value}")

    frac = np.abs(root.x - np.round(root.x))
    if not frac.size or float(frac.max()) <= TOL_INT:
        x = root.x
        nodes = 0
    else:
        # no binary point can beat the floored relaxation bound
        target = int(math.floor(root.objective + 10.0 * TOL_INT))
        try:
            met, paths, proven = _assignment_search(
                instance, _SEARCH_PATH_CAP, _SEARCH_STEP_CAP, target
            )
        except OracleLimitError:
            met, paths, proven = -1, {}, False
        if proven:
            x = vector_from_paths(model, paths)
            nodes = 0
        else:
            # fall back to branch and bound, seeded with the best
            # feasible point in reach; with an integral objective that
            # often prunes much of the tree early
            rounded, _, _ = _extract_from_fraction(
                instance, model, np.clip(root.x, 0.0, 1.0), _half_rounder
            )
            greedy = plba(instance).decisions
            candidates = [
                {
                    d.demand.index: d.path
                    for d in cand
                    if d.status == DemandStatus.SATISFIED
                }
                for cand in (rounded, greedy)
            ]
            if met > 0:
                candidates.append(paths)
            best_paths = max(candidates, key=len)
            warm = vector_from_paths(model, best_paths)
            # each demand leaves its source on at most one arc, so
            # those columns form natural branching groups
            vi = model.vars
            groups = [
                tuple(
                    d.index * vi.num_arcs + pos
                    for pos in vi.arcs_out(d.source)
                )
                for d in instance.demands
            ]
            try:
                mip = solve_mip(
                    model.lp,
                    model.integer_vars,
                    node_limit,
                    objective_is_integral=True,
                    warm_start_x=warm,
                    branch_groups=groups,
                )
            except NodeLimitExceeded as exc:
                exc.incumbent_outcome = None
                if exc.incumbent is not None and exc.incumbent.x is not None:
                    partial = decode_paths(model, exc.incumbent.x)
                    exc.incumbent_outcome = dataclasses.replace(
                        partial, algorithm="ilp"
                    )
                raise
            if mip.status != MipStatus.OPTIMAL:
                raise SimplexError("binary program reported infeasible")
            x = mip.x
            nodes = mip.nodes_explored

    decoded = decode_paths(model, x)
    return _finish(
        "ilp",
        decoded.decisions,
        started,
        lp_objective=root.objective,
        cycles_stripped=decoded.stats.cycles_stripped,
        nodes_explored=nodes,
    )


# ---------------------------------------------------------------------------
# LP rounding pipelines


def _half_rounder(sub: np.ndarray) -> np.ndarray:
    # ties at exactly one half round up
    return sub >= 0.5 - 1e-9


def _extract_from_fraction(
    instance: MerrInstance,
    model: MerrModel,
    fbar: np.ndarray,
    rounder: Callable[[np.ndarray], np.ndarray],
) -> tuple[list[DemandDecision], float, int]:
    """Rounding stage shared by the two rounding algorithms.

    Demands whose variables already came out integral keep their
    decoded paths.  Remaining demands have their fractional arcs
    rounded by ``rounder`` and then must find a path, in input order,
    inside their rounded arcs and the edges still free.  Returns the
    decisions, the rounded vector's objective value, and the count of
    stripped cycles.
    """
    vi = model.vars
    n = len(instance.demands)
    integral_path: dict[int, tuple[NodeId, ...] | None] = {}
    cycles_total = 0
    for i, dem in enumerate(instance.demands):
        sub = fbar[vi.demand_slice(i)]
        if float(np.max(np.abs(sub - np.round(sub)), initial=0.0)) <= TOL_INT:
            used = [vi.arcs[p] for p in np.flatnonzero(np.round(sub) > 0.5)]
            try:
                path, cycles = walk_arcs(used, dem.source, dem.dest)
            except DecodeError:
                continue  # malformed integral demand falls back to rounding
            if path is not None and len(path) - 1 > instance.l_max:
                continue
            integral_path[i] = path
            cycles_total += cycles

    available: set[EdgeKey] = set(instance.graph.edge_keys())
    decisions: list[DemandDecision | None] = [None] * n
    for i, dem in enumerate(instance.demands):
        if i not in integral_path:
            continue
        path = integral_path[i]
        if path is None:
            decisions[i] = DemandDecision(dem, DemandStatus.REJECTED)
        else:
            decisions[i] = DemandDecision(dem, DemandStatus.SATISFIED, path)
            available.difference_update(path_edge_keys(path))

    # round every leftover demand first, then route them in input order
    rounded: dict[int, np.ndarray] = {}
    for i in range(n):
        if i not in integral_path:
            rounded[i] = rounder(fbar[vi.demand_slice(i)])

    rounded_objective = 0.0
    for i, dem in enumerate(instance.demands):
        out_pos = vi.arcs_out(dem.source)
        if i in integral_path:
            sub = np.round(fbar[vi.demand_slice(i)])
            rounded_objective += float(sum(sub[p] for p in out_pos))
        else:
            rounded_objective += float(sum(1.0 for p in out_pos if rounded[i][p]))

    for i, dem in enumerate(instance.demands):
        if decisions[i] is not None:
            continue
        mask = rounded[i]
        enabled = {
            vi.edges[p // 2]
            for p in np.flatnonzero(mask)
            if vi.edges[p // 2] in available
        }
        hit = shortest_path(instance.graph, dem.source, dem.dest, enabled)
        if hit is not None and hit[1] <= instance.l_max:
            decisions[i] = DemandDecision(
                dem, DemandStatus.SATISFIED, tuple(hit[0])
            )
            available.difference_update(path_edge_keys(hit[0]))
        else:
            decisions[i] = DemandDecision(dem, DemandStatus.REJECTED)

    return decisions, rounded_objective, cycles_total


def _route_rounded(
    instance: MerrInstance,
    algorithm: str,
    rounder: Callable[[np.ndarray], np.ndarray],
    started: float,
) -> RoutingOutcome:
    model = build_merr_model(instance)
    sol = solve_lp(relax(model))
    if sol.status != LpStatus.OPTIMAL:
        raise SimplexError(f"relaxation came back {sol.status.value}")
    fbar = np.clip(sol.x, 0.0, 1.0)
    decisions, rounded_objective, cycles = _extract_from_fraction(
        instance, model, fbar, rounder
    )
    return _finish(
        algorithm,
        decisions,
        started,
        lp_objective=sol.objective,
        rounded_objective=rounded_objective,
        cycles_stripped=cycles,
    )


def hbra(instance: MerrInstance) -> RoutingOutcome:
    """Half-based rounding: arcs with fractional value >= 0.5 switch on."""
    return _route_rounded(instance, "hbra", _half_rounder, time.perf_counter())


def rra(instance: MerrInstance, seed: int) -> RoutingOutcome:
    """Randomized rounding: each arc switches on with its LP probability.

    One rounding pass per call (no retries); the expected objective of
    the rounded vector equals the LP optimum.  Draws use numpy's PCG64
    stream for the given seed, consumed in demand-major column order.
    """
    started = time.perf_counter()
    rng = np.random.default_rng(seed)

    def rounder(sub: np.ndarray) -> np.ndarray:
        return rng.random(sub.size) < sub

    return _route_rounded(instance, "rra", rounder, started)


# ---------------------------------------------------------------------------
# greedy baseline


def plba(instance: MerrInstance) -> RoutingOutcome:
    """Progressive shortest-path routing.

    Repeatedly: find each undecided demand's shortest path in the edges
    still free; reject demands with no path within l_max; satisfy the
    demand with the fewest hops (ties to the lowest demand index) and
    retire its edges.
    """
    started = time.perf_counter()
    n = len(instance.demands)
    decisions: list[DemandDecision | None] = [None] * n
    available: set[EdgeKey] = set(instance.graph.edge_keys())
    undecided = list(range(n))

    while undecided:
        best: tuple[int, int] | None = None
        best_path: list[NodeId] | None = None
        survivors = []
        for i in undecided:
            dem = instance.demands[i]
            hit = shortest_path(instance.graph, dem.source, dem.dest, available)
            if hit is None or hit[1] > instance.l_max:
                decisions[i] = DemandDecision(dem, DemandStatus.REJECTED)
                continue
            survivors.append(i)
            cand = (hit[1], i)
            if best is None or cand < best:
                best = cand
                best_path = hit[0]
        if best is None:
            break
        _, chosen = best
        dem = instance.demands[chosen]
        decisions[chosen] = DemandDecision(
            dem, DemandStatus.SATISFIED, tuple(best_path)
        )
        available.difference_update(path_edge_keys(best_path))
        undecided = [i for i in survivors if i != chosen]

    return _finish("plba", decisions, started)


# ---------------------------------------------------------------------------
# path-assignment search (shared by the brute-force oracle and the
# incumbent provider of the exact solver)


def _paths_within(
    instance: MerrInstance, source: NodeId, dest: NodeId, cap: int
) -> list[tuple[tuple[NodeId, ...], frozenset[EdgeKey]]]:
    """Every simple path source->dest with at most l_max hops.

    Each entry pairs the node sequence with its edge-key set; results
    come shortest first (ties in discovery order).
    """
    g = instance.graph
    found: list[tuple[tuple[NodeId, ...], frozenset[EdgeKey]]] = []
    seen = {source}
    walk: list[NodeId] = [source]

    def extend(node: NodeId) -> None:
        if len(found) > cap:
            raise OracleLimitError(
                f"more than {cap} paths for {source!r}->{dest!r}"
            )
        if node == dest:
            found.append((tuple(walk), frozenset(path_edge_keys(walk))))
            return
        if len(walk) - 1 == instance.l_max:
            return
        for nxt in g.neighbors(node):
            if nxt in seen:
                continue
            seen.add(nxt)
            walk.append(nxt)
            extend(nxt)
            walk.pop()
            seen.remove(nxt)

    extend(source)
    found.sort(key=lambda entry: len(entry[0]))
    return found


def _assignment_search(
    instance: MerrInstance,
    path_cap: int,
    expand_cap: int | None,
    target: int | None,
) -> tuple[int, dict[int, tuple[NodeId, ...]], bool]:
    """Depth-first path-or-skip search over all demands.

    Returns (best met count, chosen path per satisfied demand index,
    proven flag).  The flag is True when the count is certifiably
    optimal: either the search exhausted the whole space, or it
    reached ``target``, an upper bound supplied by the caller.
    ``expand_cap`` bounds the number of search steps; past it the best
    assignment so far is returned unproven.  Raises OracleLimitError
    when some demand has more than ``path_cap`` candidate paths.
    """
    options = [
        _paths_within(instance, d.source, d.dest, path_cap)
        for d in instance.demands
    ]
    # fewest options first shrinks the search tree
    order = sorted(range(len(options)), key=lambda i: (len(options[i]), i))
    ordered = [options[i] for i in order]
    # edge sets as bitmasks keep the disjointness test a single AND
    bit = {key: 1 << b for b, key in enumerate(instance.graph.edge_keys())}
    masks = [
        [sum(bit[k] for k in edges) for _, edges in opts] for opts in ordered
    ]
    n = len(ordered)
    best = 0
    best_pick: list[int | None] = [None] * n
    pick: list[int | None] = [None] * n
    steps = 0
    capped = False

    def search(pos: int, used: int, count: int) -> bool:
        nonlocal best, best_pick, steps, capped
        if count > best:
            best = count
            best_pick = pick.copy()
            if target is not None and best >= target:
                return True
        if pos == n or count + (n - pos) <= best:
            return False
        if expand_cap is not None:
            steps += 1
            if steps > expand_cap:
                capped = True
                return True
        for c, m in enumerate(masks[pos]):
            if not used & m:
                pick[pos] = c
                if search(pos + 1, used | m, count + 1):
                    return True
                pick[pos] = None
        return search(pos + 1, used, count)  # leave this demand unrouted

    search(0, 0, 0)
    paths = {
        order[pos]: ordered[pos][c][0]
        for pos, c in enumerate(best_pick)
        if c is not None
    }
    proven = not capped or (target is not None and best >= target)
    return best, paths, proven


def brute_force_oracle(
    instance: MerrInstance, *, max_paths_per_demand: int = 200_000
) -> int:
    """Exhaustive optimum: most demands connectable on disjoint paths.

    Enumerates every bounded-length simple path per demand, then
    searches over assignments (path or skip per demand) with pruning.
    Only practical for small graphs; raises OracleLimitError when a
    demand exceeds ``max_paths_per_demand`` candidate paths.
    """
    best, _, _ = _assignment_search(instance, max_paths_per_demand, None, None)
    return best
