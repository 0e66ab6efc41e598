"""Command-line front end.

Subcommands: solve, experiment, gen-demands, fidelity, oracle.
Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

from entroute.algorithms import brute_force_oracle
from entroute.fidelity import (
    ChannelParams,
    TimingBudget,
    end_to_end_fidelity,
    link_werner_parameter,
    load_channel_params,
    loss_probability,
    timing_budget,
)
from entroute.harness import (
    _run_algorithm,
    load_config,
    load_instance,
    run_experiment,
    write_csv,
)
from entroute.outcome import RoutingOutcome
from entroute.topology import (
    MerrInstance,
    generate_demands,
    load_topology,
    serialize_topology,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits the process on bad flags; route that through our
    # own exit-code contract instead
    def error(self, message: str) -> None:
        raise _UsageError(f"{self.prog}: {message}")


def outcome_to_dict(outcome: RoutingOutcome) -> dict:
    """JSON-ready view of a routing outcome."""
    s = outcome.stats
    return {
        "algorithm": outcome.algorithm,
        "met": s.met_count,
        "total_demands": s.total_demands,
        "rate": (s.met_count / s.total_demands) if s.total_demands else None,
        "decisions": [
            {
                "demand": d.demand.index,
                "source": d.demand.source,
                "dest": d.demand.dest,
                "status": d.status.value,
                "path": list(d.path) if d.path is not None else None,
                "hops": d.hops,
            }
            for d in outcome.decisions
        ],
        "stats": {
            "runtime_ms": s.runtime_ms,
            "cycles_stripped": s.cycles_stripped,
            "lp_objective": s.lp_objective,
            "rounded_objective": s.rounded_objective,
            "nodes_explored": s.nodes_explored,
        },
    }


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="entroute", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="route one instance file")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument(
        "--algo",
        required=True,
        choices=("ilp", "hbra", "rra", "plba"),
        help="routing algorithm",
    )
    p.add_argument(
        "--seed", type=int, default=0, help="randomized-rounding seed"
    )

    p = sub.add_parser("experiment", help="run a sweep from a config file")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument(
        "--output", default=None, help="CSV path (overrides the config)"
    )

    p = sub.add_parser(
        "gen-demands", help="sample a demand set and print an instance file"
    )
    p.add_argument("--topology", required=True, help="graph file path")
    p.add_argument(
        "--format", default=None, help="edge-list-json or graphml-subset"
    )
    p.add_argument("--n", type=int, required=True, help="demand count")
    p.add_argument("--l-max", type=int, required=True, help="hop bound")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser(
        "fidelity", help="physical-layer report for one path"
    )
    p.add_argument(
        "--params", default=None, help="ChannelParams JSON (default noiseless)"
    )
    p.add_argument(
        "--distances",
        required=True,
        help="comma-separated link lengths in km, e.g. 20,20,20",
    )
    p.add_argument("--t-entangle", type=float, default=None)
    p.add_argument("--t-report", type=float, default=None)
    p.add_argument("--t-route", type=float, default=None)
    p.add_argument("--t-dispatch", type=float, default=None)
    p.add_argument("--deadline", type=float, default=None)

    p = sub.add_parser(
        "oracle", help="exhaustive optimum for a small instance file"
    )
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument(
        "--max-paths",
        type=int,
        default=200_000,
        help="per-demand candidate-path cap",
    )
    return parser


def _cmd_solve(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    outcome = _run_algorithm(args.algo, instance, args.seed)
    print(json.dumps(outcome_to_dict(outcome), indent=2))
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.output is not None:
        cfg = dataclasses.replace(cfg, output_path=args.output)
    rows = run_experiment(cfg)
    if cfg.output_path is None:
        write_csv(rows, sys.stdout)
    else:
        skipped = sum(1 for r in rows if r.skip_reason is not None)
        print(
            f"wrote {len(rows)} rows to {cfg.output_path}"
            + (f" ({skipped} skipped)" if skipped else "")
        )
    return 0


def _cmd_gen_demands(args: argparse.Namespace) -> int:
    graph = load_topology(args.topology, args.format)
    demands = generate_demands(graph, args.n, args.l_max, args.seed)
    instance = {
        "graph": serialize_topology(graph),
        "demands": [[d.source, d.dest] for d in demands],
        "l_max": args.l_max,
    }
    print(json.dumps(instance, indent=2))
    return 0


def _cmd_fidelity(args: argparse.Namespace) -> int:
    params = (
        load_channel_params(args.params)
        if args.params is not None
        else ChannelParams()
    )
    try:
        distances = [float(tok) for tok in args.distances.split(",") if tok]
    except ValueError:
        raise _UsageError("--distances must be comma-separated numbers")
    report = {
        "num_links": len(distances),
        "distances_km": distances,
        "fidelity": end_to_end_fidelity(distances, params),
        "link_werner": [link_werner_parameter(d, params) for d in distances],
        "link_loss": [loss_probability(params, d) for d in distances],
    }
    timing_flags = {
        "t_entangle_s": args.t_entangle,
        "t_report_s": args.t_report,
        "t_route_s": args.t_route,
        "t_dispatch_s": args.t_dispatch,
        "deadline_s": args.deadline,
    }
    given = {k: v for k, v in timing_flags.items() if v is not None}
    if given:
        report["timing"] = timing_budget(TimingBudget(**given))
    print(json.dumps(report, indent=2))
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    instance = load_instance(args.instance)
    t0 = time.perf_counter()
    met = brute_force_oracle(
        instance, max_paths_per_demand=args.max_paths
    )
    n = len(instance.demands)
    print(
        json.dumps(
            {
                "optimal_met": met,
                "n_demands": n,
                "rate": met / n if n else None,
                "runtime_ms": (time.perf_counter() - t0) * 1000.0,
            },
            indent=2,
        )
    )
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "experiment": _cmd_experiment,
    "gen-demands": _cmd_gen_demands,
    "fidelity": _cmd_fidelity,
    "oracle": _cmd_oracle,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except Exception as exc:  # file errors, bad inputs, solver failures
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
