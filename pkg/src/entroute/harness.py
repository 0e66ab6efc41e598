"""Experiment runner: algorithm sweeps over demand counts and hop limits.

One trial = one reduced network plus one demand set, shared by every
selected algorithm so their rows are directly comparable.  Rows go to
CSV in a fixed column order; the whole run is a pure function of the
config, except for measured runtimes (disable ``measure_runtime`` for
byte-identical reruns).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import IO, Sequence

from entroute.algorithms import (
    OracleLimitError,
    brute_force_oracle,
    hbra,
    plba,
    rra,
    solve_ilp_exact,
)
from entroute.fidelity import load_channel_params
from entroute.lp import NodeLimitExceeded
from entroute.outcome import RoutingOutcome
from entroute.topology import (
    Demand,
    MerrInstance,
    generate_demands,
    load_topology,
    sample_reduced_network,
)

logger = logging.getLogger(__name__)

KNOWN_ALGORITHMS = ("ilp", "hbra", "rra", "plba", "oracle")
CSV_HEADER = (
    "topology,algorithm,n_demands,l_max,seed,met,rate,runtime_ms,lp_objective"
)


class ConfigError(ValueError):
    """Experiment configuration rejected before any work started."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a sweep needs; see ``load_config`` for the JSON form.

    ``measure_runtime=False`` writes runtime_ms as 0.000 so that two
    runs of the same config produce byte-identical CSV files.
    """

    topology_path: str
    topology_format: str | None = None
    algorithms: tuple[str, ...] = ("ilp", "hbra", "rra", "plba")
    n_demands_range: tuple[int, ...] = tuple(range(2, 21, 2))
    l_max_values: tuple[int, ...] = (8,)
    trials_per_cell: int = 1
    base_seed: int = 0
    p_entangle: float = 1.0
    output_path: str | None = None
    channel_params_path: str | None = None
    measure_runtime: bool = True

    def __post_init__(self) -> None:
        unknown = [a for a in self.algorithms if a not in KNOWN_ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown algorithm(s): {unknown}")
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        if not self.n_demands_range or any(n < 1 for n in self.n_demands_range):
            raise ConfigError("n_demands_range must be non-empty, all >= 1")
        if not self.l_max_values or any(l < 1 for l in self.l_max_values):
            raise ConfigError("l_max_values must be non-empty, all >= 1")
        if self.trials_per_cell < 1:
            raise ConfigError("trials_per_cell must be >= 1")
        if not 0.0 <= self.p_entangle <= 1.0:
            raise ConfigError("p_entangle must be in [0, 1]")

    @property
    def topology_name(self) -> str:
        return os.path.splitext(os.path.basename(self.topology_path))[0]


def _as_int_tuple(value, what: str) -> tuple[int, ...]:
    # accepts [2, 4, 6] or {"start": 2, "stop": 20, "step": 2}, stop inclusive
    if isinstance(value, dict):
        extra = set(value) - {"start", "stop", "step"}
        if extra:
            raise ConfigError(f"{what}: unknown range key(s) {sorted(extra)}")
        start, stop = int(value["start"]), int(value["stop"])
        step = int(value.get("step", 1))
        if step < 1:
            raise ConfigError(f"{what}: step must be >= 1")
        return tuple(range(start, stop + 1, step))
    if isinstance(value, Sequence) and not isinstance(value, (str, bytes)):
        return tuple(int(v) for v in value)
    raise ConfigError(f"{what} must be a list of ints or a start/stop/step map")


def load_config(source: str | IO) -> ExperimentConfig:
    """Read an ExperimentConfig from JSON (path or open file)."""
    if hasattr(source, "read"):
        payload = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(payload) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    kwargs = dict(payload)
    if "algorithms" in kwargs:
        kwargs["algorithms"] = tuple(str(a) for a in kwargs["algorithms"])
    for key in ("n_demands_range", "l_max_values"):
        if key in kwargs:
            kwargs[key] = _as_int_tuple(kwargs[key], key)
    return ExperimentConfig(**kwargs)


@dataclass(frozen=True)
class ResultRow:
    """One algorithm run on one trial instance.

    ``met``/``rate``/``runtime_ms`` are None when the run was skipped
    (the reason lands in ``skip_reason`` and the log, not the CSV).
    """

    topology: str
    algorithm: str
    n_demands: int
    l_max: int
    seed: int
    met: int | None
    rate: Fraction | None
    runtime_ms: float | None
    lp_objective: float | None
    skip_reason: str | None = None


def derive_trial_seed(
    base_seed: int, topology_name: str, n: int, l_max: int, trial: int
) -> int:
    """Stable 64-bit seed for one trial cell.

    Independent of the algorithm list, so every algorithm sees the
    same reduced network and demand set for a given trial.
    """
    key = f"{base_seed}|{topology_name}|{n}|{l_max}|{trial}".encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


def load_instance(source: str | IO) -> MerrInstance:
    """Read a self-contained instance file: graph, demand pairs, l_max."""
    if hasattr(source, "read"):
        payload = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    for key in ("graph", "demands", "l_max"):
        if key not in payload:
            raise ConfigError(f"instance file missing {key!r}")
    graph = load_topology(json.dumps(payload["graph"]), "json")
    demands = tuple(
        Demand(i, str(s), str(d))
        for i, (s, d) in enumerate(payload["demands"])
    )
    return MerrInstance(graph, demands, int(payload["l_max"]))


def _run_algorithm(
    algorithm: str, instance: MerrInstance, seed: int
) -> RoutingOutcome:
    if algorithm == "ilp":
        return solve_ilp_exact(instance)
    if algorithm == "hbra":
        return hbra(instance)
    if algorithm == "rra":
        return rra(instance, seed)
    if algorithm == "plba":
        return plba(instance)
    raise ValueError(f"unknown algorithm {algorithm!r}")


def _row_for(
    cfg: ExperimentConfig,
    algorithm: str,
    instance: MerrInstance,
    n: int,
    l_max: int,
    seed: int,
) -> ResultRow:
    common = dict(
        topology=cfg.topology_name,
        algorithm=algorithm,
        n_demands=n,
        l_max=l_max,
        seed=seed,
    )
    try:
        if algorithm == "oracle":
            t0 = time.perf_counter()
            met = brute_force_oracle(instance)
            runtime_ms = (time.perf_counter() - t0) * 1000.0
            lp_obj = None
        else:
            outcome = _run_algorithm(algorithm, instance, seed)
            met = outcome.stats.met_count
            runtime_ms = outcome.stats.runtime_ms
            # greedy routing never solves a relaxation
            lp_obj = outcome.stats.lp_objective
    except (OracleLimitError, NodeLimitExceeded) as exc:
        reason = f"{type(exc).__name__}: {exc}"
        logger.warning(
            "skipping %s on %s n=%d l_max=%d seed=%d: %s",
            algorithm, cfg.topology_name, n, l_max, seed, reason,
        )
        return ResultRow(
            **common,
            met=None,
            rate=None,
            runtime_ms=None,
            lp_objective=None,
            skip_reason=reason,
        )
    if not cfg.measure_runtime:
        runtime_ms = 0.0
    return ResultRow(
        **common,
        met=met,
        rate=Fraction(met, n),
        runtime_ms=runtime_ms,
        lp_objective=lp_obj,
    )


def run_experiment(cfg: ExperimentConfig) -> list[ResultRow]:
    """Run the full sweep; also writes CSV when the config names a file.

    Row order is (n_demands, l_max, trial, algorithm-as-configured),
    whatever order the work actually completed in.
    """
    graph = load_topology(cfg.topology_path, cfg.topology_format)
    if cfg.channel_params_path is not None:
        # routing ignores channel noise (l_max stands in for it); load
        # anyway so a bad file fails the run loudly
        load_channel_params(cfg.channel_params_path)
    rows: list[ResultRow] = []
    for n in cfg.n_demands_range:
        for l_max in cfg.l_max_values:
            for trial in range(cfg.trials_per_cell):
                seed = derive_trial_seed(
                    cfg.base_seed, cfg.topology_name, n, l_max, trial
                )
                reduced = sample_reduced_network(graph, cfg.p_entangle, seed)
                demands = generate_demands(reduced, n, l_max, seed)
                instance = MerrInstance(reduced, demands, l_max)
                for algorithm in cfg.algorithms:
                    rows.append(
                        _row_for(cfg, algorithm, instance, n, l_max, seed)
                    )
    if cfg.output_path is not None:
        write_csv(rows, cfg.output_path)
    return rows


def format_row(row: ResultRow) -> str:
    met = "" if row.met is None else str(row.met)
    rate = "" if row.rate is None else f"{float(row.rate):.6f}"
    runtime = "" if row.runtime_ms is None else f"{row.runtime_ms:.3f}"
    lp_obj = "" if row.lp_objective is None else f"{row.lp_objective:.6f}"
    return (
        f"{row.topology},{row.algorithm},{row.n_demands},{row.l_max},"
        f"{row.seed},{met},{rate},{runtime},{lp_obj}"
    )


def write_csv(rows: Sequence[ResultRow], target: str | IO) -> None:
    """Emit the fixed-schema CSV: UTF-8, LF endings, 6-decimal rates."""
    text = "\n".join([CSV_HEADER, *(format_row(r) for r in rows)]) + "\n"
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
