"""Routing entangled pairs in quantum networks.

The package solves the maximum entangled routing rate problem: given a
network whose links each hold at most one entangled pair, and a set of
source/destination demands, connect as many demands as possible along
pairwise edge-disjoint paths of bounded hop count.

Solvers range from an exact integer program (branch and bound over an
embedded simplex solver) to LP-rounding and greedy heuristics, plus a
brute-force oracle for small instances.  A fidelity module models the
quality of the delivered end-to-end pairs, and a harness reproduces
rate-versus-load experiments on bundled topologies.
"""

from entroute.topology import (
    DEFAULT_DISTANCE_KM,
    Demand,
    DemandError,
    Edge,
    MerrInstance,
    NetworkGraph,
    TopologyError,
    generate_demands,
    load_topology,
    sample_reduced_network,
    serialize_topology,
    shortest_path,
)
from entroute.lp import (
    LinearProgram,
    LpSolution,
    LpStatus,
    MipSolution,
    MipStatus,
    NodeLimitExceeded,
    SimplexError,
    solve_lp,
    solve_mip,
)
from entroute.formulation import (
    DecodeError,
    MerrModel,
    VarIndex,
    build_merr_model,
    decode_paths,
    relax,
)
from entroute.outcome import (
    DemandDecision,
    DemandStatus,
    RateReport,
    RoutingOutcome,
    RoutingStats,
)
from entroute.algorithms import (
    OracleLimitError,
    brute_force_oracle,
    entangled_routing_rate,
    hbra,
    plba,
    rra,
    solve_ilp_exact,
)
from entroute.fidelity import (
    ChannelParams,
    TimingBudget,
    depolarizing_probability,
    dephasing_probability,
    end_to_end_fidelity,
    link_werner_parameter,
    load_channel_params,
    loss_probability,
    propagation_delay,
    timing_budget,
)
from entroute.harness import (
    CSV_HEADER,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    derive_trial_seed,
    load_config,
    load_instance,
    run_experiment,
    write_csv,
)

__all__ = [
    "CSV_HEADER",
    "DEFAULT_DISTANCE_KM",
    "ChannelParams",
    "ConfigError",
    "DecodeError",
    "Demand",
    "DemandDecision",
    "DemandError",
    "DemandStatus",
    "Edge",
    "ExperimentConfig",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "MerrInstance",
    "MerrModel",
    "MipSolution",
    "MipStatus",
    "NetworkGraph",
    "NodeLimitExceeded",
    "OracleLimitError",
    "RateReport",
    "ResultRow",
    "RoutingOutcome",
    "RoutingStats",
    "SimplexError",
    "TimingBudget",
    "TopologyError",
    "VarIndex",
    "brute_force_oracle",
    "build_merr_model",
    "decode_paths",
    "dephasing_probability",
    "depolarizing_probability",
    "derive_trial_seed",
    "end_to_end_fidelity",
    "entangled_routing_rate",
    "generate_demands",
    "hbra",
    "link_werner_parameter",
    "load_channel_params",
    "load_config",
    "load_instance",
    "load_topology",
    "loss_probability",
    "plba",
    "propagation_delay",
    "relax",
    "rra",
    "run_experiment",
    "sample_reduced_network",
    "serialize_topology",
    "shortest_path",
    "solve_ilp_exact",
    "solve_lp",
    "solve_mip",
    "timing_budget",
    "write_csv",
]

__version__ = "0.1.0"
