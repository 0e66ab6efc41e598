"""Physical-layer model: delays, loss, noise, and path fidelity.

Closed-form expressions only, all times in seconds.  The end-to-end
figure uses a Werner-parameter product across swapped links; that
composition is a modeling choice (documented in the README), not a
measured quantity.  Photon loss is heralded and therefore reported
separately instead of entering the fidelity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Mapping, Sequence

DEFAULT_FIBER_SPEED_KM_S = 200000.0
DEFAULT_DEADLINE_S = 1.46


@dataclass(frozen=True)
class ChannelParams:
    """Per-channel physical parameters.

    p_init          probability the qubit is lost right at generation
    alpha_db_per_km fiber attenuation
    r_deph_hz       dephasing rate
    r_depo_hz       depolarizing rate
    c_fiber_km_per_s signal speed in fiber
    """

    p_init: float = 0.0
    alpha_db_per_km: float = 0.0
    r_deph_hz: float = 0.0
    r_depo_hz: float = 0.0
    c_fiber_km_per_s: float = DEFAULT_FIBER_SPEED_KM_S

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_init <= 1.0:
            raise ValueError(f"p_init must be in [0, 1], got {self.p_init}")
        for name in ("alpha_db_per_km", "r_deph_hz", "r_depo_hz"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.c_fiber_km_per_s <= 0.0:
            raise ValueError("c_fiber_km_per_s must be positive")

    @classmethod
    def from_dict(cls, payload: Mapping) -> "ChannelParams":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown channel parameter(s): {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in payload.items()})


def load_channel_params(source: str | IO) -> ChannelParams:
    """Read a JSON file whose keys mirror the ChannelParams fields."""
    if hasattr(source, "read"):
        payload = json.load(source)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    return ChannelParams.from_dict(payload)


@dataclass(frozen=True)
class TimingBudget:
    """The four control-cycle intervals measured against the coherence deadline."""

    t_entangle_s: float = 0.0
    t_report_s: float = 0.0
    t_route_s: float = 0.0
    t_dispatch_s: float = 0.0
    deadline_s: float = DEFAULT_DEADLINE_S

    def __post_init__(self) -> None:
        for name in ("t_entangle_s", "t_report_s", "t_route_s", "t_dispatch_s"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.deadline_s <= 0.0:
            raise ValueError("deadline_s must be positive")


def propagation_delay(
    distance_km: float, c_fiber_km_per_s: float = DEFAULT_FIBER_SPEED_KM_S
) -> float:
    """Signal travel time over one fiber span, in seconds."""
    if distance_km < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance_km}")
    if c_fiber_km_per_s <= 0.0:
        raise ValueError("fiber speed must be positive")
    return distance_km / c_fiber_km_per_s


def loss_probability(params: ChannelParams, distance_km: float) -> float:
    """Chance the photon never arrives: generation loss plus attenuation."""
    if distance_km < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance_km}")
    survive = (1.0 - params.p_init) * 10.0 ** (
        -params.alpha_db_per_km * distance_km / 10.0
    )
    return 1.0 - survive


def dephasing_probability(r_deph_hz: float, dt_s: float) -> float:
    """Phase-flip chance accumulated over dt seconds at the given rate."""
    if r_deph_hz < 0.0 or dt_s < 0.0:
        raise ValueError("rate and dt must be >= 0")
    return 1.0 - math.exp(-dt_s * r_deph_hz)


def depolarizing_probability(r_depo_hz: float, dt_s: float) -> float:
    """Full-mixing chance accumulated over dt seconds at the given rate."""
    if r_depo_hz < 0.0 or dt_s < 0.0:
        raise ValueError("rate and dt must be >= 0")
    return 1.0 - math.exp(-dt_s * r_depo_hz)


def link_werner_parameter(distance_km: float, params: ChannelParams) -> float:
    """Werner parameter of one link after its propagation-time noise."""
    dt = propagation_delay(distance_km, params.c_fiber_km_per_s)
    p_depo = depolarizing_probability(params.r_depo_hz, dt)
    p_deph = dephasing_probability(params.r_deph_hz, dt)
    return (1.0 - p_depo) * (1.0 - p_deph)


def end_to_end_fidelity(
    path_distances_km: Sequence[float], params: ChannelParams
) -> float:
    """Fidelity of the pair delivered over a path of swapped links.

    Per-link Werner parameters multiply under swapping, and the final
    state has F = (1 + 3w) / 4.  Strictly decreasing in hop count while
    any noise rate is nonzero; always within [0.25, 1].
    """
    if len(path_distances_km) == 0:
        raise ValueError("path must have at least one link")
    w = 1.0
    for d in path_distances_km:
        w *= link_werner_parameter(d, params)
    return (1.0 + 3.0 * w) / 4.0


def timing_budget(budget: TimingBudget) -> dict:
    """Check the four-interval control cycle against the deadline."""
    total = (
        budget.t_entangle_s
        + budget.t_report_s
        + budget.t_route_s
        + budget.t_dispatch_s
    )
    return {
        "within_deadline": total < budget.deadline_s,
        "total_s": total,
        "slack_s": budget.deadline_s - total,
    }
