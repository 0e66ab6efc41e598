"""Result types shared by every routing algorithm."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from entroute.topology import Demand, NodeId


class DemandStatus(str, enum.Enum):
    SATISFIED = "satisfied"
    REJECTED = "rejected"


@dataclass(frozen=True)
class DemandDecision:
    """Outcome for one demand: a routed path or a rejection."""

    demand: Demand
    status: DemandStatus
    path: tuple[NodeId, ...] | None = None

    @property
    def hops(self) -> int | None:
        return None if self.path is None else len(self.path) - 1


@dataclass(frozen=True)
class RoutingStats:
    """Diagnostics attached to a routing outcome.

    ``lp_objective`` is the optimum of the fractional relaxation when
    the algorithm solved one, ``rounded_objective`` the objective value
    of the rounded vector before path extraction, ``cycles_stripped``
    the number of closed loops removed while decoding flows into paths,
    and ``nodes_explored`` the branch-and-bound node count for exact
    solves.
    """

    met_count: int
    total_demands: int
    cycles_stripped: int = 0
    runtime_ms: float = 0.0
    lp_objective: float | None = None
    rounded_objective: float | None = None
    nodes_explored: int | None = None


@dataclass(frozen=True)
class RoutingOutcome:
    """What an algorithm decided for every demand, plus diagnostics."""

    algorithm: str
    decisions: tuple[DemandDecision, ...]
    stats: RoutingStats

    def satisfied(self) -> tuple[DemandDecision, ...]:
        return tuple(
            d for d in self.decisions if d.status == DemandStatus.SATISFIED
        )


@dataclass(frozen=True)
class RateReport:
    """Fraction of demands connected in one routing round.

    ``rate`` is kept as an exact rational; callers format it as decimal
    only at I/O boundaries.
    """

    met: int
    total: int
    rate: Fraction

    @classmethod
    def from_counts(cls, met: int, total: int) -> "RateReport":
        if total <= 0:
            raise ValueError("rate undefined for empty demand set")
        if not 0 <= met <= total:
            raise ValueError(f"met={met} outside [0, {total}]")
        return cls(met=met, total=total, rate=Fraction(met, total))
