"""
Keeping Injection Points current as cliques move, merge and split.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import AbstractSet, Iterable, List, Mapping, Optional

from injection_point.scoring import (
    DEFAULT_HORIZON,
    DeviceScore,
    NoEligibleDevice,
    ScoreWeights,
    best_score,
    elect_injection_point,
    is_eligible,
    score_clique,
)
from injection_protocol.messages import Hop, Message, MessageKind, Messenger
from sim_core.devices import Device
from sim_core.engine import Simulation
from sim_core.topology import AdHocTopology, Clique
from sim_core.trace import TraceKind

logger = logging.getLogger(__name__)

DEFAULT_HYSTERESIS = 0.15


class Action(str, Enum):
    KEEP = "keep"
    HANDOVER = "handover"
    REELECT = "reelect"
    UNCOVERED = "uncovered"


@dataclass(frozen=True)
class MaintenanceResult:
    clique_id: int
    action: Action
    previous: Optional[int]
    current: Optional[int]
    incumbent_score: Optional[float] = None
    challenger_score: Optional[float] = None


def maintain_injection_point(
    clique: Clique,
    devices: Mapping[int, Device],
    topology: AdHocTopology,
    weights: ScoreWeights,
    horizon: float = DEFAULT_HORIZON,
    hysteresis: float = DEFAULT_HYSTERESIS,
    now: float = 0.0,
    incumbent: Optional[int] = None,
) -> MaintenanceResult:
    """
    Re-check a clique's Injection Point.

    `incumbent` defaults to the clique's current injection point; pass the
    former point explicitly when the clique lost it (departure, death, split).
    An incumbent that left the clique or can no longer serve is replaced at
    once. Otherwise the best challenger takes over only when its score
    exceeds incumbent_score * (1 + hysteresis).
    """
    if incumbent is None:
        incumbent = clique.injection_point
    if incumbent is None:
        raise ValueError(f"Clique {clique.clique_id} has no injection point to maintain")
    if hysteresis < 0:
        raise ValueError(f"hysteresis must be >= 0, got {hysteresis}")

    scores = score_clique(clique, devices, topology, weights, horizon, now)
    best = best_score(scores)

    if incumbent not in clique or not is_eligible(devices[incumbent]):
        if best is None:
            clique.injection_point = None
            return MaintenanceResult(clique.clique_id, Action.UNCOVERED, incumbent, None)
        clique.injection_point = best.device
        return MaintenanceResult(clique.clique_id, Action.REELECT, incumbent, best.device, None, best.total)

    own: DeviceScore = next(s for s in scores if s.device == incumbent)
    if best.device != incumbent and best.total > own.total * (1.0 + hysteresis):
        clique.injection_point = best.device
        return MaintenanceResult(clique.clique_id, Action.HANDOVER, incumbent, best.device, own.total, best.total)
    return MaintenanceResult(clique.clique_id, Action.KEEP, incumbent, incumbent, own.total, best.total)


def successor_clique(members: AbstractSet[int], cliques: Iterable[Clique]) -> Optional[Clique]:
    """The clique holding most of `members` (ties: lowest clique_id)."""
    best, overlap = None, 0
    for clique in sorted(cliques, key=lambda c: c.clique_id):
        shared = len(members & clique.members)
        if shared > overlap:
            best, overlap = clique, shared
    return best


class InjectionPointManager:
    """
    Elections and maintenance inside the event loop.

    Every election is charged as a probe/reply exchange between the clique
    coordinator (lowest member id) and each other member.
    """

    def __init__(
        self,
        sim: Simulation,
        messenger: Messenger,
        weights: Optional[ScoreWeights] = None,
        horizon: float = DEFAULT_HORIZON,
        hysteresis: float = DEFAULT_HYSTERESIS,
    ):
        self.sim = sim
        self.messenger = messenger
        self.weights = weights or ScoreWeights()
        self.horizon = horizon
        self.hysteresis = hysteresis
        self.elections = 0
        self.handovers = 0

    def _exchange(self, clique: Clique, attribution: Optional[str]) -> None:
        coordinator = clique.clique_id
        for member in sorted(clique.members - {coordinator}):
            self.messenger.send(
                Message(kind=MessageKind.PROBE, hop=Hop.ADHOC, sender=coordinator, receiver=member, attribution=attribution)
            )
            self.messenger.send(
                Message(kind=MessageKind.ACK, hop=Hop.ADHOC, sender=member, receiver=coordinator, attribution=attribution)
            )

    def _record_election(self, clique: Clique, reason: str, attribution: Optional[str]) -> None:
        self.elections += 1
        self.sim.trace.emit(
            self.sim.now,
            TraceKind.ELECT,
            clique=clique.clique_id,
            ip=clique.injection_point,
            size=len(clique),
            reason=reason,
            inj=attribution,
        )

    def elect(self, clique: Clique, attribution: Optional[str] = None, reason: str = "demand") -> int:
        """Elect and charge for it. Raises NoEligibleDevice."""
        winner = elect_injection_point(clique, self.sim.devices, self.sim.topology, self.weights, self.horizon, self.sim.now)
        self._exchange(clique, attribution)
        self._record_election(clique, reason, attribution)
        return winner

    def ensure(self, clique: Clique, attribution: Optional[str] = None) -> int:
        """The clique's injection point, electing one first when it has none."""
        if clique.injection_point is not None and is_eligible(self.sim.device(clique.injection_point)):
            return clique.injection_point
        return self.elect(clique, attribution)

    def maintain(self, previous: Iterable[Clique]) -> List[MaintenanceResult]:
        """
        Run once per tick after the cliques were recomputed: orphaned cliques
        re-elect, cliques with an injection point apply the hysteresis rule.
        """
        results = []
        for former in previous:
            incumbent = former.injection_point
            if incumbent is None:
                continue
            successor = successor_clique(former.members - {incumbent}, self.sim.cliques)
            if successor is None or successor.injection_point is not None:
                continue
            result = maintain_injection_point(
                successor, self.sim.devices, self.sim.topology, self.weights,
                self.horizon, self.hysteresis, self.sim.now, incumbent=incumbent,
            )
            results.append(result)
            if result.action is Action.REELECT:
                logger.info(f"Clique {successor.clique_id} lost injection point {incumbent}; re-electing")
                self._exchange(successor, None)
                self._record_election(successor, "orphan", None)
            else:
                logger.warning(f"Clique {successor.clique_id} has no backbone-capable member left")

        for clique in self.sim.cliques:
            if clique.injection_point is None:
                continue
            result = maintain_injection_point(
                clique, self.sim.devices, self.sim.topology, self.weights,
                self.horizon, self.hysteresis, self.sim.now,
            )
            results.append(result)
            if result.action is Action.HANDOVER:
                self.handovers += 1
                self._exchange(clique, None)
                self.sim.trace.emit(
                    self.sim.now,
                    TraceKind.HANDOVER,
                    clique=clique.clique_id,
                    from_=result.previous,
                    to=result.current,
                    old_score=result.incumbent_score,
                    new_score=result.challenger_score,
                )
                logger.info(f"Clique {clique.clique_id}: handover {result.previous} -> {result.current}")
            elif result.action is Action.REELECT:
                # the carried injection point lost its backbone capability
                self._exchange(clique, None)
                self._record_election(clique, "ineligible", None)
        return results


__all__ = [
    "DEFAULT_HYSTERESIS",
    "Action",
    "MaintenanceResult",
    "maintain_injection_point",
    "successor_clique",
    "InjectionPointManager",
    "NoEligibleDevice",
]
