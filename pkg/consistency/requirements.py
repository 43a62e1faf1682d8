"""
Consistency Requirements and the invariant-injury trigger.

check_requirements decides which seekers are unhappy this tick,
trigger_injections turns those injuries into at most one request per
(clique, item), and propagation_plan orders push targets for an item.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from consistency.items import BACKBONE_AUTHORITY, InformationItem, ItemCatalog, ItemDefinition, Scope
from consistency.replicas import ReplicaStore, age_of
from sim_core.topology import Clique

logger = logging.getLogger(__name__)

# Preset tolerances (seconds): a business traveler wants fresher arrival times than a tourist.
PROFILES: Dict[str, float] = {
    "business_traveler": 30.0,
    "tourist": 300.0,
}


@dataclass(frozen=True)
class ConsistencyRequirement:
    seeker: int
    item_id: str
    max_tolerated_age: float
    max_wait: float
    declared_at: float = 0.0
    profile: Optional[str] = None

    def __post_init__(self):
        if self.max_tolerated_age <= 0 or self.max_wait < 0:
            raise ValueError(f"Invalid bounds on requirement of {self.seeker} for {self.item_id}")

    @property
    def key(self) -> Tuple[int, str]:
        return (self.seeker, self.item_id)


class InjuryReason(str, Enum):
    MISSING = "missing"
    STALE = "stale"


@dataclass(frozen=True)
class Injury:
    requirement: ConsistencyRequirement
    reason: InjuryReason
    age: Optional[float] = None


def check_requirements(
    requirements: Iterable[ConsistencyRequirement], replicas: ReplicaStore, now: float
) -> List[Injury]:
    """
    Requirements injured at `now`: no replica after max_wait, or a replica
    strictly older than max_tolerated_age. Requirements declared in the future
    are ignored.
    """
    injured = []
    for requirement in requirements:
        if requirement.declared_at > now:
            continue
        replica = replicas.get(requirement.seeker, requirement.item_id)
        if replica is None:
            if now - requirement.declared_at > requirement.max_wait:
                injured.append(Injury(requirement, InjuryReason.MISSING))
            continue
        age = age_of(replica, now)
        if age > requirement.max_tolerated_age:
            injured.append(Injury(requirement, InjuryReason.STALE, age))
    return injured


# --- In-flight suppression ---


@dataclass
class InFlight:
    event_id: str
    started_at: float
    deadline: float
    delivered: bool = False


class InFlightTable:
    """
    One outstanding request per (clique_id, item_id).

    An entry suppresses new triggers until it is released, or until its
    deadline passes without delivery.
    """

    def __init__(self):
        self._entries: Dict[Tuple[int, str], InFlight] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def active(self, clique_id: int, item_id: str, now: float) -> bool:
        entry = self._entries.get((clique_id, item_id))
        if entry is None:
            return False
        if entry.delivered or now <= entry.deadline:
            return True
        logger.info(f"In-flight {entry.event_id} for ({clique_id}, {item_id}) timed out")
        del self._entries[(clique_id, item_id)]
        return False

    def add(self, clique_id: int, item_id: str, event_id: str, now: float, timeout: float) -> None:
        self._entries[(clique_id, item_id)] = InFlight(event_id, now, now + timeout)

    def mark_delivered(self, event_id: str) -> None:
        for entry in self._entries.values():
            if entry.event_id == event_id:
                entry.delivered = True

    def release(self, event_id: str) -> None:
        for key in [k for k, e in self._entries.items() if e.event_id == event_id]:
            del self._entries[key]


# --- Trigger ---


class Route(str, Enum):
    LOCAL = "local"
    BACKBONE = "backbone"
    WORMHOLE = "wormhole"
    UNSERVABLE = "unservable"


@dataclass
class InjectionRequest:
    clique_id: int
    item_id: str
    seekers: Tuple[int, ...]
    strictest_age: float
    route: Route
    holder: Optional[int] = None
    reason: str = ""


@dataclass
class RouteContext:
    """Snapshot the trigger reads to pick a route; never mutated by it."""

    catalog: ItemCatalog
    replicas: ReplicaStore
    backbone_store: Mapping[str, InformationItem] = field(default_factory=dict)


def _route(
    clique: Clique,
    definition: ItemDefinition,
    injuries: List[Injury],
    strictest: float,
    context: RouteContext,
    now: float,
) -> Tuple[Route, Optional[int], str]:
    item_id = definition.item_id
    seekers_version = min(context.replicas.version(i.requirement.seeker, item_id) for i in injuries)

    # ask the neighbours first
    holders = context.replicas.holders(item_id, clique.members)
    if holders:
        freshest = holders[0]
        if freshest.version > seekers_version and now - freshest.produced_at <= strictest:
            return Route.LOCAL, freshest.holder, "fresh copy inside the clique"

    if definition.origin == BACKBONE_AUTHORITY:
        return Route.BACKBONE, None, "backbone authority"

    if definition.properties.scope is Scope.CLIQUE_LOCAL:
        return Route.UNSERVABLE, None, "clique_local item outside its origin clique"

    if definition.origin in clique.members:
        return Route.UNSERVABLE, None, "authority has nothing fresher"

    stored = context.backbone_store.get(item_id)
    if stored is not None and stored.version > seekers_version and now - stored.produced_at <= strictest:
        return Route.BACKBONE, None, "fresh copy on the backbone"
    return Route.WORMHOLE, None, "gather from a holder clique"


def trigger_injections(
    injured: Iterable[Injury],
    cliques: Iterable[Clique],
    in_flight: InFlightTable,
    now: float,
    context: RouteContext,
) -> List[InjectionRequest]:
    """
    Group injuries by (clique, item) and emit one request per group that has
    nothing in flight. Injured seekers outside every clique (dead or departed)
    are dropped.
    """
    membership = {m: c for c in cliques for m in c.members}
    groups: Dict[Tuple[int, str], List[Injury]] = {}
    for injury in injured:
        clique = membership.get(injury.requirement.seeker)
        if clique is None:
            continue
        groups.setdefault((clique.clique_id, injury.requirement.item_id), []).append(injury)

    requests = []
    for (clique_id, item_id), injuries in sorted(groups.items()):
        if in_flight.active(clique_id, item_id, now):
            logger.debug(f"Suppressed trigger for ({clique_id}, {item_id}): in flight")
            continue
        strictest = min(i.requirement.max_tolerated_age for i in injuries)
        route, holder, reason = _route(
            membership[clique_id], context.catalog.definition(item_id), injuries, strictest, context, now
        )
        requests.append(
            InjectionRequest(
                clique_id=clique_id,
                item_id=item_id,
                seekers=tuple(sorted(i.requirement.seeker for i in injuries)),
                strictest_age=strictest,
                route=route,
                holder=holder,
                reason=reason,
            )
        )
    return requests


# --- Propagation plan ---


@dataclass(frozen=True)
class PlanTarget:
    clique_id: int
    item_id: str
    priority_rank: int
    strictest_age: float

    @property
    def sort_key(self) -> Tuple[int, float, int]:
        return (self.priority_rank, self.strictest_age, self.clique_id)


@dataclass
class PropagationPlan:
    item_id: str
    targets: List[PlanTarget]
    unservable: List[int]

    @property
    def clique_ids(self) -> List[int]:
        return [t.clique_id for t in self.targets]


def propagation_plan(
    definition: ItemDefinition,
    cliques: Iterable[Clique],
    requirements: Iterable[ConsistencyRequirement],
) -> PropagationPlan:
    """
    Cliques holding seekers of the item, ordered by priority, then by the
    strictest max_tolerated_age among their seekers, then by clique_id.
    A clique_local item only ever targets its origin clique.
    """
    cliques = list(cliques)
    membership = {m: c for c in cliques for m in c.members}
    rank = definition.properties.propagation_priority.rank

    strictest: Dict[int, float] = {}
    seekers_by_clique: Dict[int, List[int]] = {}
    for requirement in requirements:
        if requirement.item_id != definition.item_id:
            continue
        clique = membership.get(requirement.seeker)
        if clique is None:
            continue
        cid = clique.clique_id
        strictest[cid] = min(strictest.get(cid, float("inf")), requirement.max_tolerated_age)
        seekers_by_clique.setdefault(cid, []).append(requirement.seeker)

    unservable: List[int] = []
    if definition.properties.scope is Scope.CLIQUE_LOCAL:
        origin_clique = membership.get(definition.origin) if isinstance(definition.origin, int) else None
        origin_id = origin_clique.clique_id if origin_clique else None
        for cid, seekers in seekers_by_clique.items():
            if cid != origin_id:
                unservable.extend(seekers)
        targets = []
        if origin_id is not None:
            targets.append(PlanTarget(origin_id, definition.item_id, rank, strictest.get(origin_id, float("inf"))))
        if unservable:
            logger.warning(f"{len(unservable)} seekers of clique_local '{definition.item_id}' are unservable")
        return PropagationPlan(definition.item_id, targets, sorted(unservable))

    targets = [PlanTarget(cid, definition.item_id, rank, age) for cid, age in strictest.items()]
    targets.sort(key=lambda t: t.sort_key)
    return PropagationPlan(definition.item_id, targets, unservable)


def merge_plans(plans: Iterable[PropagationPlan]) -> List[PlanTarget]:
    """Interleave several items' targets under the same ordering rule."""
    merged = [t for plan in plans for t in plan.targets]
    return sorted(merged, key=lambda t: (t.sort_key, t.item_id))


__all__ = [
    "PROFILES",
    "ConsistencyRequirement",
    "InjuryReason",
    "Injury",
    "check_requirements",
    "InFlight",
    "InFlightTable",
    "Route",
    "InjectionRequest",
    "RouteContext",
    "trigger_injections",
    "PlanTarget",
    "PropagationPlan",
    "propagation_plan",
    "merge_plans",
]
