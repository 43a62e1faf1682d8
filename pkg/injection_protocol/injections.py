"""
The seven injection flows.

Each public method checks its preconditions synchronously (raising an
InjectionError subclass), sends its first message and schedules every later
step on the simulation queue. A flow ends in `finalize`, which records one
INJECT trace line, bills the pooled backbone cost and lifts the in-flight
suppression for its (clique, item).

Message timing: a message is traced when sent and acted on one hop latency
later.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import AbstractSet, Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence

from consistency.items import BACKBONE_AUTHORITY, InformationItem, ItemCatalog, ProviderRole, Scope
from consistency.replicas import ItemReplica, ReplicaStore
from consistency.requirements import InFlightTable
from cost_metrics.ledger import CostLedger
from epidemic.manager import EpidemicManager
from injection_point.maintenance import InjectionPointManager
from injection_point.scoring import NoEligibleDevice
from injection_protocol.backbone import BackboneService, Registration
from injection_protocol.errors import (
    EmptyRegistry,
    InvalidWormhole,
    ItemNotPresentInClique,
    NoBackboneCapableDevice,
    NoHolderClique,
    NotBackboneCapable,
    NotRegistered,
    ScopeViolation,
    TargetUnreachable,
    UnknownItem,
)
from injection_protocol.messages import Endpoint, Hop, Message, MessageKind, Messenger
from sim_core.engine import Simulation
from sim_core.topology import Clique
from sim_core.trace import BACKBONE, TraceKind

logger = logging.getLogger(__name__)

DEFAULT_BACKBONE_LATENCY = 0.5
DEFAULT_ADHOC_LATENCY = 0.05

InterestLookup = Callable[[AbstractSet[int], str], FrozenSet[int]]


class InjectionKind(str, Enum):
    BACKBONE_REQUESTED = "BackboneRequested"
    BACKBONE_SPONTANEOUS = "BackboneSpontaneous"
    ENTITY_DRIVEN = "EntityDriven"
    CLIQUE_SPONTANEOUS = "CliqueSpontaneous"
    CLIQUE_FORCED = "CliqueForced"
    WORMHOLE_DIRECT = "WormholeDirect"
    WORMHOLE_MEDIATED = "WormholeMediated"

    @property
    def is_wormhole(self) -> bool:
        return self in (InjectionKind.WORMHOLE_DIRECT, InjectionKind.WORMHOLE_MEDIATED)


class InjectionStatus(str, Enum):
    PENDING = "pending"
    DELIVERED = "delivered"
    FAILED = "failed"


@dataclass
class InjectionEvent:
    event_id: str
    kind: InjectionKind
    initiator: Endpoint
    item_id: str
    target_clique: Optional[int]
    requested_at: float
    injection_point: Optional[int] = None
    source_clique: Optional[int] = None
    delivered_at: Optional[float] = None
    finished_at: Optional[float] = None
    backbone_messages: int = 0
    adhoc_messages: int = 0
    version: Optional[int] = None
    status: InjectionStatus = InjectionStatus.PENDING
    error: Optional[str] = None
    interested: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.kind.is_wormhole and self.source_clique is not None and self.source_clique == self.target_clique:
            raise InvalidWormhole(f"Wormhole from clique {self.source_clique} to itself")

    @property
    def is_entity_driven(self) -> bool:
        return self.kind is InjectionKind.ENTITY_DRIVEN

    @property
    def done(self) -> bool:
        return self.status is not InjectionStatus.PENDING

    def mark_delivered(self, now: float, version: int) -> None:
        if now < self.requested_at:
            raise ValueError(f"{self.event_id} delivered at {now} before its request at {self.requested_at}")
        self.delivered_at = now
        self.version = version


class InjectionProtocol:
    """
    Backbone, clique and wormhole injections over one simulation.

    `interest_of(members, item_id)` returns the devices among `members` that
    declared interest in the item; it is sampled when an injection starts and
    decides who shares its backbone cost.
    """

    def __init__(
        self,
        sim: Simulation,
        catalog: ItemCatalog,
        backbone: BackboneService,
        replicas: ReplicaStore,
        messenger: Messenger,
        ledger: CostLedger,
        epidemics: EpidemicManager,
        points: InjectionPointManager,
        in_flight: Optional[InFlightTable] = None,
        interest_of: Optional[InterestLookup] = None,
        providers: Optional[Mapping[int, ProviderRole]] = None,
        backbone_latency: float = DEFAULT_BACKBONE_LATENCY,
        adhoc_latency: float = DEFAULT_ADHOC_LATENCY,
        relay_timeout: Optional[float] = None,
    ):
        if backbone_latency <= 0 or adhoc_latency <= 0:
            raise ValueError("Hop latencies must be positive")
        self.sim = sim
        self.catalog = catalog
        self.backbone = backbone
        self.replicas = replicas
        self.messenger = messenger
        self.ledger = ledger
        self.epidemics = epidemics
        self.points = points
        self.in_flight = in_flight if in_flight is not None else InFlightTable()
        self.interest_of = interest_of or (lambda members, item_id: frozenset())
        self.providers = providers
        self.backbone_latency = backbone_latency
        self.adhoc_latency = adhoc_latency
        self.relay_timeout = relay_timeout if relay_timeout is not None else 3 * backbone_latency
        self.events: Dict[str, InjectionEvent] = {}
        self._ids = itertools.count(1)

    # --- Plumbing ---

    def next_id(self) -> str:
        return f"inj-{next(self._ids)}"

    def _open(self, event: InjectionEvent) -> InjectionEvent:
        self.events[event.event_id] = event
        logger.info(
            f"{event.event_id} {event.kind.value} for {event.item_id} "
            f"(ip={event.injection_point}, clique={event.target_clique})"
        )
        return event

    def _send(
        self,
        event: InjectionEvent,
        kind: MessageKind,
        hop: Hop,
        sender: Endpoint,
        receiver: Endpoint,
        item: Optional[InformationItem] = None,
    ) -> bool:
        scope = self.catalog.definition(event.item_id).properties.scope if event.item_id in self.catalog else None
        return self.messenger.send(
            Message(
                kind=kind,
                hop=hop,
                sender=sender,
                receiver=receiver,
                item_id=event.item_id,
                version=item.version if item is not None else None,
                scope=scope,
                attribution=event.event_id,
            )
        )

    def _later(self, delay: float, event: InjectionEvent, step: str, action: Callable[[], None]) -> None:
        self.sim.after(delay, f"{event.event_id}:{step}", action)

    def _elect(self, clique: Clique, event_id: str) -> int:
        try:
            return self.points.ensure(clique, attribution=event_id)
        except NoEligibleDevice as exc:
            raise NoBackboneCapableDevice(str(exc)) from exc

    def _definition(self, item_id: str):
        if item_id not in self.catalog:
            raise UnknownItem(f"Unknown item '{item_id}'")
        return self.catalog.definition(item_id)

    def _guard_scope(self, item_id: str) -> None:
        if self._definition(item_id).properties.scope is Scope.CLIQUE_LOCAL:
            raise ScopeViolation(f"Item '{item_id}' is clique_local and never leaves its clique")

    def _alive_holders(self, item_id: str, members: AbstractSet[int]) -> List[ItemReplica]:
        return [r for r in self.replicas.holders(item_id, members) if self.sim.is_alive(r.holder)]

    def _as_item(self, replica: ItemReplica) -> InformationItem:
        return self.catalog.materialize(replica.item_id, replica.version, replica.produced_at)

    def _reachable(self, device_id: int) -> bool:
        return self.sim.is_alive(device_id) and self.sim.device(device_id).backbone_capable

    def _registered_member(self, service_id: str, members: AbstractSet[int]) -> Optional[Registration]:
        for entry in self.backbone.registrants(service_id):
            if entry.device in members and self._reachable(entry.device):
                return entry
        return None

    # --- Completion ---

    def finalize(self, event: InjectionEvent) -> None:
        if event.done:
            return
        counted = self.messenger.counted(event.event_id)
        event.backbone_messages = counted.backbone
        event.adhoc_messages = counted.adhoc
        event.finished_at = self.sim.now
        event.status = InjectionStatus.FAILED if event.error else InjectionStatus.DELIVERED
        payers = [event.initiator] if event.is_entity_driven else sorted(event.interested)

        self.sim.trace.emit(
            self.sim.now,
            TraceKind.INJECT,
            id=event.event_id,
            kind=event.kind,
            initiator=event.initiator,
            ip=event.injection_point,
            item=event.item_id,
            ver=event.version,
            src=event.source_clique,
            dst=event.target_clique,
            requested=event.requested_at,
            delivered=event.delivered_at,
            backbone=event.backbone_messages,
            adhoc=event.adhoc_messages,
            status=event.status,
            error=event.error,
            payers=payers,
        )
        self.ledger.bill_injection(event, event.interested)
        self.in_flight.release(event.event_id)
        if event.error:
            logger.warning(f"{event.event_id} {event.kind.value} failed: {event.error}")
        else:
            logger.info(
                f"{event.event_id} done: {event.backbone_messages} backbone, {event.adhoc_messages} ad-hoc messages"
            )

    def _fail(self, event: InjectionEvent, error: type) -> None:
        event.error = error.__name__
        self.finalize(event)

    def _receive_and_spread(self, event: InjectionEvent, device_id: int, item: InformationItem, by: Endpoint) -> None:
        """Hand the version to the device that injects it and gossip it through its clique."""
        if not self.sim.is_alive(device_id):
            self._fail(event, TargetUnreachable)
            return
        self.epidemics.receive(device_id, item, by, event.event_id)
        event.mark_delivered(self.sim.now, item.version)
        self.in_flight.mark_delivered(event.event_id)
        self.epidemics.start(
            device_id, item, attribution=event.event_id, on_complete=lambda _: self.finalize(event), source=by
        )

    # --- Backbone injections ---

    def _fetch(self, event: InjectionEvent, device_id: int, spread: bool = True) -> None:
        """Request/Deliver round trip between `device_id` and the backbone."""
        self._send(event, MessageKind.REQUEST, Hop.BACKBONE, device_id, BACKBONE)

        def at_backbone():
            item = self.backbone.lookup(event.item_id)
            if item is None:
                self._send(event, MessageKind.ACK, Hop.BACKBONE, BACKBONE, device_id)
                self._later(self.backbone_latency, event, "unknown-item", lambda: self._fail(event, UnknownItem))
                return
            self._send(event, MessageKind.DELIVER, Hop.BACKBONE, BACKBONE, device_id, item)
            self._later(self.backbone_latency, event, "deliver", lambda: arrived(item))

        def arrived(item: InformationItem):
            if spread:
                self._receive_and_spread(event, device_id, item, BACKBONE)
                return
            if not self.sim.is_alive(device_id):
                self._fail(event, TargetUnreachable)
                return
            self.epidemics.receive(device_id, item, BACKBONE, event.event_id)
            event.mark_delivered(self.sim.now, item.version)
            self.finalize(event)

        self._later(self.backbone_latency, event, "request", at_backbone)

    def backbone_injection_requested(self, clique: Clique, item_id: str) -> InjectionEvent:
        """
        One backbone fetch on behalf of the whole clique, through its
        injection point (elected first when missing).

        Raises:
            NoBackboneCapableDevice: nobody in the clique can reach the backbone.
        """
        event_id = self.next_id()
        ip = self._elect(clique, event_id)
        event = self._open(
            InjectionEvent(
                event_id=event_id,
                kind=InjectionKind.BACKBONE_REQUESTED,
                initiator=ip,
                item_id=item_id,
                target_clique=clique.clique_id,
                requested_at=self.sim.now,
                injection_point=ip,
                interested=self.interest_of(clique.members, item_id),
            )
        )
        self._fetch(event, ip)
        return event

    def backbone_injection_spontaneous(
        self, service_id: str, item_id: str, order: Optional[Sequence[int]] = None
    ) -> List[InjectionEvent]:
        """
        Push the stored version of `item_id` to one registrant per last-known
        clique. Registrants that cannot be reached any more are marked stale.
        `order` lists clique ids in dissemination order; others follow by id.
        """
        item = self.backbone.lookup(item_id)
        if item is None:
            raise UnknownItem(f"The backbone holds no version of '{item_id}'")
        try:
            registrants = self.backbone.require_registrants(service_id)
        except EmptyRegistry as exc:
            logger.warning(f"Spontaneous injection of {item_id} skipped: {exc}")
            return []

        by_last_known: Dict[Optional[int], Registration] = {}
        for entry in registrants:
            if not self._reachable(entry.device):
                self.backbone.mark_stale(service_id, entry.device)
                continue
            by_last_known.setdefault(entry.last_known_clique, entry)

        targets: Dict[int, Registration] = {}
        for entry in by_last_known.values():
            current = self.sim.clique_of(entry.device)
            targets.setdefault(current.clique_id, entry)

        rank = {clique_id: index for index, clique_id in enumerate(order or [])}
        events = []
        for clique_id in sorted(targets, key=lambda c: (rank.get(c, len(rank)), c)):
            device_id = targets[clique_id].device
            clique = self.sim.clique_by_id(clique_id)
            event = self._open(
                InjectionEvent(
                    event_id=self.next_id(),
                    kind=InjectionKind.BACKBONE_SPONTANEOUS,
                    initiator=BACKBONE,
                    item_id=item_id,
                    target_clique=clique_id,
                    requested_at=self.sim.now,
                    injection_point=device_id,
                    interested=self.interest_of(clique.members, item_id),
                )
            )
            self._send(event, MessageKind.DELIVER, Hop.BACKBONE, BACKBONE, device_id, item)
            self._later(
                self.backbone_latency,
                event,
                "push",
                lambda event=event, device_id=device_id: self._receive_and_spread(event, device_id, item, BACKBONE),
            )
            events.append(event)
        return events

    def entity_driven_injection(self, device_id: int, item_id: str, spread: bool = True) -> InjectionEvent:
        """
        A single device fetches for itself and then shares over ad-hoc links;
        it bears the whole backbone cost. With `spread` off it keeps the item.

        Raises:
            NotBackboneCapable: the device is dead or has no backbone link.
        """
        if not self._reachable(device_id):
            raise NotBackboneCapable(f"Device {device_id} cannot use the backbone")
        clique = self.sim.clique_of(device_id)
        event = self._open(
            InjectionEvent(
                event_id=self.next_id(),
                kind=InjectionKind.ENTITY_DRIVEN,
                initiator=device_id,
                item_id=item_id,
                target_clique=clique.clique_id,
                requested_at=self.sim.now,
                injection_point=device_id,
                interested=self.interest_of(clique.members, item_id),
            )
        )
        self._fetch(event, device_id, spread=spread)
        return event

    # --- Clique injections ---

    def _upload(
        self,
        event: InjectionEvent,
        uploader: int,
        on_uploaded: Callable[[InformationItem], None],
    ) -> None:
        """
        Collect the freshest version in the uploader's clique (one ad-hoc hop
        when someone else holds it) and send it to the backbone.
        """
        clique = self.sim.clique_of(uploader)
        holders = self._alive_holders(event.item_id, clique.members)
        if not holders:
            self._send(event, MessageKind.ACK, Hop.BACKBONE, uploader, BACKBONE)
            self._later(
                self.backbone_latency, event, "absent", lambda: self._fail(event, ItemNotPresentInClique)
            )
            return

        freshest = holders[0]
        own = self.replicas.get(uploader, event.item_id)
        item = self._as_item(freshest)

        def send_up():
            if not self._send(event, MessageKind.FORWARD, Hop.BACKBONE, uploader, BACKBONE, item):
                self._fail(event, TargetUnreachable)
                return
            self._later(self.backbone_latency, event, "upload", lambda: on_uploaded(item))

        if own is not None and own.version >= freshest.version:
            send_up()
            return
        self._send(event, MessageKind.FORWARD, Hop.ADHOC, freshest.holder, uploader, item)

        def gathered():
            if not self.sim.is_alive(uploader):
                self._fail(event, TargetUnreachable)
                return
            self.epidemics.receive(uploader, item, freshest.holder, event.event_id)
            send_up()

        self._later(self.adhoc_latency, event, "gather", gathered)

    def _stored(self, event: InjectionEvent, item: InformationItem) -> None:
        self.backbone.store(item)
        event.mark_delivered(self.sim.now, item.version)
        self.finalize(event)

    def clique_injection(
        self, clique: Clique, item_id: str, forced: bool, initiator: Optional[int] = None
    ) -> InjectionEvent:
        """
        Upload the clique's latest version of a global item to the backbone.

        Spontaneous: the clique's injection point uploads, fed by the holder
        (`initiator` when it holds the item). Forced: the backbone first sends
        ForceInject to the most recently registered member, which uploads.

        Raises:
            ScopeViolation: the item is clique_local.
            ItemNotPresentInClique: spontaneous upload of an item nobody holds.
            NoBackboneCapableDevice: no injection point can be elected.
            NotRegistered: forced, but the backbone knows no member to contact.
        """
        self._guard_scope(item_id)

        if forced:
            entry = self._registered_member(self.catalog.service_of(item_id), clique.members)
            if entry is None:
                raise NotRegistered(f"No reachable registered device in clique {clique.clique_id}")
            event = self._open(
                InjectionEvent(
                    event_id=self.next_id(),
                    kind=InjectionKind.CLIQUE_FORCED,
                    initiator=BACKBONE,
                    item_id=item_id,
                    target_clique=clique.clique_id,
                    requested_at=self.sim.now,
                    injection_point=entry.device,
                    interested=self.interest_of(clique.members, item_id),
                )
            )
            self._send(event, MessageKind.FORCE_INJECT, Hop.BACKBONE, BACKBONE, entry.device)

            def at_member():
                if not self.sim.is_alive(entry.device):
                    self._fail(event, TargetUnreachable)
                    return
                self._upload(event, entry.device, lambda item: self._stored(event, item))

            self._later(self.backbone_latency, event, "force", at_member)
            return event

        holders = self._alive_holders(item_id, clique.members)
        if not holders:
            raise ItemNotPresentInClique(f"Nobody in clique {clique.clique_id} holds '{item_id}'")
        event_id = self.next_id()
        ip = self._elect(clique, event_id)
        holder = initiator if initiator in {h.holder for h in holders} else holders[0].holder
        event = self._open(
            InjectionEvent(
                event_id=event_id,
                kind=InjectionKind.CLIQUE_SPONTANEOUS,
                initiator=holder,
                item_id=item_id,
                target_clique=clique.clique_id,
                requested_at=self.sim.now,
                injection_point=ip,
                interested=self.interest_of(clique.members, item_id),
            )
        )
        self._upload(event, ip, lambda item: self._stored(event, item))
        return event

    # --- Wormholes ---

    def wormhole_direct(self, source: Clique, target: Clique, item_id: str) -> InjectionEvent:
        """
        Tunnel an item from `source` to `target`; the backbone only relays and
        stores nothing.

        Raises:
            InvalidWormhole: source and target are the same clique.
            ScopeViolation: the item is clique_local.
            ItemNotPresentInClique: nobody in the source clique holds the item.
            NotRegistered: the target clique has no registered device.
            NoBackboneCapableDevice: the source clique cannot elect an injection point.
        """
        if source.clique_id == target.clique_id:
            raise InvalidWormhole(f"Wormhole from clique {source.clique_id} to itself")
        self._guard_scope(item_id)
        if not self._alive_holders(item_id, source.members):
            raise ItemNotPresentInClique(f"Nobody in clique {source.clique_id} holds '{item_id}'")
        receiver = next(
            (
                e.device
                for e in self.backbone.registrants(self.catalog.service_of(item_id))
                if e.device in target.members and self.sim.is_alive(e.device)
            ),
            None,
        )
        if receiver is None:
            raise NotRegistered(f"No registered device in target clique {target.clique_id}")

        event_id = self.next_id()
        ip = self._elect(source, event_id)
        event = self._open(
            InjectionEvent(
                event_id=event_id,
                kind=InjectionKind.WORMHOLE_DIRECT,
                initiator=ip,
                item_id=item_id,
                target_clique=target.clique_id,
                source_clique=source.clique_id,
                requested_at=self.sim.now,
                injection_point=receiver,
                interested=self.interest_of(target.members, item_id),
            )
        )

        def relay(item: InformationItem):
            if self._reachable(receiver):
                self._send(event, MessageKind.FORWARD, Hop.BACKBONE, BACKBONE, receiver, item)
                self._later(
                    self.backbone_latency,
                    event,
                    "relay",
                    lambda: self._receive_and_spread(event, receiver, item, BACKBONE),
                )
                return

            def notify():
                logger.info(f"{event.event_id}: relay to {receiver} timed out")
                self._send(event, MessageKind.ACK, Hop.BACKBONE, BACKBONE, ip)
                self._later(self.backbone_latency, event, "notify", lambda: self._fail(event, TargetUnreachable))

            self._later(self.relay_timeout, event, "timeout", notify)

        self._upload(event, ip, relay)
        return event

    def wormhole_mediated(self, requesting: Clique, item_id: str) -> InjectionEvent:
        """
        The backbone gathers the item from a holder clique with a forced clique
        injection, delivers it to the requesting clique's injection point and
        keeps no copy.

        The holder clique is the one advertising the freshest registered
        version; ties go to the lowest clique_id.

        Raises:
            ScopeViolation: the item is clique_local.
            NoHolderClique: no other clique advertises the item.
            NoBackboneCapableDevice: the requesting clique cannot elect an injection point.
        """
        self._guard_scope(item_id)
        candidates = []
        for entry in self.backbone.advertisers(item_id):
            if not self._reachable(entry.device):
                continue
            clique = self.sim.clique_of(entry.device)
            if clique.clique_id == requesting.clique_id:
                continue
            candidates.append((-entry.advertised[item_id], clique.clique_id, -entry.registered_at, entry.device))
        if not candidates:
            raise NoHolderClique(f"No clique advertises '{item_id}'")
        _, holder_clique, _, member = min(candidates)

        event_id = self.next_id()
        ip = self._elect(requesting, event_id)
        event = self._open(
            InjectionEvent(
                event_id=event_id,
                kind=InjectionKind.WORMHOLE_MEDIATED,
                initiator=ip,
                item_id=item_id,
                target_clique=requesting.clique_id,
                source_clique=holder_clique,
                requested_at=self.sim.now,
                injection_point=ip,
                interested=self.interest_of(requesting.members, item_id),
            )
        )
        self._send(event, MessageKind.FORCE_INJECT, Hop.BACKBONE, BACKBONE, member)

        def deliver(item: InformationItem):
            self._send(event, MessageKind.DELIVER, Hop.BACKBONE, BACKBONE, ip, item)
            self._later(
                self.backbone_latency, event, "deliver", lambda: self._receive_and_spread(event, ip, item, BACKBONE)
            )

        def at_member():
            if not self.sim.is_alive(member):
                self._fail(event, TargetUnreachable)
                return
            self._upload(event, member, deliver)

        self._later(self.backbone_latency, event, "force", at_member)
        return event

    # --- Registration ---

    def register(self, device_id: int, service_id: str) -> Registration:
        """
        Register a device for a service (1 backbone message, billed to it).
        The registration advertises the versions the device holds of the
        service's device-originated global items it provides.

        Raises:
            NotBackboneCapable: the device is dead or has no backbone link.
        """
        if not self._reachable(device_id):
            raise NotBackboneCapable(f"Device {device_id} cannot register")
        advertised = {}
        for item_id in self.catalog.items_of_service(service_id):
            definition = self.catalog.definition(item_id)
            if definition.origin == BACKBONE_AUTHORITY or definition.properties.scope is Scope.CLIQUE_LOCAL:
                continue
            if self.providers is not None:
                role = self.providers.get(device_id)
                if role is None or not role.offers(definition):
                    continue
            version = self.replicas.version(device_id, item_id)
            if version > 0:
                advertised[item_id] = version

        clique = self.sim.clique_of(device_id)
        self.messenger.send(Message(kind=MessageKind.REGISTER, hop=Hop.BACKBONE, sender=device_id, receiver=BACKBONE))
        entry = self.backbone.register(device_id, service_id, self.sim.now, clique.clique_id, advertised)
        self.sim.device(device_id).registrations.add(service_id)
        self.sim.trace.emit(
            self.sim.now,
            TraceKind.REGISTER,
            device=device_id,
            service=service_id,
            clique=clique.clique_id,
            advertised=sorted(f"{i}:{v}" for i, v in advertised.items()),
        )
        return entry

    # --- Queries ---

    def pending(self) -> List[InjectionEvent]:
        return [e for e in self.events.values() if not e.done]

    def close(self) -> int:
        """Finalize what is still open when the run stops; undelivered flows fail with RunEnded."""
        open_events = self.pending()
        for event in open_events:
            if event.delivered_at is None:
                event.error = "RunEnded"
            self.finalize(event)
        return len(open_events)

    def by_kind(self) -> Dict[str, int]:
        counts = {kind.value: 0 for kind in InjectionKind}
        for event in self.events.values():
            counts[event.kind.value] += 1
        return counts


__all__ = [
    "DEFAULT_BACKBONE_LATENCY",
    "DEFAULT_ADHOC_LATENCY",
    "InjectionKind",
    "InjectionStatus",
    "InjectionEvent",
    "InjectionProtocol",
]
