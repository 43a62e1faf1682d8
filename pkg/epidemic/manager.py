import itertools
import logging
from dataclasses import dataclass, replace
from typing import AbstractSet, Callable, Dict, List, Mapping, Optional, Set

from consistency.items import InformationItem
from consistency.replicas import Reconcile, ReplicaStore
from epidemic.gossip import Infection, InfectionState, Source, gossip_round, start_epidemic
from injection_protocol.messages import Hop, Message, MessageKind, Messenger
from sim_core.engine import Simulation
from sim_core.trace import TraceKind

logger = logging.getLogger(__name__)


@dataclass
class EpidemicHandle:
    handle_id: int
    state: InfectionState
    attribution: Optional[str]
    started_at: float
    on_complete: Optional[Callable[["EpidemicHandle"], None]] = None
    finished_at: Optional[float] = None

    @property
    def complete(self) -> bool:
        return self.state.complete


class EpidemicManager:
    """
    Runs epidemics inside the event loop: one gossip round per round period,
    applied atomically, until a round sends nothing.
    """

    def __init__(
        self,
        sim: Simulation,
        replicas: ReplicaStore,
        messenger: Messenger,
        fanout: int = 3,
        round_period: float = 1.0,
        interest_filter: bool = False,
        interests: Optional[Mapping[str, AbstractSet[int]]] = None,
        suppress_duplicates: bool = True,
    ):
        if fanout < 1:
            raise ValueError(f"fanout must be >= 1, got {fanout}")
        self.sim = sim
        self.replicas = replicas
        self.messenger = messenger
        self.fanout = fanout
        self.round_period = round_period
        self.interest_filter = interest_filter
        self.interests = interests or {}
        self.suppress_duplicates = suppress_duplicates
        self.handles: Dict[int, EpidemicHandle] = {}
        self._ids = itertools.count(1)

    def receive(self, device: int, item: InformationItem, by: Source, attribution: Optional[str]) -> Reconcile:
        """Hand a version to a device; records INFECT when its replica changed."""
        outcome = self.replicas.accept(device, item, self.sim.now)
        if outcome is Reconcile.UPDATED:
            self.sim.trace.emit(
                self.sim.now,
                TraceKind.INFECT,
                item=item.item_id,
                ver=item.version,
                device=device,
                by=by,
                inj=attribution,
            )
        return outcome

    def _interested(self, item: InformationItem) -> Optional[AbstractSet[int]]:
        if not self.interest_filter:
            return None
        return self.interests.get(item.item_id, frozenset())

    def _holders(self, item: InformationItem) -> Set[int]:
        return {
            d.id
            for d in self.sim.devices.values()
            if d.alive and self.replicas.version(d.id, item.item_id) >= item.version
        }

    def _skip(self, item: InformationItem, infected: AbstractSet[int]) -> Set[int]:
        """Devices that cannot or need not receive this version."""
        dead = {d.id for d in self.sim.devices.values() if not d.alive}
        return dead | (self._holders(item) - set(infected))

    def _absorb_carriers(self, state: InfectionState) -> InfectionState:
        """Holders that share a clique with the epidemic relay it from now on."""
        members = set()
        for device in state.infected:
            clique = self.sim.clique_of(device)
            if clique is not None:
                members |= clique.members
        carriers = (self._holders(state.item) & members) - state.infected_set
        if not carriers:
            return state
        infected = dict(state.infected)
        infected.update({d: Infection(d, self.sim.now, d) for d in sorted(carriers)})
        return replace(state, infected=infected)

    def start(
        self,
        injection_point: int,
        item: InformationItem,
        attribution: Optional[str] = None,
        on_complete: Optional[Callable[[EpidemicHandle], None]] = None,
        source: Source = "backbone",
    ) -> EpidemicHandle:
        if self.replicas.version(injection_point, item.item_id) < item.version:
            raise ValueError(f"Device {injection_point} does not hold {item.item_id} v{item.version}")

        clique = self.sim.clique_of(injection_point)
        handle_id = next(self._ids)
        if clique is None:
            state = InfectionState(item=item, complete=True)
        else:
            carriers = self._holders(item) & clique.members
            state = start_epidemic(
                clique,
                injection_point,
                item,
                self.sim.now,
                self.sim.topology,
                infected_by=source,
                skip=self._skip(item, carriers | {injection_point}),
                interested=self._interested(item),
                carriers=carriers,
            )
        handle = EpidemicHandle(handle_id, state, attribution, self.sim.now, on_complete)
        self.handles[handle_id] = handle
        logger.debug(f"Epidemic {handle_id} for {item.item_id} v{item.version} from {injection_point}")

        if state.complete:
            self._finish(handle)
        else:
            self.sim.after(self.round_period, f"gossip:{handle_id}", lambda: self._round(handle))
        return handle

    def _round(self, handle: EpidemicHandle) -> None:
        item = handle.state.item
        current = self._absorb_carriers(handle.state)
        state, transmissions = gossip_round(
            current,
            self.sim.topology,
            self.fanout,
            self.sim.streams.gossip,
            self.sim.now,
            interested=self._interested(item),
            skip=self._skip(item, current.infected_set),
            suppress_duplicates=self.suppress_duplicates,
        )

        delivered = set()
        for transmission in transmissions:
            sent = self.messenger.send(
                Message(
                    kind=MessageKind.FORWARD,
                    hop=Hop.ADHOC,
                    sender=transmission.sender,
                    receiver=transmission.receiver,
                    item_id=item.item_id,
                    version=item.version,
                    scope=item.scope,
                    attribution=handle.attribution,
                )
            )
            if sent and transmission.receiver not in delivered:
                delivered.add(transmission.receiver)
                self.receive(transmission.receiver, item, transmission.sender, handle.attribution)

        # a sender that ran dry mid-round never got its pushes out
        undelivered = state.infected_set - current.infected_set - delivered
        if undelivered:
            state = replace(state, infected={d: i for d, i in state.infected.items() if d not in undelivered})
        handle.state = state
        if state.complete:
            self._finish(handle)
        else:
            self.sim.after(self.round_period, f"gossip:{handle.handle_id}", lambda: self._round(handle))

    def _finish(self, handle: EpidemicHandle) -> None:
        handle.finished_at = self.sim.now
        self.handles.pop(handle.handle_id, None)
        logger.debug(
            f"Epidemic {handle.handle_id} done: {len(handle.state.infected)} infected, "
            f"{handle.state.rounds} rounds, {handle.state.messages} messages"
        )
        if handle.on_complete is not None:
            handle.on_complete(handle)

    def active(self) -> List[EpidemicHandle]:
        return [h for h in self.handles.values() if not h.complete]


__all__ = ["EpidemicHandle", "EpidemicManager"]
