"""
Single-threaded deterministic event loop that owns the physical world.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional

from sim_core.devices import Device, Rect, step_mobility
from sim_core.errors import InvariantViolation
from sim_core.event_queue import EventQueue
from sim_core.random_streams import RandomStreams
from sim_core.topology import AdHocTopology, Clique, clique_index, compute_cliques, rebuild_topology
from sim_core.trace import Trace

logger = logging.getLogger(__name__)


@dataclass
class Event:
    name: str
    action: Callable[[], None]


class Simulation:
    """
    World state plus the event queue.

    Protocol modules never call each other synchronously on the same clique;
    they schedule follow-up actions here instead.
    """

    def __init__(
        self,
        devices: Iterable[Device],
        bounds: Rect,
        seed: int = 0,
        trace: Optional[Trace] = None,
        pause: float = 0.0,
    ):
        self.devices: Dict[int, Device] = {d.id: d for d in sorted(devices, key=lambda d: d.id)}
        self.bounds = bounds
        self.pause = pause
        self.streams = RandomStreams(seed)
        self.queue = EventQueue()
        self.trace = trace if trace is not None else Trace()
        self.topology: AdHocTopology = rebuild_topology(self.devices.values())
        self.cliques: List[Clique] = compute_cliques(self.topology, self.devices.values())
        self._index = clique_index(self.cliques)

    @property
    def now(self) -> float:
        return self.queue.now

    # --- Scheduling ---

    def schedule(self, at: float, name: str, action: Callable[[], None]) -> None:
        self.queue.schedule(round(at, 9), Event(name, action))

    def after(self, delay: float, name: str, action: Callable[[], None]) -> None:
        self.schedule(self.now + delay, name, action)

    def run(self, until: Optional[float] = None) -> int:
        """Dispatch events up to and including `until`; returns how many ran."""
        dispatched = 0
        while self.queue:
            upcoming = self.queue.peek_time()
            if until is not None and upcoming > until:
                break
            _, event = self.queue.next_event()
            logger.debug(f"t={self.now:.3f} {event.name}")
            event.action()
            dispatched += 1
        return dispatched

    # --- World ---

    def device(self, device_id: int) -> Device:
        return self.devices[device_id]

    def is_alive(self, device_id: int) -> bool:
        device = self.devices.get(device_id)
        return device is not None and device.alive

    def move(self, dt: float) -> None:
        step_mobility(self.devices.values(), dt, self.bounds, self.streams.mobility, self.pause)

    def refresh(self) -> List[Clique]:
        """Rebuild topology and cliques; returns the cliques of the previous epoch."""
        previous = self.cliques
        self.topology = rebuild_topology(self.devices.values(), self.topology)
        self.cliques = compute_cliques(self.topology, self.devices.values(), previous)
        self._index = clique_index(self.cliques)
        return previous

    def clique_of(self, device_id: int) -> Optional[Clique]:
        return self._index.get(device_id)

    def clique_by_id(self, clique_id: int) -> Optional[Clique]:
        clique = self._index.get(clique_id)
        return clique if clique is not None and clique.clique_id == clique_id else None

    def alive_ids(self) -> List[int]:
        return [d.id for d in self.devices.values() if d.alive]

    def check_world(self) -> None:
        """Partition and mobility-bound invariants; cheap enough to run every tick."""
        seen = set()
        for clique in self.cliques:
            if seen & clique.members:
                raise InvariantViolation("partition", f"clique {clique.clique_id} overlaps another")
            seen |= clique.members
        if seen != set(self.alive_ids()):
            raise InvariantViolation("partition", "cliques do not cover the alive devices")
        for device in self.devices.values():
            if not self.bounds.contains(device.position):
                raise InvariantViolation("mobility-bound", f"device {device.id} at {device.position}")


__all__ = ["Event", "Simulation"]
