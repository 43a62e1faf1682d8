"""
Backbone-side state: the service registry and the item store.

Only the protocol flows in `injection_protocol.injections` talk to this; it
never sends messages itself.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from consistency.items import InformationItem, ItemCatalog
from injection_protocol.errors import EmptyRegistry
from sim_core.devices import Device, Rect

logger = logging.getLogger(__name__)

DEFAULT_REGISTRY_TTL = 300.0


@dataclass
class Registration:
    device: int
    service_id: str
    registered_at: float
    last_known_clique: Optional[int]
    advertised: Dict[str, int] = field(default_factory=dict)
    stale: bool = False


@dataclass(frozen=True)
class GeoFence:
    area: Rect
    service_id: str


class BackboneService:
    """
    Registry: service_id -> device -> Registration.
    Item store: item_id -> latest version held backbone-side.

    Items passing through a relay or a mediated wormhole are never written to
    the store.
    """

    def __init__(self, catalog: ItemCatalog, ttl: float = DEFAULT_REGISTRY_TTL):
        if ttl <= 0:
            raise ValueError(f"Registry TTL must be positive, got {ttl}")
        self.catalog = catalog
        self.ttl = ttl
        self.registry: Dict[str, Dict[int, Registration]] = {}
        self.item_store: Dict[str, InformationItem] = {}

    # --- Registry ---

    def register(
        self,
        device_id: int,
        service_id: str,
        now: float,
        clique_id: Optional[int],
        advertised: Optional[Mapping[str, int]] = None,
    ) -> Registration:
        """Add or refresh a registration; re-registering only updates it."""
        entries = self.registry.setdefault(service_id, {})
        entry = entries.get(device_id)
        if entry is None:
            entry = Registration(device_id, service_id, now, clique_id)
            entries[device_id] = entry
        entry.registered_at = now
        entry.last_known_clique = clique_id
        entry.stale = False
        entry.advertised = dict(advertised or {})
        return entry

    def registrants(self, service_id: str, include_stale: bool = False) -> List[Registration]:
        """Most recent registration first; equal timestamps by device id."""
        entries = self.registry.get(service_id, {}).values()
        chosen = [e for e in entries if include_stale or not e.stale]
        return sorted(chosen, key=lambda e: (-e.registered_at, e.device))

    def require_registrants(self, service_id: str) -> List[Registration]:
        registrants = self.registrants(service_id)
        if not registrants:
            raise EmptyRegistry(f"No registered device for service '{service_id}'")
        return registrants

    def mark_stale(self, service_id: str, device_id: int) -> None:
        entry = self.registry.get(service_id, {}).get(device_id)
        if entry is not None and not entry.stale:
            entry.stale = True
            logger.info(f"Registration of {device_id} for '{service_id}' marked stale")

    def purge(self, now: float) -> List[Registration]:
        """Drop registrations older than the TTL."""
        removed = []
        for entries in self.registry.values():
            for device_id in [d for d, e in entries.items() if now - e.registered_at > self.ttl]:
                removed.append(entries.pop(device_id))
        if removed:
            logger.debug(f"Purged {len(removed)} expired registrations")
        return removed

    def size(self, service_id: Optional[str] = None) -> int:
        if service_id is not None:
            return len(self.registry.get(service_id, {}))
        return sum(len(e) for e in self.registry.values())

    def advertisers(self, item_id: str) -> List[Registration]:
        """Fresh registrations advertising some version of `item_id`."""
        service_id = self.catalog.service_of(item_id)
        return [e for e in self.registrants(service_id) if e.advertised.get(item_id, 0) > 0]

    # --- Item store ---

    def store(self, item: InformationItem) -> bool:
        """Keep `item` if it is newer than what the store holds."""
        current = self.item_store.get(item.item_id)
        if current is not None and current.version >= item.version:
            return False
        self.item_store[item.item_id] = item
        logger.debug(f"Backbone stored {item.item_id} v{item.version}")
        return True

    def lookup(self, item_id: str) -> Optional[InformationItem]:
        return self.item_store.get(item_id)

    def store_digest(self) -> str:
        """Hash of the whole item store; equal digests mean identical contents."""
        digest = hashlib.sha256()
        for item_id in sorted(self.item_store):
            item = self.item_store[item_id]
            digest.update(f"{item_id}:{item.version}:{item.payload_digest}:{item.produced_at!r}\n".encode())
        return digest.hexdigest()


class GeoFenceWatch:
    """Reports devices whose position entered a fence since the previous check."""

    def __init__(self, fences: Iterable[GeoFence]):
        self.fences = list(fences)
        self._inside: List[Set[int]] = [set() for _ in self.fences]

    def crossings(self, devices: Iterable[Device]) -> List[Tuple[int, str]]:
        """(device_id, service_id) pairs for every fence entry, in fence then device order."""
        entered = []
        alive = sorted((d for d in devices if d.alive), key=lambda d: d.id)
        for index, fence in enumerate(self.fences):
            now_inside = {d.id for d in alive if fence.area.contains(d.position)}
            for device_id in sorted(now_inside - self._inside[index]):
                entered.append((device_id, fence.service_id))
            self._inside[index] = now_inside
        return entered


__all__ = [
    "DEFAULT_REGISTRY_TTL",
    "Registration",
    "GeoFence",
    "BackboneService",
    "GeoFenceWatch",
]
