import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

from consistency.items import InformationItem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ItemReplica:
    holder: int
    item_id: str
    version: int
    received_at: float
    produced_at: float


class Reconcile(str, Enum):
    UPDATED = "updated"
    DUPLICATE = "duplicate"
    STALE = "stale"


def age_of(replica: ItemReplica, now: float) -> float:
    """Staleness against the authority's production time, not the receipt time."""
    if now < replica.received_at:
        raise ValueError(f"now={now} precedes receipt at {replica.received_at}")
    return now - replica.produced_at


def reconcile(
    holder_replica: Optional[ItemReplica], incoming: InformationItem, holder: int, now: float
) -> Tuple[ItemReplica, Reconcile]:
    """Highest version wins; an equal version is a no-op; an older one is dropped."""
    if holder_replica is not None and holder_replica.item_id != incoming.item_id:
        raise ValueError(f"Cannot reconcile {holder_replica.item_id} with {incoming.item_id}")
    if holder_replica is None or incoming.version > holder_replica.version:
        replica = ItemReplica(
            holder=holder,
            item_id=incoming.item_id,
            version=incoming.version,
            received_at=now,
            produced_at=incoming.produced_at,
        )
        return replica, Reconcile.UPDATED
    if incoming.version == holder_replica.version:
        return holder_replica, Reconcile.DUPLICATE
    return holder_replica, Reconcile.STALE


class ReplicaStore:
    """
    Every device's replicas, one version per (holder, item_id).
    """

    def __init__(self):
        self._replicas: Dict[Tuple[int, str], ItemReplica] = {}
        self.stale_pushes = 0

    def __iter__(self) -> Iterator[ItemReplica]:
        return iter(self._replicas.values())

    def __len__(self) -> int:
        return len(self._replicas)

    def get(self, holder: int, item_id: str) -> Optional[ItemReplica]:
        return self._replicas.get((holder, item_id))

    def version(self, holder: int, item_id: str) -> int:
        replica = self.get(holder, item_id)
        return replica.version if replica else 0

    def accept(self, holder: int, item: InformationItem, now: float) -> Reconcile:
        current = self.get(holder, item.item_id)
        replica, outcome = reconcile(current, item, holder, now)
        if outcome is Reconcile.UPDATED:
            self._replicas[(holder, item.item_id)] = replica
        elif outcome is Reconcile.STALE:
            self.stale_pushes += 1
            logger.debug(f"Stale push of {item.item_id} v{item.version} to {holder}")
        return outcome

    def holders(self, item_id: str, members=None) -> List[ItemReplica]:
        """Replicas of `item_id`, optionally restricted to `members`, freshest first."""
        found = [
            r for (holder, item), r in self._replicas.items()
            if item == item_id and (members is None or holder in members)
        ]
        return sorted(found, key=lambda r: (-r.version, r.holder))


__all__ = ["ItemReplica", "Reconcile", "age_of", "reconcile", "ReplicaStore"]
