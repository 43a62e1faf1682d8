"""
Information Items, their Consistency Properties, and the provider/seeker roles.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Union

from pydantic import BaseModel, Field

logger = logging.getLogger(__name__)

BACKBONE_AUTHORITY = "backbone"
Authority = Union[int, str]


class Priority(str, Enum):
    LOW = "low"
    NORMAL = "normal"
    HIGH = "high"

    @property
    def rank(self) -> int:
        """Sort key: high priority first."""
        return {"high": 0, "normal": 1, "low": 2}[self.value]


class Scope(str, Enum):
    CLIQUE_LOCAL = "clique_local"
    GLOBAL = "global"


class ConsistencyProperties(BaseModel):
    """Synchronisation contract declared by an item's authority."""

    max_staleness: float = Field(default=60.0, gt=0, description="Authority bound on age, seconds")
    propagation_priority: Priority = Priority.NORMAL
    scope: Scope = Scope.GLOBAL


@dataclass(frozen=True)
class InformationItem:
    """One version of a uniquely identified datum."""

    item_id: str
    service_id: str
    version: int
    payload_digest: str
    origin: Authority
    produced_at: float
    properties: ConsistencyProperties

    @property
    def scope(self) -> Scope:
        return self.properties.scope

    @property
    def from_backbone(self) -> bool:
        return self.origin == BACKBONE_AUTHORITY


@dataclass
class ItemDefinition:
    item_id: str
    service_id: str
    origin: Authority
    properties: ConsistencyProperties


def payload_digest(item_id: str, version: int) -> str:
    return hashlib.sha256(f"{item_id}:{version}".encode()).hexdigest()[:16]


class ItemCatalog:
    """
    Known items and the version counter of each item's single authority.
    """

    def __init__(self, definitions: Optional[List[ItemDefinition]] = None):
        self.definitions: Dict[str, ItemDefinition] = {}
        self.latest: Dict[str, InformationItem] = {}
        for definition in definitions or []:
            self.add(definition)

    def add(self, definition: ItemDefinition) -> None:
        if definition.item_id in self.definitions:
            raise ValueError(f"Duplicate item_id '{definition.item_id}'")
        self.definitions[definition.item_id] = definition

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.definitions

    def definition(self, item_id: str) -> ItemDefinition:
        return self.definitions[item_id]

    def service_of(self, item_id: str) -> str:
        return self.definitions[item_id].service_id

    def items_of_service(self, service_id: str) -> List[str]:
        return sorted(i for i, d in self.definitions.items() if d.service_id == service_id)

    def produce(self, item_id: str, now: float) -> InformationItem:
        """Authority creates the next version of `item_id`."""
        definition = self.definitions[item_id]
        previous = self.latest.get(item_id)
        if previous is not None and now < previous.produced_at:
            raise ValueError(f"Item '{item_id}' produced at {now} before version {previous.version}")
        version = previous.version + 1 if previous else 1
        item = InformationItem(
            item_id=item_id,
            service_id=definition.service_id,
            version=version,
            payload_digest=payload_digest(item_id, version),
            origin=definition.origin,
            produced_at=now,
            properties=definition.properties,
        )
        self.latest[item_id] = item
        logger.debug(f"Produced {item_id} v{version} at {now}")
        return item

    def materialize(self, item_id: str, version: int, produced_at: float) -> InformationItem:
        """Rebuild an already produced version from what a replica remembers of it."""
        definition = self.definitions[item_id]
        return InformationItem(
            item_id=item_id,
            service_id=definition.service_id,
            version=version,
            payload_digest=payload_digest(item_id, version),
            origin=definition.origin,
            produced_at=produced_at,
            properties=definition.properties,
        )


@dataclass
class ProviderRole:
    device: int
    provided_items: FrozenSet[str] = field(default_factory=frozenset)
    delegate_of: Optional[int] = None

    def offers(self, definition: ItemDefinition) -> bool:
        """Own items, explicitly provided ones, and those of the device it is a delegate for."""
        return (
            definition.item_id in self.provided_items
            or definition.origin == self.device
            or (self.delegate_of is not None and definition.origin == self.delegate_of)
        )


@dataclass
class SeekerRole:
    device: int
    sought_items: FrozenSet[str] = field(default_factory=frozenset)


__all__ = [
    "BACKBONE_AUTHORITY",
    "Authority",
    "Priority",
    "Scope",
    "ConsistencyProperties",
    "InformationItem",
    "ItemDefinition",
    "ItemCatalog",
    "ProviderRole",
    "SeekerRole",
    "payload_digest",
]
