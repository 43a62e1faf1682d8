"""
Protocol messages and the messenger that logs, bills and drains for them.
"""

import itertools
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional, Union

from consistency.items import Scope
from cost_metrics.ledger import CostLedger
from sim_core.engine import Simulation
from sim_core.trace import BACKBONE, TraceKind

logger = logging.getLogger(__name__)

Endpoint = Union[int, str]


class MessageKind(str, Enum):
    REQUEST = "Request"
    DELIVER = "Deliver"
    FORWARD = "Forward"
    FORCE_INJECT = "ForceInject"
    REGISTER = "Register"
    PROBE = "Probe"
    ACK = "Ack"


class Hop(str, Enum):
    ADHOC = "adhoc"
    BACKBONE = "backbone"


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    hop: Hop
    sender: Endpoint
    receiver: Endpoint
    item_id: Optional[str] = None
    version: Optional[int] = None
    scope: Optional[Scope] = None
    size_units: int = 1
    attribution: Optional[str] = None

    def __post_init__(self):
        if self.size_units < 1:
            raise ValueError("size_units must be positive")
        if self.hop is Hop.ADHOC and BACKBONE in (self.sender, self.receiver):
            raise ValueError("The backbone is never an ad-hoc endpoint")

    @property
    def device_endpoint(self) -> int:
        return self.sender if self.sender != BACKBONE else self.receiver


@dataclass
class MessageCount:
    backbone: int = 0
    adhoc: int = 0


class Messenger:
    """
    Every message goes through `send`: one MSG trace record, battery drain on
    the paying device, and billing. Backbone messages attributed to an
    injection are only counted here and billed when the injection finishes.
    """

    def __init__(self, sim: Simulation, ledger: CostLedger):
        self.sim = sim
        self.ledger = ledger
        self.counts: Dict[Optional[str], MessageCount] = defaultdict(MessageCount)
        self._ids = itertools.count(1)

    def send(self, message: Message) -> bool:
        """Returns False when a dead device tried to send."""
        if message.sender != BACKBONE and not self.sim.is_alive(message.sender):
            logger.debug(f"Dead device {message.sender} cannot send {message.kind.value}")
            return False

        self.sim.trace.emit(
            self.sim.now,
            TraceKind.MSG,
            id=next(self._ids),
            inj=message.attribution,
            kind=message.kind,
            hop=message.hop,
            from_=message.sender,
            to=message.receiver,
            item=message.item_id,
            ver=message.version,
            scope=message.scope,
            size=message.size_units,
        )

        model = self.ledger.model
        payer = message.device_endpoint
        energy = model.adhoc_energy if message.hop is Hop.ADHOC else model.backbone_energy
        device = self.sim.devices.get(payer)
        if device is not None and device.alive:
            self.ledger.record_energy(payer, device.drain(energy))

        count = self.counts[message.attribution]
        if message.hop is Hop.ADHOC:
            count.adhoc += 1
            self.ledger.charge_adhoc(message.sender)
        else:
            count.backbone += 1
            if message.attribution is None:
                self.ledger.charge_backbone(payer)
        return True

    def counted(self, attribution: str) -> MessageCount:
        return self.counts.get(attribution, MessageCount())

    @property
    def total(self) -> MessageCount:
        return MessageCount(
            backbone=sum(c.backbone for c in self.counts.values()),
            adhoc=sum(c.adhoc for c in self.counts.values()),
        )


__all__ = ["Endpoint", "MessageKind", "Hop", "Message", "MessageCount", "Messenger"]
