"""
Cost model and per-device cost ledger.

Costs are integer units. Backbone messages that belong to an injection are
pooled and shared out when the injection finishes; every other message is
billed on the spot.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional

from pydantic import BaseModel, Field, model_validator

logger = logging.getLogger(__name__)


class CostModel(BaseModel):
    backbone_msg_cost: int = Field(default=100, gt=0)
    adhoc_msg_cost: int = Field(default=1, gt=0)
    backbone_energy: float = Field(default=1e-3, ge=0, le=1)
    adhoc_energy: float = Field(default=1e-4, ge=0, le=1)

    @model_validator(mode="after")
    def _backbone_is_dearer(self):
        if not self.backbone_msg_cost > self.adhoc_msg_cost:
            raise ValueError("backbone_msg_cost must exceed adhoc_msg_cost")
        return self


@dataclass
class DeviceLedger:
    backbone_units: int = 0
    adhoc_units: int = 0
    shared_units_received: int = 0
    energy_spent: float = 0.0

    @property
    def total_units(self) -> int:
        return self.backbone_units + self.adhoc_units


def split_cost(cost: int, payers: Iterable[int], injection_point: Optional[int]) -> Dict[int, int]:
    """
    Equal integer split; the remainder goes to the injection point (or to the
    lowest payer when there is none).
    """
    payers = sorted(set(payers))
    if not payers:
        if injection_point is None:
            raise ValueError("Nobody to bill")
        return {injection_point: cost}
    share, remainder = divmod(cost, len(payers))
    allocation = {p: share for p in payers}
    if remainder:
        receiver = injection_point if injection_point is not None else payers[0]
        allocation[receiver] = allocation.get(receiver, 0) + remainder
    return allocation


class CostLedger:
    def __init__(self, model: Optional[CostModel] = None):
        self.model = model or CostModel()
        self.accounts: Dict[int, DeviceLedger] = {}

    def account(self, device_id: int) -> DeviceLedger:
        return self.accounts.setdefault(device_id, DeviceLedger())

    def charge_adhoc(self, sender: int, messages: int = 1) -> None:
        self.account(sender).adhoc_units += messages * self.model.adhoc_msg_cost

    def charge_backbone(self, device_id: int, messages: int = 1) -> None:
        self.account(device_id).backbone_units += messages * self.model.backbone_msg_cost

    def record_energy(self, device_id: int, amount: float) -> None:
        self.account(device_id).energy_spent += amount

    def bill_injection(self, event, interested: Iterable[int]) -> Dict[int, int]:
        """
        Share out an injection's pooled backbone cost.

        Entity-driven injections are billed wholly to their initiator; all
        other kinds split equally among the interested devices captured at
        injection time, remainder to the injection point. The event's ad-hoc
        messages were already billed to their senders when sent.
        """
        cost = event.backbone_messages * self.model.backbone_msg_cost
        if cost == 0:
            return {}
        if event.is_entity_driven:
            allocation = {event.initiator: cost}
        else:
            allocation = split_cost(cost, interested, event.injection_point)
        for device_id, units in allocation.items():
            account = self.account(device_id)
            account.backbone_units += units
            if device_id != event.injection_point:
                account.shared_units_received += units
        logger.debug(f"Billed {event.event_id}: {allocation}")
        return allocation

    # --- Totals ---

    @property
    def backbone_units(self) -> int:
        return sum(a.backbone_units for a in self.accounts.values())

    @property
    def adhoc_units(self) -> int:
        return sum(a.adhoc_units for a in self.accounts.values())

    @property
    def total_units(self) -> int:
        return self.backbone_units + self.adhoc_units

    @property
    def energy_spent(self) -> float:
        return sum(a.energy_spent for a in self.accounts.values())


__all__ = ["CostModel", "DeviceLedger", "split_cost", "CostLedger"]
