"""
Injection Point scoring and election.

A device's score is a weighted sum of five terms in [0, 1]:

    power      battery level
    dwell      how long the device is expected to stay, normalised by a horizon
    cluster    local clustering coefficient in the ad-hoc graph
    load       1 / (1 + active protocol duties)
    equipment  scenario-supplied equipment score

Only alive, backbone-capable devices are scored.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Mapping, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field, model_validator

from sim_core.devices import Device
from sim_core.topology import AdHocTopology, Clique

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 600.0


class NotEligible(Exception):
    """Dead or not backbone-capable devices cannot be scored."""


class NoEligibleDevice(Exception):
    """No member of the clique can reach the backbone."""


class ScoreWeights(BaseModel):
    w_power: float = Field(default=0.3, ge=0, le=1)
    w_dwell: float = Field(default=0.25, ge=0, le=1)
    w_cluster: float = Field(default=0.2, ge=0, le=1)
    w_load: float = Field(default=0.15, ge=0, le=1)
    w_equipment: float = Field(default=0.1, ge=0, le=1)

    @model_validator(mode="after")
    def _sum_to_one(self):
        total = self.as_array().sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")
        return self

    @classmethod
    def uniform(cls) -> "ScoreWeights":
        return cls(w_power=0.2, w_dwell=0.2, w_cluster=0.2, w_load=0.2, w_equipment=0.2)

    def as_array(self) -> np.ndarray:
        return np.array([self.w_power, self.w_dwell, self.w_cluster, self.w_load, self.w_equipment])


@dataclass(frozen=True)
class DeviceScore:
    device: int
    power_term: float
    dwell_term: float
    cluster_term: float
    load_term: float
    equipment_term: float
    total: float

    @property
    def terms(self) -> np.ndarray:
        return np.array([self.power_term, self.dwell_term, self.cluster_term, self.load_term, self.equipment_term])


def is_eligible(device: Device) -> bool:
    return device.alive and device.backbone_capable


def dwell_term(device: Device, now: float, horizon: float) -> float:
    if device.expected_departure is None:
        return 1.0
    return float(min(1.0, max(0.0, (device.expected_departure - now) / horizon)))


def score_device(
    device: Device,
    clique: Clique,
    topology: AdHocTopology,
    weights: ScoreWeights,
    horizon: float = DEFAULT_HORIZON,
    now: float = 0.0,
) -> DeviceScore:
    """
    Score one clique member as an Injection Point candidate.

    Raises:
        NotEligible: the device is dead or cannot use the backbone.
        ValueError: the device is not a member of `clique`.
    """
    if device.id not in clique:
        raise ValueError(f"Device {device.id} is not in clique {clique.clique_id}")
    if not is_eligible(device):
        raise NotEligible(f"Device {device.id} is dead or not backbone-capable")
    if horizon <= 0:
        raise ValueError(f"horizon must be positive, got {horizon}")

    cluster = float(nx.clustering(topology.graph, device.id)) if device.id in topology.graph else 0.0
    terms = np.array(
        [
            device.battery,
            dwell_term(device, now, horizon),
            cluster,
            1.0 / (1.0 + device.load),
            device.equipment_score,
        ]
    )
    total = float(terms @ weights.as_array())
    return DeviceScore(device.id, *(float(t) for t in terms), total=total)


def score_clique(
    clique: Clique,
    devices: Mapping[int, Device],
    topology: AdHocTopology,
    weights: ScoreWeights,
    horizon: float = DEFAULT_HORIZON,
    now: float = 0.0,
) -> List[DeviceScore]:
    """Scores of every eligible member, in id order."""
    return [
        score_device(devices[m], clique, topology, weights, horizon, now)
        for m in sorted(clique.members)
        if is_eligible(devices[m])
    ]


def best_score(scores: Iterable[DeviceScore]) -> Optional[DeviceScore]:
    """Highest total; the lowest device id wins a tie."""
    best = None
    for score in scores:
        if best is None or score.total > best.total or (score.total == best.total and score.device < best.device):
            best = score
    return best


def elect_injection_point(
    clique: Clique,
    devices: Mapping[int, Device],
    topology: AdHocTopology,
    weights: ScoreWeights,
    horizon: float = DEFAULT_HORIZON,
    now: float = 0.0,
) -> int:
    """
    Pick the eligible member with the highest score and install it as the
    clique's injection point.

    Raises:
        NoEligibleDevice: nobody in the clique is alive and backbone-capable.
    """
    winner = best_score(score_clique(clique, devices, topology, weights, horizon, now))
    if winner is None:
        raise NoEligibleDevice(f"Clique {clique.clique_id} has no backbone-capable member")
    clique.injection_point = winner.device
    logger.info(f"Clique {clique.clique_id}: elected {winner.device} (score {winner.total:.3f})")
    return winner.device


def election_messages(clique: Clique) -> int:
    """Probe plus reply for every member other than the coordinator."""
    return 2 * (len(clique) - 1)


__all__ = [
    "DEFAULT_HORIZON",
    "NotEligible",
    "NoEligibleDevice",
    "ScoreWeights",
    "DeviceScore",
    "is_eligible",
    "dwell_term",
    "score_device",
    "score_clique",
    "best_score",
    "elect_injection_point",
    "election_messages",
]
