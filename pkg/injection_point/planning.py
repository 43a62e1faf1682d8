"""
Several Injection Points at once: one per partition, shared by the interest
groups inside it.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional

from injection_point.scoring import DEFAULT_HORIZON, ScoreWeights, best_score, is_eligible, score_clique
from sim_core.devices import Device
from sim_core.topology import AdHocTopology, Clique

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InterestGroup:
    group_id: str
    clique_id: int
    members: FrozenSet[int]
    item_ids: FrozenSet[str]

    def __post_init__(self):
        if not self.members or not self.item_ids:
            raise ValueError(f"Interest group {self.group_id} is empty")


@dataclass
class MultiInjectionPlan:
    assignments: Dict[int, int] = field(default_factory=dict)
    groups: List[InterestGroup] = field(default_factory=list)
    uncovered: List[int] = field(default_factory=list)

    def injection_point_of(self, device_id: int) -> Optional[int]:
        for group in self.groups:
            if device_id in group.members:
                return self.assignments.get(group.clique_id)
        return None

    def groups_of(self, clique_id: int) -> List[InterestGroup]:
        return [g for g in self.groups if g.clique_id == clique_id]


def plan_multi_injection(
    cliques: Iterable[Clique],
    interest_declarations: Mapping[int, Iterable[str]],
    devices: Mapping[int, Device],
    topology: AdHocTopology,
    weights: Optional[ScoreWeights] = None,
    horizon: float = DEFAULT_HORIZON,
    now: float = 0.0,
) -> MultiInjectionPlan:
    """
    Partition interested devices by clique and group them per item.

    Every clique with at least one interested member gets one injection point
    serving all its groups: the current one when it is still eligible, else the
    best scored member. Cliques without an eligible member are reported in
    `uncovered`. The cliques themselves are left untouched.

    Args:
        interest_declarations: device id -> item ids it seeks

    Returns:
        MultiInjectionPlan with clique_id -> injection point assignments.
    """
    weights = weights or ScoreWeights()
    plan = MultiInjectionPlan()

    for clique in sorted(cliques, key=lambda c: c.clique_id):
        by_item: Dict[str, set] = {}
        for member in clique.members:
            for item_id in interest_declarations.get(member, ()):
                by_item.setdefault(item_id, set()).add(member)
        if not by_item:
            continue

        for item_id in sorted(by_item):
            plan.groups.append(
                InterestGroup(
                    group_id=f"{clique.clique_id}/{item_id}",
                    clique_id=clique.clique_id,
                    members=frozenset(by_item[item_id]),
                    item_ids=frozenset({item_id}),
                )
            )

        current = clique.injection_point
        if current is not None and is_eligible(devices[current]):
            plan.assignments[clique.clique_id] = current
            continue
        best = best_score(score_clique(clique, devices, topology, weights, horizon, now))
        if best is None:
            plan.uncovered.append(clique.clique_id)
        else:
            plan.assignments[clique.clique_id] = best.device

    if plan.uncovered:
        logger.debug(f"Uncovered cliques: {plan.uncovered}")
    return plan


__all__ = ["InterestGroup", "MultiInjectionPlan", "plan_multi_injection"]
