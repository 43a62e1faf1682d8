"""
Baselines: the same scenario replayed without injections.

pure_backbone: every interested, backbone-capable device fetches for itself.
pure_adhoc: no backbone at all; only gossip inside cliques.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from consistency.replicas import age_of

logger = logging.getLogger(__name__)


@dataclass
class BackboneBaseline:
    cost: int
    backbone_messages: int
    fetches: int
    unserved: List[int] = field(default_factory=list)


@dataclass
class AdhocBaseline:
    coverage: float
    unsatisfied: List[Tuple[int, str]] = field(default_factory=list)
    mean_staleness: Optional[float] = None


def baseline_pure_backbone(scenario) -> BackboneBaseline:
    """Cost of individual fetches (2 backbone messages each); seekers without a backbone link are unserved."""
    from harness.runner import simulate
    from harness.scenario import Mode

    result = simulate(scenario, Mode.PURE_BACKBONE)
    report = BackboneBaseline(
        cost=result.metrics.backbone_cost,
        backbone_messages=result.metrics.backbone_messages,
        fetches=result.metrics.injections_by_kind.get("EntityDriven", 0),
        unserved=sorted(result.world.unserved),
    )
    logger.info(f"Pure-backbone baseline of {scenario.name}: {report.fetches} fetches, cost {report.cost}")
    return report


def baseline_pure_adhoc(scenario) -> AdhocBaseline:
    """
    Coverage without a backbone. Requirements never satisfied are listed;
    mean_staleness covers the replicas that did arrive, at the end of the run.
    """
    from harness.runner import simulate
    from harness.scenario import Mode

    result = simulate(scenario, Mode.PURE_ADHOC)
    world = result.world
    unsatisfied = []
    ages = []
    for requirement in world.declared:
        replica = world.replicas.get(requirement.seeker, requirement.item_id)
        if replica is None:
            unsatisfied.append(requirement.key)
        else:
            ages.append(age_of(replica, world.sim.now))
    report = AdhocBaseline(
        coverage=result.metrics.coverage,
        unsatisfied=sorted(unsatisfied),
        mean_staleness=sum(ages) / len(ages) if ages else None,
    )
    logger.info(f"Pure ad-hoc baseline of {scenario.name}: coverage {report.coverage:.3f}")
    return report


__all__ = ["BackboneBaseline", "AdhocBaseline", "baseline_pure_backbone", "baseline_pure_adhoc"]
