"""
Per-run metrics: the one-row summary table and the per-tick time series.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Union

import numpy as np
import pandas as pd

from consistency.replicas import ReplicaStore, age_of
from consistency.requirements import ConsistencyRequirement
from cost_metrics.graph import GraphMetrics
from cost_metrics.ledger import CostLedger

logger = logging.getLogger(__name__)

KIND_PREFIX = "inj_"


@dataclass
class RunMetrics:
    scenario: str
    mode: str
    seed: int
    duration: float
    backbone_msg_cost: int
    adhoc_msg_cost: int
    total_cost: int = 0
    backbone_cost: int = 0
    adhoc_cost: int = 0
    backbone_messages: int = 0
    adhoc_messages: int = 0
    baseline_backbone_cost: Optional[int] = None
    baseline_adhoc_coverage: Optional[float] = None
    mean_staleness: Optional[float] = None
    coverage: float = 1.0
    requirements: int = 0
    satisfied: int = 0
    characteristic_path_length: Optional[float] = None
    global_efficiency: Optional[float] = None
    hybrid_global_efficiency: Optional[float] = None
    disconnected_fraction: Optional[float] = None
    energy_spent: float = 0.0
    stale_pushes: int = 0
    elections: int = 0
    handovers: int = 0
    injections_by_kind: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage out of range: {self.coverage}")
        if self.global_efficiency is not None and not 0.0 <= self.global_efficiency <= 1.0:
            raise ValueError(f"global_efficiency out of range: {self.global_efficiency}")

    def to_row(self) -> Dict[str, object]:
        """Flat mapping; injection counts become one `inj_<Kind>` column each."""
        row = asdict(self)
        kinds = row.pop("injections_by_kind")
        for kind in sorted(kinds):
            row[f"{KIND_PREFIX}{kind}"] = kinds[kind]
        return row


def coverage(requirements: Iterable[ConsistencyRequirement], replicas: ReplicaStore) -> float:
    """Share of requirements whose seeker holds some version of the item; 1.0 when there are none."""
    requirements = list(requirements)
    if not requirements:
        return 1.0
    held = sum(1 for r in requirements if replicas.get(r.seeker, r.item_id) is not None)
    return held / len(requirements)


class MetricsCollector:
    """Per-tick staleness samples and time-series rows."""

    def __init__(self):
        self.ages: List[float] = []
        self.rows: List[Dict[str, object]] = []

    def sample_ages(
        self, requirements: Iterable[ConsistencyRequirement], replicas: ReplicaStore, now: float
    ) -> Optional[float]:
        """Record the age of every sought replica at `now`; returns their mean."""
        ages = []
        for requirement in requirements:
            replica = replicas.get(requirement.seeker, requirement.item_id)
            if replica is not None:
                ages.append(age_of(replica, now))
        self.ages.extend(ages)
        return float(np.mean(ages)) if ages else None

    def record(self, **row) -> None:
        self.rows.append(row)

    @property
    def mean_staleness(self) -> Optional[float]:
        # ticks are evenly spaced, so the plain mean is the time-weighted one
        return float(np.mean(self.ages)) if self.ages else None

    def series(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows)


def summarize(
    *,
    scenario: str,
    mode: str,
    seed: int,
    duration: float,
    ledger: CostLedger,
    message_counts: Mapping[str, int],
    requirements: Iterable[ConsistencyRequirement],
    replicas: ReplicaStore,
    collector: MetricsCollector,
    injections_by_kind: Mapping[str, int],
    graph: Optional[GraphMetrics] = None,
    hybrid: Optional[GraphMetrics] = None,
    elections: int = 0,
    handovers: int = 0,
) -> RunMetrics:
    """
    Fold a finished run into one RunMetrics row.

    Args:
        message_counts: {"backbone": n, "adhoc": m} as sent over the run
        requirements: requirements declared by the end of the run
    """
    requirements = list(requirements)
    satisfied = sum(1 for r in requirements if replicas.get(r.seeker, r.item_id) is not None)
    metrics = RunMetrics(
        scenario=scenario,
        mode=mode,
        seed=seed,
        duration=duration,
        backbone_msg_cost=ledger.model.backbone_msg_cost,
        adhoc_msg_cost=ledger.model.adhoc_msg_cost,
        total_cost=ledger.total_units,
        backbone_cost=ledger.backbone_units,
        adhoc_cost=ledger.adhoc_units,
        backbone_messages=message_counts.get("backbone", 0),
        adhoc_messages=message_counts.get("adhoc", 0),
        mean_staleness=collector.mean_staleness,
        coverage=coverage(requirements, replicas),
        requirements=len(requirements),
        satisfied=satisfied,
        energy_spent=ledger.energy_spent,
        stale_pushes=replicas.stale_pushes,
        elections=elections,
        handovers=handovers,
        injections_by_kind=dict(injections_by_kind),
    )
    if graph is not None:
        metrics.characteristic_path_length = graph.characteristic_path_length
        metrics.global_efficiency = graph.global_efficiency
        metrics.disconnected_fraction = graph.disconnected_fraction
    if hybrid is not None:
        metrics.hybrid_global_efficiency = hybrid.global_efficiency
    return metrics


# --- Files ---


def write_metrics(metrics: RunMetrics, path: Union[str, Path]) -> None:
    pd.DataFrame([metrics.to_row()]).to_csv(path, index=False)
    logger.info(f"Wrote metrics to {path}")


def read_metrics(path: Union[str, Path]) -> Dict[str, object]:
    """The single metrics row as a dict; empty cells come back as None."""
    row = pd.read_csv(path).iloc[0].to_dict()
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}


def write_series(series: pd.DataFrame, path: Union[str, Path]) -> None:
    """Per-tick series as CSV, or parquet when the path ends in .parquet."""
    if str(path).endswith(".parquet"):
        series.to_parquet(path, engine="pyarrow", index=False)
    else:
        series.to_csv(path, index=False)
    logger.info(f"Wrote {len(series)} time-series rows to {path}")


__all__ = [
    "KIND_PREFIX",
    "RunMetrics",
    "coverage",
    "MetricsCollector",
    "summarize",
    "write_metrics",
    "read_metrics",
    "write_series",
]
