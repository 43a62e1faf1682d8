"""
Trace audit: recompute a run's numbers from its trace alone and compare
them with the metrics row.

Reads nothing but the two artifacts, so it also works on files written by
an earlier run.
"""

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Set, Tuple, Union

from cost_metrics.metrics import KIND_PREFIX, RunMetrics
from sim_core.trace import BACKBONE, Trace, TraceKind

logger = logging.getLogger(__name__)

TOLERANCE = 1e-9


@dataclass
class AuditReport:
    mismatches: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.mismatches

    def __bool__(self) -> bool:
        return self.passed

    def fail(self, message: str) -> None:
        logger.error(f"Audit: {message}")
        self.mismatches.append(message)


def _number(row: Mapping[str, object], key: str, default: float = 0.0) -> float:
    value = row.get(key)
    return default if value is None else float(value)


def _check_order(trace: Trace, report: AuditReport) -> None:
    last = None
    for index, record in enumerate(trace):
        if last is not None and record.time < last:
            report.fail(f"trace-order: record {index} at {record.time} after {last}")
        last = record.time


def _check_messages(trace: Trace, row: Mapping[str, object], report: AuditReport) -> Dict[str, Counter]:
    """Per-hop totals, privacy, and per-injection message counts."""
    hops = Counter()
    per_injection: Dict[str, Counter] = defaultdict(Counter)
    for record in trace.of_kind(TraceKind.MSG):
        hop = record.get("hop")
        hops[hop] += 1
        injection = record.get("inj")
        if injection is not None:
            per_injection[injection][hop] += 1
        if hop == BACKBONE and record.get("scope") == "clique_local" and record.get("ver") is not None:
            report.fail(f"privacy: clique_local item {record.get('item')} on a backbone hop at {record.time:.6f}")

    for hop, key in ((BACKBONE, "backbone_messages"), ("adhoc", "adhoc_messages")):
        if hops[hop] != _number(row, key):
            report.fail(f"message count: trace has {hops[hop]} {hop} messages, metrics {row.get(key)}")
    return per_injection


def _check_injections(
    trace: Trace, row: Mapping[str, object], per_injection: Dict[str, Counter], report: AuditReport
) -> int:
    """Per-injection conservation and kind counts; returns the billed backbone units."""
    unit = _number(row, "backbone_msg_cost")
    billed = 0
    finished: Set[str] = set()
    kinds = Counter()
    for record in trace.of_kind(TraceKind.INJECT):
        event_id = record.get("id")
        finished.add(event_id)
        kinds[record.get("kind")] += 1
        backbone = int(record.get("backbone", "0"))
        adhoc = int(record.get("adhoc", "0"))
        sent = per_injection.get(event_id, Counter())
        if sent[BACKBONE] != backbone or sent["adhoc"] != adhoc:
            report.fail(
                f"conservation: {event_id} reports {backbone}/{adhoc} backbone/ad-hoc messages, "
                f"trace holds {sent[BACKBONE]}/{sent['adhoc']}"
            )
        cost = int(backbone * unit)
        payers = [p for p in (record.get("payers") or "").split(",") if p]
        if cost and not payers and record.get("ip") is None:
            report.fail(f"conservation: {event_id} costs {cost} units and has nobody to bill")
        billed += cost

    for event_id, sent in sorted(per_injection.items()):
        if event_id not in finished and sent[BACKBONE]:
            report.fail(f"conservation: {event_id} sent {sent[BACKBONE]} backbone messages but never finished")

    for column, value in row.items():
        if not column.startswith(KIND_PREFIX):
            continue
        kind = column[len(KIND_PREFIX):]
        if kinds[kind] != _number(row, column):
            report.fail(f"injections_by_kind: trace has {kinds[kind]} {kind}, metrics {value}")
    return billed


def _check_costs(trace: Trace, row: Mapping[str, object], billed: int, report: AuditReport) -> None:
    backbone_unit = _number(row, "backbone_msg_cost")
    adhoc_unit = _number(row, "adhoc_msg_cost")
    messages = trace.of_kind(TraceKind.MSG)
    unattributed = sum(1 for r in messages if r.get("hop") == BACKBONE and r.get("inj") is None)
    adhoc = sum(1 for r in messages if r.get("hop") == "adhoc")

    backbone_cost = billed + unattributed * backbone_unit
    adhoc_cost = adhoc * adhoc_unit
    expected = {
        "backbone_cost": backbone_cost,
        "adhoc_cost": adhoc_cost,
        "total_cost": backbone_cost + adhoc_cost,
    }
    for key, value in expected.items():
        if abs(value - _number(row, key)) > TOLERANCE:
            report.fail(f"ledger: {key} recomputed as {value:g}, metrics {row.get(key)}")


def _check_coverage(trace: Trace, row: Mapping[str, object], report: AuditReport) -> None:
    declared: List[Tuple[str, str]] = []
    for record in trace.of_kind(TraceKind.DECLARE):
        declared.append((record.get("seeker"), record.get("item")))
    held = {(r.get("device"), r.get("item")) for r in trace.of_kind(TraceKind.INFECT)}

    if len(declared) != _number(row, "requirements"):
        report.fail(f"coverage: {len(declared)} requirements declared, metrics {row.get('requirements')}")
    coverage = sum(1 for key in declared if key in held) / len(declared) if declared else 1.0
    if abs(coverage - _number(row, "coverage")) > TOLERANCE:
        report.fail(f"coverage: recomputed {coverage:.6f}, metrics {row.get('coverage')}")


def audit_trace(trace: Trace, metrics: Union[RunMetrics, Mapping[str, object]]) -> AuditReport:
    """
    Independently recompute message counts, per-injection conservation,
    ledger totals, injection counts and coverage; check the privacy rule and
    time order. Every mismatch is listed.
    """
    row = metrics.to_row() if isinstance(metrics, RunMetrics) else dict(metrics)
    report = AuditReport()
    _check_order(trace, report)
    per_injection = _check_messages(trace, row, report)
    billed = _check_injections(trace, row, per_injection, report)
    _check_costs(trace, row, billed, report)
    _check_coverage(trace, row, report)
    if report.passed:
        logger.info(f"Audit passed: {len(trace)} records")
    return report


__all__ = ["AuditReport", "audit_trace"]
