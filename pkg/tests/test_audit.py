import pytest

from conftest import SCENARIO_DIR, clique_scenario
from harness.audit import audit_trace
from harness.runner import simulate
from harness.scenario import load_scenario
from sim_core.trace import Trace


@pytest.fixture(scope="module")
def learning_run():
    return simulate(load_scenario(SCENARIO_DIR / "learning_groups.json"))


def tampered(trace: Trace, drop) -> Trace:
    """Round-trip through text with the first line matching `drop` removed."""
    lines = trace.dumps().splitlines()
    index = next(i for i, line in enumerate(lines) if drop(line))
    return Trace.loads("\n".join(lines[:index] + lines[index + 1 :]))


def test_untouched_run_passes(learning_run):
    report = audit_trace(Trace.loads(learning_run.trace.dumps()), learning_run.metrics)
    assert report.passed
    assert bool(report)


def test_audit_accepts_a_plain_row(learning_run):
    assert audit_trace(learning_run.trace, learning_run.metrics.to_row()).passed


def test_missing_message_is_caught(learning_run):
    def attributed_backbone(line):
        return "\tMSG\t" in line and "hop=backbone" in line and "inj=-" not in line

    trace = tampered(learning_run.trace, attributed_backbone)
    report = audit_trace(trace, learning_run.metrics)
    assert not report.passed
    assert any(m.startswith("message count") for m in report.mismatches)
    assert any(m.startswith("conservation") for m in report.mismatches)


def test_inflated_cost_is_caught():
    result = simulate(clique_scenario(3))
    row = result.metrics.to_row()
    row["backbone_cost"] += 100
    row["total_cost"] += 100
    report = audit_trace(result.trace, row)
    assert [m.split(":")[0] for m in report.mismatches] == ["ledger", "ledger"]


def test_wrong_coverage_is_caught():
    result = simulate(clique_scenario(3))
    row = result.metrics.to_row()
    row["coverage"] = 0.5
    assert any(m.startswith("coverage") for m in audit_trace(result.trace, row).mismatches)


def test_injection_counts_are_checked():
    result = simulate(clique_scenario(3))
    row = result.metrics.to_row()
    row["inj_BackboneRequested"] = 2
    assert any(m.startswith("injections_by_kind") for m in audit_trace(result.trace, row).mismatches)


def test_clique_local_item_on_a_backbone_hop():
    text = (
        "0.000000\tTICK\tepoch=0\talive=2\tcliques=1\n"
        "1.000000\tMSG\tid=1\tinj=-\tkind=Forward\thop=backbone\tfrom=0\tto=backbone\titem=board\tver=1\tscope=clique_local\n"
    )
    row = {
        "backbone_msg_cost": 100,
        "adhoc_msg_cost": 1,
        "backbone_messages": 1,
        "adhoc_messages": 0,
        "backbone_cost": 100,
        "adhoc_cost": 0,
        "total_cost": 100,
        "requirements": 0,
        "coverage": 1.0,
    }
    report = audit_trace(Trace.loads(text), row)
    assert len(report.mismatches) == 1
    assert report.mismatches[0].startswith("privacy")


def test_out_of_order_records():
    text = "2.000000\tTICK\tepoch=0\n1.000000\tTICK\tepoch=0\n"
    report = audit_trace(Trace.loads(text), {"requirements": 0, "coverage": 1.0})
    assert [m.split(":")[0] for m in report.mismatches] == ["trace-order"]
