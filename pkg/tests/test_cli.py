import pytest

from conftest import SCENARIO_DIR
from harness import cli
from sim_core.errors import InvariantViolation


def run_minimal(tmp_path, *extra):
    trace, metrics = tmp_path / "out.trace", tmp_path / "out.csv"
    argv = ["run", "--scenario", str(SCENARIO_DIR / "minimal.json"), "--trace", str(trace), "--metrics", str(metrics)]
    return cli.main(argv + list(extra)), trace, metrics


def test_run_then_audit(tmp_path, capsys):
    status, trace, metrics = run_minimal(tmp_path, "--no-baselines")
    assert status == cli.EXIT_OK
    assert "minimal [injection]" in capsys.readouterr().out

    assert cli.main(["audit", "--trace", str(trace), "--metrics", str(metrics)]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip().endswith("PASS")


def test_seed_and_mode_overrides(tmp_path, capsys):
    status, _, _ = run_minimal(tmp_path, "--seed", "9", "--mode", "pure_adhoc")
    assert status == cli.EXIT_OK
    assert "[pure_adhoc]" in capsys.readouterr().out


def test_seed_out_of_range(tmp_path):
    with pytest.raises(SystemExit):
        run_minimal(tmp_path, "--seed", str(2**64))


def test_bad_scenario_exits_with_1(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"name": "broken", "seed": 1}', encoding="utf-8")
    assert cli.main(["run", "--scenario", str(path)]) == cli.EXIT_SCENARIO
    assert "scenario error" in capsys.readouterr().err

    assert cli.main(["run", "--scenario", str(tmp_path / "missing.json")]) == cli.EXIT_SCENARIO


def test_tampered_artifacts_fail_the_audit(tmp_path, capsys):
    _, trace, metrics = run_minimal(tmp_path, "--no-baselines")
    forged = "10.000000\tMSG\tid=1\tinj=-\tkind=Forward\thop=backbone\tfrom=0\tto=backbone\titem=time\tver=1\n"
    trace.write_text(trace.read_text(encoding="utf-8") + forged, encoding="utf-8")
    capsys.readouterr()

    assert cli.main(["audit", "--trace", str(trace), "--metrics", str(metrics)]) == cli.EXIT_SCENARIO
    assert "FAIL" in capsys.readouterr().out


def test_invariant_violation_exits_with_2(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise InvariantViolation("privacy", "clique_local item on a backbone hop")

    monkeypatch.setattr(cli, "run", broken)
    status, _, _ = run_minimal(tmp_path)
    assert status == cli.EXIT_INVARIANT


def test_batch_needs_scenarios(tmp_path):
    assert cli.main(["batch", "--dir", str(tmp_path), "--out", str(tmp_path / "out")]) == cli.EXIT_SCENARIO


def test_run_and_audit_one_batch_entry(tmp_path):
    name, status, problems = cli.run_and_audit(SCENARIO_DIR / "minimal.json", tmp_path)
    assert (name, status, problems) == ("minimal.json", cli.EXIT_OK, [])
    assert (tmp_path / "minimal.trace").exists()
    assert (tmp_path / "minimal.metrics.csv").exists()
