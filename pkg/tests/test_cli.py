import json

import pytest
from click.testing import CliRunner

from deskagent.behavior_logger import BehaviorEvent, BehaviorLog, ConsentState
from deskagent.cli import main
from deskagent.workspace import Workspace

from conftest import FIXTURES


@pytest.fixture()
def runner():
    return CliRunner()


def test_run_prints_task_run_json(runner):
    result = runner.invoke(main, ["run", "--task", "catalog-hardware-count"])
    assert result.exit_code == 0, result.output
    run = json.loads(result.output)
    assert run["status"] == "success"
    assert "4" in run["answer"]
    assert run["task_id"] == "catalog-hardware-count"
    assert run["steps"]


def test_run_output_is_reproducible(runner):
    args = ["run", "--task", "dash-error-budget", "--n", "3"]
    first = runner.invoke(main, args)
    second = runner.invoke(main, args)
    assert first.exit_code == second.exit_code == 0
    assert first.output == second.output


def test_run_option_validation(runner):
    result = runner.invoke(main, ["run", "--task", "catalog-hardware-count",
                                  "--n", "7"])
    assert result.exit_code == 2
    assert "--n must be between 1 and 5" in result.output

    result = runner.invoke(main, ["run", "--task", "no-such-task"])
    assert result.exit_code == 2
    assert "unknown task id" in result.output


def test_run_failure_exits_nonzero(runner):
    # One step is only enough for the opening workspace search.
    result = runner.invoke(main, ["run", "--task", "catalog-order-laptop",
                                  "--max-steps", "1"])
    assert result.exit_code == 1
    assert json.loads(result.output)["status"] == "budget_exhausted"


def test_run_full_modes(runner):
    result = runner.invoke(main, ["run", "--task", "catalog-hardware-count",
                                  "--obs", "full", "--hist", "full"])
    assert result.exit_code == 0
    assert json.loads(result.output)["status"] == "success"


def test_axdiff_matches_golden(runner):
    result = runner.invoke(main, [
        "axdiff",
        str(FIXTURES / "diff_before.ax.json"),
        str(FIXTURES / "diff_after.ax.json"),
    ])
    assert result.exit_code == 0
    golden = (FIXTURES / "diff_golden.txt").read_text()
    assert result.output.rstrip("\n") == golden.rstrip("\n")


def test_axdiff_rejects_malformed_snapshot(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nope": true}')
    result = runner.invoke(main, [
        "axdiff", str(bad), str(FIXTURES / "diff_after.ax.json")])
    assert result.exit_code == 2
    assert "malformed snapshot" in result.output


def log_session(tmp_path, session_id="s-cli"):
    log = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True)
    rows = [
        ("page_view", None, "KB Home"),
        ("click", "Search", None),
        ("input", "Query", "printer setup"),
        ("click", "Article", None),
    ]
    for i, (kind, name, payload) in enumerate(rows):
        log.record(BehaviorEvent(
            ts=i * 1000, session_id=session_id, tab_id="t", site="kb.example",
            url="https://kb.example/home", kind=kind,
            element={"role": "link", "name": name, "id": 3} if name else None,
            payload=payload, snapshot_digest=f"d{i}",
        ), consent)


def test_etl_run_prints_report(runner, tmp_path):
    log_session(tmp_path)
    result = runner.invoke(main, ["etl", "run", "--session", "s-cli",
                                  "--logs", str(tmp_path)])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["session_id"] == "s-cli"
    assert len(report["segments"]) == 1
    assert report["proposals"]  # drafted in the report
    assert report["proposal_ids"] == []  # but filed nowhere without a store


def test_etl_run_files_proposals_into_store(runner, tmp_path):
    log_session(tmp_path)
    store = tmp_path / "store"
    result = runner.invoke(main, [
        "etl", "run", "--session", "s-cli", "--logs", str(tmp_path),
        "--store", str(store), "--format", "script",
    ])
    assert result.exit_code == 0, result.output
    report = json.loads(result.output)
    assert report["proposal_ids"]
    reloaded = Workspace.load(store)
    pending = reloaded.proposals("pending")
    assert [p.id for p in pending] == report["proposal_ids"]
    assert reloaded.wiki_pages() == []  # drafts wait for human approval


def test_etl_run_unknown_session(runner, tmp_path):
    result = runner.invoke(main, ["etl", "run", "--session", "ghost",
                                  "--logs", str(tmp_path)])
    assert result.exit_code == 2
    assert "no session" in result.output


def test_eval_coverage_writes_reports(runner, tmp_path):
    result = runner.invoke(main, ["eval", "coverage", "--orderings", "1",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "wrote" in result.output
    report = json.loads((tmp_path / "coverage.json").read_text())
    assert set(report["matrix"]) == {"trajectory", "script", "insight"}
    csv_lines = (tmp_path / "coverage.csv").read_text().splitlines()
    assert csv_lines[0] == "coverage_level,insight,script,trajectory"
    assert len(csv_lines) == 8  # header + k=0..6


def test_all_commands_registered():
    assert set(main.commands) == {"run", "axdiff", "etl", "serve", "eval"}
