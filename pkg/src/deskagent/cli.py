"""Command-line entry points: run tasks, diff snapshots, serve, evaluate."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from deskagent.agent_core import ScaffoldConfig, run_task
from deskagent.behavior_logger import BehaviorLog
from deskagent.coverage_eval import SolutionPolicy, run_coverage, write_report
from deskagent.diff_engine import render_verbal, tree_diff
from deskagent.etl_pipeline import PipelineConfig, run_pipeline, session_run_lock
from deskagent.history import ContextBudget
from deskagent.model_client import (
    CallableModelClient,
    ScriptedModelClient,
    default_model_client,
)
from deskagent.page_model import AXSnapshot
from deskagent.service_api import create_app
from deskagent.sim_env import data_root, load_sites, load_tasks, make_session
from deskagent.workspace import Workspace


@click.group()
def main() -> None:
    """Agent scaffold, behavior ETL, and shared-workspace tooling."""


def _load_fixtures(data_dir: str | None):
    root = Path(data_dir) if data_dir else data_root()
    return load_sites(root), load_tasks(root)


def _open_store(store: str | None) -> Workspace:
    if store is None:
        return Workspace()
    return Workspace.load(store)


@main.command("run")
@click.option("--task", "task_id", required=True, help="Fixture task id.")
@click.option("--n", "n_samples", default=1, show_default=True,
              help="Samples per step for action voting (max 5).")
@click.option("--obs", type=click.Choice(["lazy", "full"]), default="lazy",
              show_default=True)
@click.option("--hist", type=click.Choice(["diff", "full"]), default="diff",
              show_default=True)
@click.option("--max-steps", default=30, show_default=True)
@click.option("--mock", "mock_path", type=click.Path(exists=True),
              help="Scripted model fixture (JSON). Default: the shipped "
                   "solution-following policy.")
@click.option("--store", type=click.Path(), help="Workspace store directory.")
@click.option("--data", "data_dir", type=click.Path(exists=True),
              help="Directory containing sites/ and tasks/.")
def run_cmd(task_id, n_samples, obs, hist, max_steps, mock_path, store,
            data_dir) -> None:
    """Execute one simulated task and print the TaskRun as JSON."""
    if not 1 <= n_samples <= 5:
        raise click.UsageError("--n must be between 1 and 5")
    sites, tasks = _load_fixtures(data_dir)
    spec = next((t for t in tasks if t.task_id == task_id), None)
    if spec is None:
        raise click.UsageError(f"unknown task id {task_id!r}")

    config = ScaffoldConfig(
        n_samples=n_samples,
        max_steps=max_steps,
        observation_mode=obs,
        history_mode="diff_history" if hist == "diff" else "full_history",
        budget=ContextBudget(30000),
    )
    if mock_path:
        client = ScriptedModelClient.from_file(mock_path)
    else:
        client = CallableModelClient(SolutionPolicy(spec, follow_blind=True))
    session = make_session(spec, sites)
    workspace = _open_store(store)

    run = run_task(spec.instruction, session, workspace, config, client,
                   task_id=task_id)
    click.echo(run.to_json())
    sys.exit(0 if run.status == "success" else 1)


@main.command("axdiff")
@click.argument("before", type=click.Path(exists=True))
@click.argument("after", type=click.Path(exists=True))
def axdiff_cmd(before, after) -> None:
    """Print the verbal diff between two snapshot JSON files."""
    try:
        a = AXSnapshot.from_json(Path(before).read_text())
        b = AXSnapshot.from_json(Path(after).read_text())
    except (KeyError, ValueError) as exc:
        raise click.UsageError(f"malformed snapshot: {exc}")
    click.echo(render_verbal(tree_diff(a, b)))


@main.group("etl")
def etl_group() -> None:
    """Behavior-to-knowledge pipeline commands."""


@etl_group.command("run")
@click.option("--session", "session_id", required=True)
@click.option("--logs", "logs_dir", default="logs", show_default=True,
              type=click.Path())
@click.option("--timeout-min", default=30, show_default=True,
              help="Inactivity gap that splits segments.")
@click.option("--format", "fmt",
              type=click.Choice(["trajectory", "script", "insight"]),
              help="Draft a wiki page of this format for every segment.")
@click.option("--agentic", is_flag=True,
              help="Use the configured model for summarize/distill/route.")
@click.option("--store", type=click.Path(), help="Workspace store directory.")
def etl_run_cmd(session_id, logs_dir, timeout_min, fmt, agentic, store) -> None:
    """Run the pipeline over one logged session and print the report."""
    log = BehaviorLog(logs_dir)
    if session_id not in log.sessions():
        raise click.UsageError(f"no session {session_id!r} under {logs_dir}")
    events = log.read_session(session_id)
    config = PipelineConfig(timeout_ms=timeout_min * 60_000, format=fmt,
                            agentic=agentic)
    try:
        client = default_model_client() if agentic else None
    except ValueError as exc:
        raise click.UsageError(str(exc))
    workspace = _open_store(store) if store else None
    with session_run_lock(logs_dir, session_id):
        report = run_pipeline(events, config, client=client,
                              workspace=workspace, session_id=session_id)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", type=click.Path(), required=True)
@click.option("--logs", "logs_dir", default="logs", show_default=True)
@click.option("--mock", "mock_path", type=click.Path(exists=True),
              help="Scripted model fixture backing /agent/runs.")
@click.option("--ui", "ui_dir", type=click.Path(),
              help="Static UI bundle directory (served at /ui).")
@click.option("--data", "data_dir", type=click.Path(exists=True))
def serve_cmd(port, host, store, logs_dir, mock_path, ui_dir, data_dir) -> None:
    """Serve the workspace/agent HTTP API."""
    import uvicorn

    sites, tasks = _load_fixtures(data_dir)
    workspace = Workspace.load(store)
    if mock_path:
        def client_factory():
            return ScriptedModelClient.from_file(mock_path)
    elif os.environ.get("AGENT_MODEL_URL"):
        def client_factory():
            return default_model_client()
    else:
        client_factory = None  # /agent/runs will answer 400
    default_ui = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(
        workspace,
        sites=sites,
        tasks=tasks,
        client_factory=client_factory,
        logs_dir=logs_dir,
        ui_dir=ui_dir or (default_ui if default_ui.is_dir() else None),
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.group("eval")
def eval_group() -> None:
    """Evaluation harnesses."""


@eval_group.command("coverage")
@click.option("--seed", default=7, show_default=True)
@click.option("--orderings", default=6, show_default=True)
@click.option("--p-follow", default=0.6, show_default=True,
              help="Chance the degraded policy still follows the solution.")
@click.option("--out", "out_dir", default="reports", show_default=True,
              type=click.Path())
@click.option("--data", "data_dir", type=click.Path(exists=True))
def coverage_cmd(seed, orderings, p_follow, out_dir, data_dir) -> None:
    """Sweep knowledge coverage levels and write the report matrix."""
    sites, tasks = _load_fixtures(data_dir)
    report = run_coverage(tasks, sites, seed=seed, n_orderings=orderings,
                          p_follow=p_follow)
    json_path, csv_path = write_report(report, out_dir)
    click.echo(f"wrote {json_path} and {csv_path}")
    for fmt, row in sorted(report.matrix().items()):
        cells = " ".join(f"k={k}:{v:.3f}" for k, v in sorted(row.items(),
                                                             key=lambda kv: int(kv[0])))
        click.echo(f"{fmt:10s} {cells}")


if __name__ == "__main__":
    main()
