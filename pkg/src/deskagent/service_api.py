"""HTTP shell over the workspace, ETL pipeline, and agent runner.

Every state change reachable here goes through the same library calls the
CLI uses; handlers only translate between JSON and those calls. Agent
runs are asynchronous jobs: launch, poll, and (when a run pauses on a
multiple-choice question) resume with a selection.
"""

from __future__ import annotations

import queue
import threading
import uuid
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Any, Callable

from fastapi import Body, FastAPI, HTTPException, Query
from fastapi.staticfiles import StaticFiles

from deskagent.agent_core import ScaffoldConfig, TaskRun, run_task
from deskagent.behavior_logger import BehaviorEvent, BehaviorLog
from deskagent.etl_pipeline import PipelineConfig, run_pipeline
from deskagent.history import ContextBudget
from deskagent.model_client import ModelClient
from deskagent.sim_env import SiteSpec, TaskSpec, make_session
from deskagent.workspace import (
    AlreadyDecided,
    TargetMissing,
    TaskItem,
    TimelineEntry,
    ValidationError,
    WikiPage,
    Workspace,
)

_ARTIFACT_TYPES = {"task": TaskItem, "wiki": WikiPage, "timeline": TimelineEntry}
_PROTECTED_FIELDS = {"id", "provenance", "updated_ts"}


class RunRecord:
    """One asynchronous agent run plus its choice-resume channel."""

    def __init__(self, run_id: str, task_id: str, run: TaskRun) -> None:
        self.run_id = run_id
        self.task_id = task_id
        self.run = run
        self.options: list[str] | None = None
        self.awaiting = False
        self.error: str | None = None
        self._choices: queue.Queue[int] = queue.Queue()
        self._lock = threading.Lock()

    @property
    def status(self) -> str:
        if self.error is not None:
            return "error"
        if self.awaiting:
            return "awaiting_choice"
        return self.run.status

    def wait_for_choice(self, options: list[str]) -> int:
        with self._lock:
            self.options = options
            self.awaiting = True
        try:
            return self._choices.get()
        finally:
            with self._lock:
                self.awaiting = False
                self.options = None

    def submit_choice(self, index: int) -> None:
        with self._lock:
            if not self.awaiting:
                raise AlreadyDecided("run is not awaiting a choice")
            opts = self.options or []
            if not 0 <= index < len(opts):
                raise ValidationError(
                    f"choice index {index} out of range 0..{len(opts) - 1}")
            self._choices.put(index)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "run_id": self.run_id,
            "task_id": self.task_id,
            "status": self.status,
            "instruction": self.run.instruction,
            "steps": [s.to_dict() for s in list(self.run.steps)],
            "answer": self.run.answer,
            "options": self.options,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


def _config_from(body: dict[str, Any]) -> ScaffoldConfig:
    kwargs: dict[str, Any] = {}
    if "n_samples" in body:
        kwargs["n_samples"] = int(body["n_samples"])
    if "max_steps" in body:
        kwargs["max_steps"] = int(body["max_steps"])
    if "observation_mode" in body:
        kwargs["observation_mode"] = body["observation_mode"]
    if "history_mode" in body:
        kwargs["history_mode"] = body["history_mode"]
    if "budget_tokens" in body:
        kwargs["budget"] = ContextBudget(int(body["budget_tokens"]))
    return ScaffoldConfig(**kwargs)


def _apply_patch(artifact, patch: dict[str, Any]):
    allowed = {f.name for f in dataclass_fields(artifact)} - _PROTECTED_FIELDS
    unknown = set(patch) - allowed
    if unknown:
        raise ValidationError(f"unknown fields: {sorted(unknown)}")
    for key, value in patch.items():
        setattr(artifact, key, value)
    return artifact


def create_app(
    workspace: Workspace,
    sites: dict[str, SiteSpec] | None = None,
    tasks: list[TaskSpec] | None = None,
    client_factory: Callable[[], ModelClient] | None = None,
    logs_dir: str | Path | None = None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="deskagent", docs_url=None, redoc_url=None)
    task_specs = {t.task_id: t for t in (tasks or [])}
    runs: dict[str, RunRecord] = {}
    runs_lock = threading.Lock()

    def _bad_request(exc: Exception) -> HTTPException:
        return HTTPException(status_code=400, detail=str(exc))

    # -- workspace artifacts ---------------------------------------------

    def _register_artifact_routes(name: str, artifact_type: str) -> None:
        cls = _ARTIFACT_TYPES[artifact_type]

        def list_items() -> list[dict[str, Any]]:
            bucket = {"task": workspace.tasks, "wiki": workspace.wiki_pages,
                      "timeline": workspace.timeline_entries}[artifact_type]
            return [a.to_dict() for a in bucket()]

        def create_item(body: dict[str, Any] = Body(...)) -> dict[str, Any]:
            try:
                artifact = _apply_patch(cls(), body)
                ref = workspace.upsert_user(artifact)
            except (ValidationError, TypeError) as exc:
                raise _bad_request(exc)
            return workspace.get(ref).to_dict()

        def patch_item(ref: str, body: dict[str, Any] = Body(...)) -> dict[str, Any]:
            artifact = workspace.get(ref)
            if artifact is None or not isinstance(artifact, cls):
                raise HTTPException(status_code=404, detail=f"no {name} {ref!r}")
            try:
                _apply_patch(artifact, body)
                workspace.upsert_user(artifact)
            except (ValidationError, TypeError) as exc:
                raise _bad_request(exc)
            return workspace.get(ref).to_dict()

        app.get(f"/{name}")(list_items)
        app.post(f"/{name}")(create_item)
        app.patch(f"/{name}/{{ref}}")(patch_item)

    _register_artifact_routes("tasks", "task")
    _register_artifact_routes("wiki", "wiki")
    _register_artifact_routes("timeline", "timeline")

    # -- proposals ---------------------------------------------------------

    @app.get("/proposals")
    def list_proposals(status: str | None = Query(default=None)) -> list[dict[str, Any]]:
        if status is not None and status not in ("pending", "approved", "rejected"):
            raise HTTPException(status_code=400, detail=f"unknown status {status!r}")
        return [p.to_dict() for p in workspace.proposals(status)]

    @app.post("/proposals/{proposal_id}/decision")
    def decide_proposal(proposal_id: str,
                        body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        if "approve" not in body or not isinstance(body["approve"], bool):
            raise HTTPException(status_code=400, detail="body needs approve: bool")
        if proposal_id not in {p.id for p in workspace.proposals()}:
            raise HTTPException(status_code=404, detail=f"no proposal {proposal_id!r}")
        try:
            artifact = workspace.decide(proposal_id, body["approve"])
        except AlreadyDecided as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except TargetMissing as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValidationError as exc:
            raise _bad_request(exc)
        proposal = next(p for p in workspace.proposals() if p.id == proposal_id)
        return {
            "proposal": proposal.to_dict(),
            "artifact": artifact.to_dict() if artifact is not None else None,
        }

    @app.get("/search")
    def search(q: str = Query(...), k: int = Query(default=5)) -> list[dict[str, Any]]:
        try:
            results = workspace.search(q, k=k)
        except ValueError as exc:
            raise _bad_request(exc)
        return [r.__dict__ for r in results]

    # -- agent runs --------------------------------------------------------

    @app.post("/agent/runs")
    def launch_run(body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        task_id = body.get("task_id")
        if not task_id:
            raise HTTPException(status_code=400, detail="body needs task_id")
        spec = task_specs.get(task_id)
        if spec is None:
            raise HTTPException(status_code=404, detail=f"no task {task_id!r}")
        if client_factory is None:
            raise HTTPException(status_code=400, detail="no model configured")
        try:
            config = _config_from(body)
            session = make_session(spec, sites)
        except (ValueError, KeyError) as exc:
            raise _bad_request(exc)
        instruction = body.get("instruction") or spec.instruction

        run_id = uuid.uuid4().hex[:12]
        record = RunRecord(run_id, task_id,
                           TaskRun(task_id=task_id, instruction=instruction))
        with runs_lock:
            runs[run_id] = record

        def worker() -> None:
            try:
                run_task(
                    instruction, session, workspace, config, client_factory(),
                    task_id=task_id, choice_handler=record.wait_for_choice,
                    live_run=record.run)
            except Exception as exc:  # surfaced via status
                record.error = str(exc)

        threading.Thread(target=worker, daemon=True).start()
        return {"run_id": run_id, "status": record.status}

    @app.get("/agent/runs")
    def list_runs() -> list[dict[str, Any]]:
        with runs_lock:
            return [
                {"run_id": r.run_id, "task_id": r.task_id, "status": r.status}
                for r in runs.values()
            ]

    @app.get("/agent/runs/{run_id}")
    def get_run(run_id: str) -> dict[str, Any]:
        record = runs.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id!r}")
        return record.to_dict()

    @app.post("/agent/runs/{run_id}/choice")
    def post_choice(run_id: str, body: dict[str, Any] = Body(...)) -> dict[str, Any]:
        record = runs.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"no run {run_id!r}")
        index = body.get("index")
        if not isinstance(index, int) or isinstance(index, bool):
            raise HTTPException(status_code=400, detail="body needs index: int")
        try:
            record.submit_choice(index)
        except AlreadyDecided as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValidationError as exc:
            raise _bad_request(exc)
        return {"run_id": run_id, "status": "resumed"}

    # -- ETL ---------------------------------------------------------------

    @app.post("/etl/run")
    def etl_run(body: dict[str, Any] = Body(default={})) -> dict[str, Any]:
        try:
            config = PipelineConfig(
                timeout_ms=int(body.get("timeout_min", 30)) * 60_000,
                format=body.get("format"),
                agentic=bool(body.get("agentic", False)),
            )
        except ValueError as exc:
            raise _bad_request(exc)

        if "events" in body:
            events = [BehaviorEvent.from_dict(d) for d in body["events"]]
            session_id = body.get("session_id", "inline")
        else:
            session_id = body.get("session_id")
            if not session_id:
                raise HTTPException(status_code=400,
                                    detail="body needs session_id or events")
            base = Path(body.get("logs_dir") or logs_dir or "logs")
            log = BehaviorLog(base)
            if session_id not in log.sessions():
                raise HTTPException(status_code=404,
                                    detail=f"no session {session_id!r}")
            events = log.read_session(session_id)

        client = client_factory() if (config.agentic and client_factory) else None
        report = run_pipeline(events, config, client=client,
                              workspace=workspace, session_id=session_id)
        return report.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
