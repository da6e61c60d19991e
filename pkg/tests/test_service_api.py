import itertools
import json
import time
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from deskagent.action_space import Action, format_action
from deskagent.behavior_logger import BehaviorEvent, BehaviorLog, ConsentState
from deskagent.model_client import CallableModelClient
from deskagent.service_api import create_app
from deskagent.workspace import Proposal, TaskItem, Workspace


def fresh_ws():
    return Workspace(clock=itertools.count(1).__next__)


def solution_client_factory(tasks):
    """Each run gets a scripted player that walks the task's solution."""
    by_instruction = {t.instruction: t.solution for t in tasks}

    def factory():
        cursor = {"i": 0, "lines": None}

        def policy(messages):
            prompt = messages[-1]["content"]
            if cursor["lines"] is None:
                for instruction, solution in by_instruction.items():
                    if f"Task: {instruction}" in prompt:
                        cursor["lines"] = solution
                        break
                else:
                    return 'ACTION: answer("unknown task")'
            i = min(cursor["i"], len(cursor["lines"]) - 1)
            cursor["i"] += 1
            return cursor["lines"][i]

        return CallableModelClient(policy)

    return factory


@pytest.fixture()
def app_bundle(sites, fixture_tasks):
    ws = fresh_ws()
    app = create_app(ws, sites, fixture_tasks,
                     client_factory=solution_client_factory(fixture_tasks))
    return ws, TestClient(app)


def wait_for(client, run_id, want, timeout=10.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/agent/runs/{run_id}").json()
        if body["status"] in want:
            return body
        time.sleep(0.01)
    raise AssertionError(f"run never reached {want}: {body['status']}")


# -- workspace artifact routes ---------------------------------------------------

def test_task_crud_round_trip(app_bundle):
    ws, client = app_bundle
    created = client.post("/tasks", json={"title": "Order laptops",
                                          "priority": "high"})
    assert created.status_code == 200
    ref = created.json()["id"]
    assert created.json()["provenance"] == "user"

    listed = client.get("/tasks").json()
    assert [t["id"] for t in listed] == [ref]

    patched = client.patch(f"/tasks/{ref}", json={"status": "in_progress"})
    assert patched.status_code == 200
    assert patched.json()["status"] == "in_progress"
    assert ws.get(ref).status == "in_progress"  # same store, same object


def test_http_mirrors_library_state(app_bundle, sites, fixture_tasks):
    ws_http, client = app_bundle
    ws_lib = fresh_ws()

    client.post("/tasks", json={"title": "A", "priority": "low"})
    client.post("/wiki", json={"title": "Guide", "body": "text"})
    client.post("/timeline", json={"summary": "work", "tag": "research"})
    client.patch("/tasks/task-1", json={"notes": "started"})

    from deskagent.workspace import TimelineEntry, WikiPage
    ws_lib.upsert_user(TaskItem(title="A", priority="low"))
    ws_lib.upsert_user(WikiPage(title="Guide", body="text"))
    ws_lib.upsert_user(TimelineEntry(summary="work", tag="research"))
    item = ws_lib.get("task-1")
    item.notes = "started"
    ws_lib.upsert_user(item)

    assert ws_http.deep_equal(ws_lib)


def test_artifact_validation_maps_to_400(app_bundle):
    _, client = app_bundle
    assert client.post("/tasks", json={"title": ""}).status_code == 400
    assert client.post("/tasks", json={"title": "x",
                                       "status": "paused"}).status_code == 400
    assert client.post("/wiki", json={"title": "x",
                                      "format": "pdf"}).status_code == 400


def test_unknown_and_protected_fields_rejected(app_bundle):
    _, client = app_bundle
    assert client.post("/tasks", json={"title": "x",
                                       "sparkle": True}).status_code == 400
    ref = client.post("/tasks", json={"title": "x"}).json()["id"]
    for field in ("id", "provenance", "updated_ts"):
        resp = client.patch(f"/tasks/{ref}", json={field: "hijack"})
        assert resp.status_code == 400, field


def test_patch_missing_or_mismatched_ref_is_404(app_bundle):
    _, client = app_bundle
    assert client.patch("/tasks/task-404", json={"notes": "x"}).status_code == 404
    ref = client.post("/wiki", json={"title": "w"}).json()["id"]
    assert client.patch(f"/tasks/{ref}", json={"notes": "x"}).status_code == 404


# -- proposals --------------------------------------------------------------------

def file_proposal(ws, title="Agent suggestion"):
    return ws.propose(Proposal(
        target="new", artifact_type="task",
        change={"artifact": {"title": title}}, rationale="from a run"))


def test_proposal_listing_and_filters(app_bundle):
    ws, client = app_bundle
    pid = file_proposal(ws)
    assert [p["id"] for p in client.get("/proposals").json()] == [pid]
    assert client.get("/proposals", params={"status": "pending"}).json()
    assert client.get("/proposals", params={"status": "approved"}).json() == []
    assert client.get("/proposals", params={"status": "maybe"}).status_code == 400


def test_proposal_decision_approve(app_bundle):
    ws, client = app_bundle
    pid = file_proposal(ws)
    resp = client.post(f"/proposals/{pid}/decision", json={"approve": True})
    assert resp.status_code == 200
    body = resp.json()
    assert body["proposal"]["status"] == "approved"
    assert body["artifact"]["title"] == "Agent suggestion"
    assert body["artifact"]["provenance"] == "agent"
    assert client.get("/tasks").json()[0]["id"] == body["artifact"]["id"]


def test_proposal_decision_reject_and_errors(app_bundle):
    ws, client = app_bundle
    pid = file_proposal(ws)
    resp = client.post(f"/proposals/{pid}/decision", json={"approve": False})
    assert resp.status_code == 200
    assert resp.json()["artifact"] is None
    assert client.get("/tasks").json() == []

    again = client.post(f"/proposals/{pid}/decision", json={"approve": True})
    assert again.status_code == 409
    missing = client.post("/proposals/prop-404/decision", json={"approve": True})
    assert missing.status_code == 404
    malformed = client.post(f"/proposals/{pid}/decision", json={"approve": "yes"})
    assert malformed.status_code == 400


def test_concurrent_decisions_exactly_one_wins(sites, fixture_tasks):
    for _ in range(10):
        ws = fresh_ws()
        app = create_app(ws, sites, fixture_tasks)
        pid = file_proposal(ws)
        with TestClient(app) as client:
            with ThreadPoolExecutor(max_workers=2) as pool:
                codes = sorted(
                    f.result().status_code
                    for f in [
                        pool.submit(client.post, f"/proposals/{pid}/decision",
                                    json={"approve": True}),
                        pool.submit(client.post, f"/proposals/{pid}/decision",
                                    json={"approve": False}),
                    ]
                )
        assert codes == [200, 409]
        # the store holds exactly one decided proposal, consistent with the winner
        (p,) = ws.proposals()
        assert p.status in ("approved", "rejected")
        assert len(ws.tasks()) == (1 if p.status == "approved" else 0)


# -- search -------------------------------------------------------------------------

def test_search_endpoint(app_bundle):
    ws, client = app_bundle
    client.post("/wiki", json={"title": "Laptop ordering guide",
                               "body": "catalog walk-through"})
    hits = client.get("/search", params={"q": "laptop ordering"}).json()
    assert hits and hits[0]["title"] == "Laptop ordering guide"
    assert hits[0]["score"] > 0
    assert client.get("/search", params={"q": "x", "k": 0}).status_code == 400
    assert client.get("/search").status_code == 422  # q is required


# -- agent runs ------------------------------------------------------------------------

def test_agent_run_lifecycle(app_bundle):
    _, client = app_bundle
    launched = client.post("/agent/runs", json={
        "task_id": "catalog-hardware-count", "n_samples": 1})
    assert launched.status_code == 200
    run_id = launched.json()["run_id"]

    body = wait_for(client, run_id, {"success", "failure", "error"})
    assert body["status"] == "success"
    assert "4" in body["answer"]
    assert body["steps"]
    assert body["task_id"] == "catalog-hardware-count"

    listed = client.get("/agent/runs").json()
    assert any(r["run_id"] == run_id and r["status"] == "success" for r in listed)


def test_agent_run_validation_errors(app_bundle, sites, fixture_tasks):
    _, client = app_bundle
    assert client.post("/agent/runs", json={}).status_code == 400
    assert client.post("/agent/runs",
                       json={"task_id": "no-such-task"}).status_code == 404
    assert client.post("/agent/runs", json={
        "task_id": "catalog-hardware-count", "n_samples": 9,
    }).status_code == 400
    assert client.get("/agent/runs/nope").status_code == 404

    modelless = TestClient(create_app(fresh_ws(), sites, fixture_tasks))
    resp = modelless.post("/agent/runs", json={"task_id": "catalog-hardware-count"})
    assert resp.status_code == 400


def test_choice_pause_and_resume(sites, fixture_tasks):
    options = ["3 items", "4 hardware items are listed."]

    def factory():
        def policy(messages):
            prompt = messages[-1]["content"]
            if "User selected option" in prompt:
                start = prompt.index("User selected option")
                picked = prompt[start:].split(": ", 1)[1].splitlines()[0]
                return f'ACTION: answer({json.dumps(picked)})'
            return format_action(Action(
                "answer", argument="CHOICES: " + json.dumps(options)))

        return CallableModelClient(policy)

    client = TestClient(create_app(fresh_ws(), sites, fixture_tasks,
                                   client_factory=factory))
    run_id = client.post("/agent/runs", json={
        "task_id": "catalog-hardware-count", "n_samples": 1}).json()["run_id"]

    body = wait_for(client, run_id, {"awaiting_choice"})
    assert body["options"] == options

    # guardrails while paused
    assert client.post(f"/agent/runs/{run_id}/choice",
                       json={"index": "one"}).status_code == 400
    assert client.post(f"/agent/runs/{run_id}/choice",
                       json={"index": 7}).status_code == 400

    resumed = client.post(f"/agent/runs/{run_id}/choice", json={"index": 1})
    assert resumed.status_code == 200

    body = wait_for(client, run_id, {"success", "failure", "error"})
    assert body["status"] == "success"
    assert body["answer"] == "4 hardware items are listed."
    assert body["options"] is None


def test_choice_submission_requires_paused_run(app_bundle):
    _, client = app_bundle
    run_id = client.post("/agent/runs", json={
        "task_id": "catalog-hardware-count", "n_samples": 1}).json()["run_id"]
    wait_for(client, run_id, {"success", "failure", "error"})
    resp = client.post(f"/agent/runs/{run_id}/choice", json={"index": 0})
    assert resp.status_code == 409


# -- ETL ---------------------------------------------------------------------------------

def inline_events():
    out = []
    for i, (kind, name, payload) in enumerate([
        ("page_view", None, "KB Home"),
        ("click", "Search", None),
        ("click", "Article", None),
        ("input", "Query", "printer setup"),
    ]):
        out.append(BehaviorEvent(
            ts=i * 1000, session_id="s-inline", tab_id="t", site="kb.example",
            url="https://kb.example/home", kind=kind,
            element={"role": "link", "name": name, "id": 3} if name else None,
            payload=payload, snapshot_digest=f"d{i}",
        ).to_dict())
    return out


def test_etl_inline_events(app_bundle):
    ws, client = app_bundle
    resp = client.post("/etl/run", json={"events": inline_events()})
    assert resp.status_code == 200
    report = resp.json()
    assert report["session_id"] == "inline"
    assert len(report["proposal_ids"]) == len(report["proposals"]) > 0
    assert ws.proposals("pending")


def test_etl_from_session_logs(sites, fixture_tasks, tmp_path):
    logs = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True)
    for d in inline_events():
        logs.record(BehaviorEvent.from_dict(d), consent)

    ws = fresh_ws()
    client = TestClient(create_app(ws, sites, fixture_tasks, logs_dir=tmp_path))
    resp = client.post("/etl/run", json={"session_id": "s-inline"})
    assert resp.status_code == 200
    assert resp.json()["session_id"] == "s-inline"

    assert client.post("/etl/run", json={"session_id": "ghost"}).status_code == 404
    assert client.post("/etl/run", json={}).status_code == 400
    assert client.post("/etl/run", json={
        "events": [], "format": "interpretive-dance"}).status_code == 400


# -- static UI -----------------------------------------------------------------------------

def test_ui_mount_serves_static_bundle(sites, fixture_tasks, tmp_path):
    (tmp_path / "index.html").write_text("<html><body>console</body></html>")
    client = TestClient(create_app(fresh_ws(), sites, fixture_tasks,
                                   ui_dir=tmp_path))
    resp = client.get("/ui/")
    assert resp.status_code == 200
    assert "console" in resp.text


def test_ui_absent_when_unconfigured(app_bundle):
    _, client = app_bundle
    assert client.get("/ui/").status_code == 404
