#!/usr/bin/env python3
"""Regenerate golden files under fixtures/ from the current implementation.

Run from the repo root after intentional rendering changes:

    python scripts/build_goldens.py

Goldens are reviewed diffs, not derived truth: tests compare against the
committed files, so unintended rendering drift fails CI.
"""

from __future__ import annotations

import json
from pathlib import Path

from deskagent.action_space import parse_action
from deskagent.diff_engine import render_verbal, tree_diff
from deskagent.history import Step, dump_trajectory
from deskagent.model_client import ScriptedModelClient, fingerprint_messages
from deskagent.page_model import (
    AXNode,
    AXSnapshot,
    Rect,
    Viewport,
    render_full,
    render_viewport,
)
from deskagent.sim_env import SimSession, load_sites, load_tasks

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"


def write(path: Path, text: str) -> None:
    path.write_text(text if text.endswith("\n") else text + "\n")
    print(f"wrote {path}")


def catalog_goldens(sites) -> None:
    session = SimSession(sites["catalog"])
    session.step(parse_action("ACTION: click(4)"))  # portal -> home
    home = session.observe()
    write(FIXTURES / "catalog_home.ax.json", home.to_json())
    write(FIXTURES / "catalog_home.txt", render_viewport(home))

    session.step(parse_action("ACTION: click(5)"))  # home -> hardware
    session.step(parse_action("ACTION: click(4)"))  # hardware -> sales laptop
    item = session.observe()
    write(FIXTURES / "catalog_item_viewport.txt", render_viewport(item))
    write(FIXTURES / "catalog_item_full.txt", render_full(item))


def _node(id, role, name="", text="", y=0, children=(), editable=False):
    return AXNode(id=id, role=role, name=name, text=text,
                  bbox=Rect(40, y, 600, 40), children=list(children),
                  editable=editable)


def diff_goldens() -> None:
    viewport = Viewport(0, 0, 1280, 720)
    before = AXSnapshot(
        url="https://app.example/list",
        title="Items",
        root=_node(1, "document", "Items", y=0, children=[
            _node(2, "region", "main", y=40, children=[
                _node(3, "heading", "Items", y=80),
                _node(7, "text", "status", "3 items", y=120),
                _node(4, "row", "Alpha", y=160),
                _node(5, "row", "Beta", y=200),
                _node(6, "row", "Gamma", y=240),
                _node(8, "button", "Refresh", y=280),
                _node(9, "textbox", "Filter", "", y=320, editable=True),
            ]),
        ]),
        viewport=viewport,
        seq=0,
    )
    after = AXSnapshot(
        url="https://app.example/list?page=2",
        title="Items",
        root=_node(1, "document", "Items", y=0, children=[
            _node(2, "region", "main", y=40, children=[
                _node(3, "heading", "Items", y=80),
                _node(7, "text", "status", "4 items", y=120),
                _node(5, "row", "Beta", y=160),
                _node(4, "row", "Alpha", y=200),
                _node(6, "row", "Gamma renamed", y=240),
                _node(9, "textbox", "Filter", "alp", y=320, editable=True,
                      ),
                _node(42, "button", "Submit", y=360),
            ]),
        ]),
        viewport=viewport,
        seq=1,
    )
    # drop Refresh (8); focus the filter box
    filter_box = after.nodes()[-2]
    filter_box.focused = True

    write(FIXTURES / "diff_before.ax.json", before.to_json())
    write(FIXTURES / "diff_after.ax.json", after.to_json())
    write(FIXTURES / "diff_golden.txt", render_verbal(tree_diff(before, after)))


def trajectory_golden(sites) -> None:
    """A 20-step form-filling session on a catalog item page, as Step records.

    The page is long (ten elements, some below the fold) while each edit
    touches one or two of them, which is the regime history compression is
    built for.
    """
    session = SimSession(sites["catalog"])
    session.step(parse_action(
        'ACTION: navigate("https://catalog.example/item_sales_laptop")'))
    actions = [
        'ACTION: type_text(6, "2")',
        "ACTION: click(7)",
        "ACTION: click(8)",
        "ACTION: scroll_into(9)",
        'ACTION: type_text(9, "Deliver to desk 14.")',
        "ACTION: click(7)",
        "ACTION: click(7)",
        'ACTION: type_text(6, "3")',
        "ACTION: scroll_into(6)",
        'ACTION: type_text(6, "2")',
        "ACTION: click(8)",
        "ACTION: click(8)",
        "ACTION: scroll_into(10)",
        'ACTION: type_text(9, "Deliver to desk 15.")',
        "ACTION: scroll_into(6)",
        'ACTION: type_text(6, "4")',
        "ACTION: click(7)",
        "ACTION: click(7)",
        'ACTION: type_text(6, "2")',
        "ACTION: scroll_into(9)",
    ]
    steps = []
    prev = session.observe()
    for i, line in enumerate(actions):
        action = parse_action(line)
        snapshot = session.observe()
        diff = ("(no changes)" if i == 0
                else render_verbal(tree_diff(prev, snapshot)))
        steps.append(Step(
            index=i,
            thought=f"Filling in the laptop order form, step {i}.",
            action=action,
            observation_full=render_full(snapshot),
            diff_from_prev=render_full(snapshot) if i == 0 else diff,
        ))
        prev = snapshot
        session.step(action)
    write(FIXTURES / "trajectory_20.ndjson", dump_trajectory(steps))


class _RecordingClient:
    """Wraps a client, remembering fingerprint -> completions."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.script: dict[str, list[str]] = {}

    def complete(self, messages, samples=1, temperature=0.0):
        out = self.inner.complete(messages, samples, temperature)
        self.script.setdefault(fingerprint_messages(messages), []).extend(out)
        return out


def scripted_model_fixture(sites, tasks) -> None:
    from deskagent.agent_core import ScaffoldConfig, run_task
    from deskagent.coverage_eval import SolutionPolicy
    from deskagent.history import ContextBudget
    from deskagent.model_client import CallableModelClient
    from deskagent.sim_env import make_session

    spec = next(t for t in tasks if t.task_id == "catalog-order-laptop")
    recorder = _RecordingClient(
        CallableModelClient(SolutionPolicy(spec, follow_blind=True)))
    run = run_task(spec.instruction, make_session(spec, sites), None,
                   ScaffoldConfig(n_samples=1, max_steps=20,
                                  budget=ContextBudget(30000)),
                   recorder, task_id=spec.task_id)
    assert run.status == "success", run.status
    write(FIXTURES / "scripted_model.json",
          json.dumps(recorder.script, indent=2, sort_keys=True))


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    sites = load_sites(ROOT)
    tasks = load_tasks(ROOT)
    catalog_goldens(sites)
    diff_goldens()
    trajectory_golden(sites)
    scripted_model_fixture(sites, tasks)


if __name__ == "__main__":
    main()
