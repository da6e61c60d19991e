"""Deterministic simulated web environment for browserless agent runs.

A SiteSpec is an immutable state machine: pages of accessibility nodes
plus transition rules mapping (page, action, target) to effects. A
SimSession holds the mutable per-run state (current page, form fields,
mutated node trees, viewport scroll) so identical action sequences always
replay to identical snapshots.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from deskagent.action_space import Action, parse_action
from deskagent.behavior_logger import BehaviorEvent
from deskagent.page_model import AXNode, AXSnapshot, Viewport, render_full

VIEWPORT_WIDTH = 1280
VIEWPORT_HEIGHT = 720

NOOP_NOTE = "no-op: no matching transition"

TASK_CATEGORIES = frozenset({
    "dashboard", "form", "knowledge", "list-filter", "list-sort",
    "service-catalog",
})

SELECTABLE_ROLES = frozenset({"combobox", "listbox"})

_EFFECT_OPS = frozenset({"goto", "set_text", "append_element", "set_field"})


class UnknownElement(KeyError):
    """Action targeted an id absent from the current page."""


class SpecError(ValueError):
    """Site or task definition violates the schema."""


@dataclass
class Transition:
    page: str  # page_id or "*"
    action: str
    target: int | None = None
    argument: str | None = None  # exact match when present
    effects: list[dict[str, Any]] = field(default_factory=list)
    note: str = ""

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Transition:
        return cls(
            page=d.get("page", "*"),
            action=d["action"],
            target=d.get("target"),
            argument=d.get("argument"),
            effects=d.get("effects", []),
            note=d.get("note", ""),
        )


@dataclass
class SiteSpec:
    site_id: str
    start_page: str
    pages: dict[str, dict[str, Any]]  # page_id -> {"title": str, "root": node dict}
    transitions: list[Transition]

    def __post_init__(self) -> None:
        if self.start_page not in self.pages:
            raise SpecError(f"start page {self.start_page!r} not defined")
        ids_per_page: dict[str, set[int]] = {}
        for page_id, page in self.pages.items():
            root = AXNode.from_dict(page["root"])
            snapshot = AXSnapshot(url=self.page_url(page_id),
                                  title=page.get("title", ""), root=root,
                                  viewport=default_viewport())
            ids_per_page[page_id] = set(snapshot.node_map())  # raises on dupes
        for t in self.transitions:
            if t.page != "*" and t.page not in self.pages:
                raise SpecError(f"transition references unknown page {t.page!r}")
            if t.target is not None and t.page != "*":
                if t.target not in ids_per_page[t.page]:
                    raise SpecError(
                        f"transition targets missing element {t.target} "
                        f"on page {t.page!r}")
            for eff in t.effects:
                if eff.get("op") not in _EFFECT_OPS:
                    raise SpecError(f"unknown effect op {eff.get('op')!r}")
                if eff["op"] == "goto" and eff["page"] not in self.pages:
                    raise SpecError(f"goto unknown page {eff['page']!r}")

    def page_url(self, page_id: str) -> str:
        return f"https://{self.site_id}.example/{page_id}"

    def page_for_url(self, url: str) -> str | None:
        for page_id in self.pages:
            if self.page_url(page_id) == url:
                return page_id
        return None

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SiteSpec:
        return cls(
            site_id=d["site_id"],
            start_page=d["start_page"],
            pages=d["pages"],
            transitions=[Transition.from_dict(t) for t in d.get("transitions", [])],
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> SiteSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class TaskSpec:
    task_id: str
    site_id: str
    category: str
    instruction: str
    success: list[dict[str, Any]]  # conjunction of checks
    solution: list[str] = field(default_factory=list)  # action-grammar lines
    start_page: str | None = None

    def __post_init__(self) -> None:
        if self.category not in TASK_CATEGORIES:
            raise SpecError(f"unknown task category {self.category!r}")
        if not self.success:
            raise SpecError("task needs at least one success check")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TaskSpec:
        return cls(
            task_id=d["task_id"],
            site_id=d["site_id"],
            category=d["category"],
            instruction=d["instruction"],
            success=d["success"],
            solution=d.get("solution", []),
            start_page=d.get("start_page"),
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> TaskSpec:
        return cls.from_dict(json.loads(Path(path).read_text()))


def default_viewport() -> Viewport:
    return Viewport(scroll_x=0, scroll_y=0,
                    width=VIEWPORT_WIDTH, height=VIEWPORT_HEIGHT)


class SimSession:
    """Mutable run state over an immutable SiteSpec."""

    def __init__(self, site: SiteSpec, task: TaskSpec | None = None) -> None:
        if task is not None and task.site_id != site.site_id:
            raise SpecError(
                f"task {task.task_id} targets site {task.site_id!r}, "
                f"not {site.site_id!r}")
        self.site = site
        self.task = task
        self.reset()

    def reset(self) -> AXSnapshot:
        # Node trees are copied out of the spec so step() never touches it.
        self._trees = {
            page_id: AXNode.from_dict(page["root"])
            for page_id, page in self.site.pages.items()
        }
        self._page = (self.task.start_page if self.task and self.task.start_page
                      else self.site.start_page)
        self.fields: dict[str, str] = {}
        self._history: list[str] = []
        self._scroll_y = 0
        self._seq = 0
        self.answer: str | None = None
        return self.observe()

    # -- observation ------------------------------------------------------

    @property
    def page_id(self) -> str:
        return self._page

    @property
    def url(self) -> str:
        return self.site.page_url(self._page)

    def observe(self) -> AXSnapshot:
        return AXSnapshot(
            url=self.url,
            title=self.site.pages[self._page].get("title", ""),
            root=self._trees[self._page],
            viewport=Viewport(scroll_x=0, scroll_y=self._scroll_y,
                              width=VIEWPORT_WIDTH, height=VIEWPORT_HEIGHT),
            seq=self._seq,
        )

    def _node(self, target_id: int, page: str | None = None) -> AXNode:
        tree = self._trees[page or self._page]
        for node in tree.walk():
            if node.id == target_id:
                return node
        raise UnknownElement(f"no element [{target_id}] on page {self._page!r}")

    # -- stepping ---------------------------------------------------------

    def step(self, action: Action) -> tuple[AXSnapshot, str]:
        self._seq += 1
        handler = {
            "click": self._do_click,
            "type_text": self._do_type,
            "select_option": self._do_select,
            "scroll_into": self._do_scroll,
            "navigate": self._do_navigate,
            "go_back": self._do_go_back,
        }.get(action.kind)
        if handler is None:
            raise ValueError(f"not an environment action: {action.kind}")
        note = handler(action)
        return self.observe(), note

    def _goto(self, page_id: str, push_history: bool = True) -> None:
        if push_history:
            self._history.append(self._page)
        self._page = page_id
        self._scroll_y = 0

    def _match_transition(self, action: Action) -> Transition | None:
        for t in self.site.transitions:
            if t.action != action.kind:
                continue
            if t.page not in ("*", self._page):
                continue
            if t.target is not None and t.target != action.target_id:
                continue
            if t.argument is not None and t.argument != action.argument:
                continue
            return t
        return None

    def _apply_effects(self, t: Transition) -> str:
        for eff in t.effects:
            op = eff["op"]
            if op == "goto":
                self._goto(eff["page"])
            elif op == "set_text":
                self._node(eff["id"], eff.get("page")).text = eff["text"]
            elif op == "append_element":
                parent = self._node(eff["parent"], eff.get("page"))
                parent.children.append(AXNode.from_dict(eff["node"]))
            elif op == "set_field":
                self.fields[eff["field"]] = eff["value"]
        return t.note or "ok"

    def _do_click(self, action: Action) -> str:
        node = self._node(action.target_id)
        t = self._match_transition(action)
        if t is not None:
            return self._apply_effects(t)
        if node.role == "checkbox":
            node.text = "" if node.text == "checked" else "checked"
            self.fields[node.name] = node.text
            return f"toggled '{node.name}'"
        return NOOP_NOTE

    def _do_type(self, action: Action) -> str:
        node = self._node(action.target_id)
        if not node.editable:
            return "no-op: element not editable"
        node.text = action.argument or ""
        self.fields[node.name] = node.text
        t = self._match_transition(action)
        if t is not None:
            return self._apply_effects(t)
        return f"typed into '{node.name}'"

    def _do_select(self, action: Action) -> str:
        node = self._node(action.target_id)
        if node.role not in SELECTABLE_ROLES:
            return NOOP_NOTE
        node.text = action.argument or ""
        self.fields[node.name] = node.text
        t = self._match_transition(action)
        if t is not None:
            return self._apply_effects(t)
        return f"selected '{node.text}' in '{node.name}'"

    def _do_scroll(self, action: Action) -> str:
        node = self._node(action.target_id)
        # Center the target vertically; clamp to the top of the page.
        self._scroll_y = max(
            0, node.bbox.y + node.bbox.height // 2 - VIEWPORT_HEIGHT // 2)
        return f"scrolled to [{node.id}]"

    def _do_navigate(self, action: Action) -> str:
        url = action.argument or ""
        page_id = self.site.page_for_url(url)
        if page_id is None and url in self.site.pages:
            page_id = url  # bare page ids are accepted too
        if page_id is None:
            return NOOP_NOTE
        self._goto(page_id)
        return f"navigated to {self.site.page_url(page_id)}"

    def _do_go_back(self, action: Action) -> str:
        if not self._history:
            return "no-op: history empty"
        self._page = self._history.pop()
        self._scroll_y = 0
        return f"navigated back to {self.url}"

    # -- success ----------------------------------------------------------

    def check_success(self, answer: str | None = None) -> bool:
        if self.task is None:
            return False
        if answer is None:
            answer = self.answer
        return all(self._check(c, answer) for c in self.task.success)

    def _check(self, check: dict[str, Any], answer: str | None) -> bool:
        kind = check["kind"]
        if kind == "page_is":
            return self._page == check["page"]
        if kind == "field_equals":
            return self.fields.get(check["field"]) == check["value"]
        if kind == "element_text":
            try:
                node = self._node(check["id"], check.get("page"))
            except UnknownElement:
                return False
            return node.text == check["value"]
        if kind == "answer_contains":
            return answer is not None and check["value"].lower() in answer.lower()
        raise SpecError(f"unknown success check {kind!r}")

    # AgentEnv protocol name
    def success(self, answer: str | None = None) -> bool:
        return self.check_success(answer)

    def fork(self) -> SimSession:
        """Independent session continuing from the current state."""
        twin = SimSession.__new__(SimSession)
        twin.site = self.site
        twin.task = self.task
        twin._trees = {pid: AXNode.from_dict(t.to_dict())
                       for pid, t in self._trees.items()}
        twin._page = self._page
        twin.fields = dict(self.fields)
        twin._history = list(self._history)
        twin._scroll_y = self._scroll_y
        twin._seq = self._seq
        twin.answer = self.answer
        return twin


# -- spec discovery -------------------------------------------------------

def data_root(start: str | Path | None = None) -> Path:
    """Directory holding sites/ and tasks/; DESKAGENT_DATA overrides."""
    env = os.environ.get("DESKAGENT_DATA")
    if env:
        return Path(env)
    here = Path(start) if start else Path(__file__).resolve()
    for candidate in (here, *here.parents):
        if (candidate / "sites").is_dir() and (candidate / "tasks").is_dir():
            return candidate
    return Path.cwd()


def load_sites(root: str | Path | None = None) -> dict[str, SiteSpec]:
    base = Path(root) if root else data_root()
    sites = {}
    for path in sorted((base / "sites").glob("*.json")):
        spec = SiteSpec.from_json_file(path)
        sites[spec.site_id] = spec
    return sites


def load_tasks(root: str | Path | None = None) -> list[TaskSpec]:
    base = Path(root) if root else data_root()
    return [TaskSpec.from_json_file(p)
            for p in sorted((base / "tasks").glob("*.json"))]


def make_session(task: TaskSpec,
                 sites: dict[str, SiteSpec] | None = None) -> SimSession:
    sites = sites or load_sites()
    if task.site_id not in sites:
        raise SpecError(f"no site spec for {task.site_id!r}")
    return SimSession(sites[task.site_id], task)


# -- solution replay ------------------------------------------------------

def snapshot_digest(snapshot: AXSnapshot) -> str:
    return hashlib.sha256(render_full(snapshot).encode()).hexdigest()[:12]


@dataclass
class ReplayLog:
    task_id: str
    events: list[BehaviorEvent]
    succeeded: bool
    answer: str | None
    notes: list[str]


def record_replay(
    task: TaskSpec,
    sites: dict[str, SiteSpec] | None = None,
    session_id: str = "",
    tab_id: str = "tab-1",
    start_ts: int = 1_700_000_000_000,
    step_ms: int = 4_000,
) -> ReplayLog:
    """Replay a task's shipped solution, emitting behavior events.

    This is how fixture trajectories for the ETL and coverage experiments
    are produced: every event is grounded in an actual simulated
    interaction, not hand-written.
    """
    session = make_session(task, sites)
    session_id = session_id or f"replay-{task.task_id}"
    ts = start_ts
    events: list[BehaviorEvent] = []
    notes: list[str] = []

    def emit(kind: str, element: dict[str, Any] | None = None,
             payload: str | None = None) -> None:
        nonlocal ts
        snap = session.observe()
        events.append(BehaviorEvent(
            ts=ts, session_id=session_id, tab_id=tab_id,
            site=f"{session.site.site_id}.example", url=session.url,
            kind=kind, element=element, payload=payload,
            snapshot_digest=snapshot_digest(snap),
        ))
        ts += step_ms

    emit("page_view", payload=session.observe().title)
    answer: str | None = None
    for line in task.solution:
        action = parse_action(line)
        if action.kind == "answer":
            answer = action.argument or ""
            session.answer = answer
            continue
        element = None
        if action.target_id is not None:
            node = session._node(action.target_id)
            element = {"id": node.id, "role": node.role, "name": node.name}
        page_before = session.page_id
        _, note = session.step(action)
        notes.append(note)
        if action.kind == "click":
            emit("click", element=element)
        elif action.kind in ("type_text", "select_option"):
            emit("input", element=element, payload=action.argument)
        if session.page_id != page_before:
            emit("page_view", payload=session.observe().title)

    return ReplayLog(
        task_id=task.task_id,
        events=events,
        succeeded=session.check_success(answer),
        answer=answer,
        notes=notes,
    )
