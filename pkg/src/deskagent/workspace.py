"""Shared human/agent knowledge store: task board, wiki, timeline.

Users write directly; agents only ever file Proposals, which mutate
artifacts solely through an approval decision. Persistence is an
append-only operation log plus a digest-guarded snapshot, so every agent
write stays auditable.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

TAXONOMY = ("communication", "research", "reporting", "development",
            "administration", "other")
TASK_STATUSES = ("not_started", "in_progress", "completed")
PRIORITIES = ("low", "medium", "high")
KNOWLEDGE_FORMATS = ("trajectory", "script", "insight")

SNIPPET_LIMIT = 200


class ValidationError(ValueError):
    pass


class AlreadyDecided(RuntimeError):
    pass


class TargetMissing(LookupError):
    pass


class CorruptStore(RuntimeError):
    pass


@dataclass
class TaskItem:
    id: str = ""
    title: str = ""
    description: str = ""
    status: str = "not_started"
    priority: str = "medium"
    notes: str = ""
    provenance: str = "user"
    updated_ts: int = 0

    def validate(self) -> None:
        if not self.title:
            raise ValidationError("task title must not be empty")
        if self.status not in TASK_STATUSES:
            raise ValidationError(f"unknown task status {self.status!r}")
        if self.priority not in PRIORITIES:
            raise ValidationError(f"unknown priority {self.priority!r}")

    def search_text(self) -> str:
        return f"{self.title} {self.description} {self.notes}"

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TaskItem":
        return cls(**d)


@dataclass
class WikiPage:
    id: str = ""
    title: str = ""
    body: str = ""
    tags: list[str] = field(default_factory=list)
    format: str | None = None  # trajectory | script | insight | None (hand-written)
    source_segments: list[str] = field(default_factory=list)
    provenance: str = "user"
    updated_ts: int = 0

    def validate(self) -> None:
        if not self.title:
            raise ValidationError("wiki title must not be empty")
        if self.format is not None and self.format not in KNOWLEDGE_FORMATS:
            raise ValidationError(f"unknown knowledge format {self.format!r}")

    def search_text(self) -> str:
        return f"{self.title} {self.body} {' '.join(self.tags)}"

    def to_dict(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["tags"] = list(self.tags)
        d["source_segments"] = list(self.source_segments)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WikiPage":
        return cls(**d)


@dataclass
class TimelineEntry:
    id: str = ""
    date: str = ""  # YYYY-MM-DD
    start_ts: int = 0
    duration_ms: int = 0
    tag: str = "other"
    summary: str = ""
    details: str = ""
    provenance: str = "user"
    updated_ts: int = 0

    def validate(self) -> None:
        if self.duration_ms < 0:
            raise ValidationError("duration_ms must be >= 0")
        if self.tag not in TAXONOMY:
            raise ValidationError(f"unknown activity tag {self.tag!r}")

    def search_text(self) -> str:
        return f"{self.summary} {self.details} {self.tag}"

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TimelineEntry":
        return cls(**d)


Artifact = TaskItem | WikiPage | TimelineEntry

_TYPE_KEY = {TaskItem: "task", WikiPage: "wiki", TimelineEntry: "timeline"}
_TYPE_CLS = {"task": TaskItem, "wiki": WikiPage, "timeline": TimelineEntry}


@dataclass
class Proposal:
    id: str = ""
    target: str = "new"  # artifact id, or "new"
    artifact_type: str = "task"
    change: dict[str, Any] = field(default_factory=dict)  # {"set": {...}} or {"artifact": {...}}
    rationale: str = ""
    status: str = "pending"  # pending | approved | rejected
    created_by: str = "agent"
    created_ts: int = 0
    decided_ts: int | None = None

    def validate(self) -> None:
        if self.artifact_type not in _TYPE_CLS:
            raise ValidationError(f"unknown artifact type {self.artifact_type!r}")
        if self.target == "new":
            if "artifact" not in self.change:
                raise ValidationError("new-artifact proposal needs a full payload")
        elif "set" not in self.change and "artifact" not in self.change:
            raise ValidationError("update proposal needs a field delta or payload")

    def to_dict(self) -> dict[str, Any]:
        d = dict(self.__dict__)
        d["change"] = json.loads(json.dumps(self.change))
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Proposal":
        return cls(**d)


@dataclass
class SearchResult:
    ref: str
    score: float
    snippet: str
    title: str
    artifact_type: str


_TOKEN = re.compile(r"\w+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class Workspace:
    """Concurrent-reader, single-writer artifact store."""

    def __init__(self, root: str | Path | None = None,
                 clock: Callable[[], int] | None = None) -> None:
        self.root = Path(root) if root is not None else None
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._lock = threading.RLock()
        self._tasks: dict[str, TaskItem] = {}
        self._wiki: dict[str, WikiPage] = {}
        self._timeline: dict[str, TimelineEntry] = {}
        self._proposals: dict[str, Proposal] = {}
        self._counters: dict[str, int] = {"task": 0, "wiki": 0, "timeline": 0, "prop": 0}
        self._last_ts = 0
        self._op_seq = 0
        if self.root is not None:
            self.root.mkdir(parents=True, exist_ok=True)

    # -- time & ids ------------------------------------------------------

    def _now(self) -> int:
        t = max(self._clock(), self._last_ts + 1)
        self._last_ts = t
        return t

    def _next_id(self, kind: str) -> str:
        self._counters[kind] += 1
        return f"{kind}-{self._counters[kind]}"

    def _bucket(self, artifact_type: str) -> dict[str, Artifact]:
        return {"task": self._tasks, "wiki": self._wiki, "timeline": self._timeline}[artifact_type]

    # -- op log ----------------------------------------------------------

    def _log(self, op: dict[str, Any]) -> None:
        self._op_seq += 1
        op["seq"] = self._op_seq
        if self.root is not None:
            with (self.root / "oplog.ndjson").open("a") as fh:
                fh.write(json.dumps(op) + "\n")

    def _log_artifact(self, artifact_type: str, artifact: Artifact) -> None:
        self._log({"op": "upsert", "type": artifact_type, "record": artifact.to_dict()})

    # -- user path -------------------------------------------------------

    def upsert_user(self, artifact: Artifact) -> str:
        with self._lock:
            artifact_type = _TYPE_KEY[type(artifact)]
            artifact.validate()
            if not artifact.id:
                artifact.id = self._next_id(artifact_type)
            artifact.provenance = "user"
            artifact.updated_ts = self._now()
            self._bucket(artifact_type)[artifact.id] = artifact
            self._log_artifact(artifact_type, artifact)
            return artifact.id

    def remove_user(self, ref: str) -> None:
        with self._lock:
            for artifact_type in _TYPE_CLS:
                bucket = self._bucket(artifact_type)
                if ref in bucket:
                    del bucket[ref]
                    self._log({"op": "remove", "type": artifact_type, "id": ref})
                    return
            raise TargetMissing(f"no artifact {ref!r}")

    # -- agent path: proposals -------------------------------------------

    def propose(self, p: Proposal) -> str:
        """File a pending proposal; the target artifact is never touched."""
        with self._lock:
            p.validate()
            if p.target != "new" and p.target not in self._bucket(p.artifact_type):
                raise TargetMissing(f"no {p.artifact_type} artifact {p.target!r}")
            if not p.id:
                p.id = self._next_id("prop")
            p.status = "pending"
            p.created_by = "agent"
            p.created_ts = self._now()
            self._proposals[p.id] = p
            self._log({"op": "proposal", "record": p.to_dict()})
            return p.id

    def decide(self, proposal_id: str, approve: bool) -> Artifact | None:
        """Resolve a pending proposal; approval applies the change atomically."""
        with self._lock:
            p = self._proposals.get(proposal_id)
            if p is None:
                raise TargetMissing(f"no proposal {proposal_id!r}")
            if p.status != "pending":
                raise AlreadyDecided(f"proposal {proposal_id} is {p.status}")

            if p.target != "new" and p.target not in self._bucket(p.artifact_type):
                p.status = "rejected"
                p.decided_ts = self._now()
                self._log({"op": "proposal", "record": p.to_dict()})
                raise TargetMissing(
                    f"target {p.target!r} deleted since proposal; auto-rejected")

            if not approve:
                p.status = "rejected"
                p.decided_ts = self._now()
                self._log({"op": "proposal", "record": p.to_dict()})
                return None

            bucket = self._bucket(p.artifact_type)
            cls = _TYPE_CLS[p.artifact_type]
            if p.target == "new":
                artifact = cls.from_dict({**p.change["artifact"], "id": ""})
            else:
                current = bucket[p.target]
                payload = {**current.to_dict(), **p.change.get("set", {}),
                           **p.change.get("artifact", {})}
                payload["id"] = p.target
                artifact = cls.from_dict(payload)
            artifact.provenance = "agent"
            artifact.validate()
            if not artifact.id:
                artifact.id = self._next_id(p.artifact_type)
            artifact.updated_ts = self._now()
            bucket[artifact.id] = artifact
            p.status = "approved"
            p.decided_ts = self._now()
            self._log({"op": "proposal", "record": p.to_dict()})
            self._log_artifact(p.artifact_type, artifact)
            return artifact

    # -- queries ---------------------------------------------------------

    def get(self, ref: str) -> Artifact | None:
        for artifact_type in _TYPE_CLS:
            found = self._bucket(artifact_type).get(ref)
            if found is not None:
                return found
        return None

    def tasks(self) -> list[TaskItem]:
        return sorted(self._tasks.values(), key=lambda a: a.id)

    def wiki_pages(self) -> list[WikiPage]:
        return sorted(self._wiki.values(), key=lambda a: a.id)

    def timeline_entries(self) -> list[TimelineEntry]:
        return sorted(self._timeline.values(), key=lambda a: a.id)

    def proposals(self, status: str | None = None) -> list[Proposal]:
        out = sorted(self._proposals.values(), key=lambda p: p.id)
        if status is not None:
            out = [p for p in out if p.status == status]
        return out

    def open_tasks(self) -> list[TaskItem]:
        return [t for t in self.tasks() if t.status != "completed"]

    def search(self, query: str, k: int = 5) -> list[SearchResult]:
        """Lexical relevance ranking over all artifact types.

        score(q, d) = sum_t tf(t, d) * idf(t) / (1 + 0.5 * |d| / avg|d|)
        with idf(t) = ln((N + 1) / (1 + df(t))) + 1; full formula in
        docs/search.md. Ties break on updated_ts descending, then id.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        docs: list[tuple[str, str, Artifact, list[str]]] = []
        for artifact_type in _TYPE_CLS:
            for ref, artifact in self._bucket(artifact_type).items():
                docs.append((artifact_type, ref, artifact, tokenize(artifact.search_text())))
        if not docs:
            return []

        n_docs = len(docs)
        avg_len = sum(len(toks) for _, _, _, toks in docs) / n_docs
        df: dict[str, int] = {}
        for _, _, _, toks in docs:
            for t in set(toks):
                df[t] = df.get(t, 0) + 1

        q_tokens = tokenize(query)
        scored = []
        for artifact_type, ref, artifact, toks in docs:
            norm = 1 + 0.5 * len(toks) / avg_len if avg_len else 1.0
            score = 0.0
            for t in q_tokens:
                tf = toks.count(t)
                if tf:
                    idf = math.log((n_docs + 1) / (1 + df[t])) + 1
                    score += tf * idf / norm
            if score > 0:
                scored.append((score, artifact.updated_ts, ref, artifact_type, artifact))
        scored.sort(key=lambda s: (-s[0], -s[1], s[2]))

        results = []
        for score, _, ref, artifact_type, artifact in scored[:k]:
            results.append(SearchResult(
                ref=ref,
                score=score,
                snippet=_snippet(artifact.search_text(), q_tokens),
                title=getattr(artifact, "title", None) or getattr(artifact, "summary", ref),
                artifact_type=artifact_type,
            ))
        return results

    # -- persistence -----------------------------------------------------

    def digest(self) -> str:
        """Hash of artifact state only; pending proposals do not change it."""
        state = {
            "task": {k: v.to_dict() for k, v in self._tasks.items()},
            "wiki": {k: v.to_dict() for k, v in self._wiki.items()},
            "timeline": {k: v.to_dict() for k, v in self._timeline.items()},
        }
        return hashlib.sha256(json.dumps(state, sort_keys=True).encode()).hexdigest()

    def _state_dict(self) -> dict[str, Any]:
        return {
            "task": [v.to_dict() for v in self.tasks()],
            "wiki": [v.to_dict() for v in self.wiki_pages()],
            "timeline": [v.to_dict() for v in self.timeline_entries()],
            "proposals": [p.to_dict() for p in self.proposals()],
            "counters": dict(self._counters),
            "last_ts": self._last_ts,
            "op_seq": self._op_seq,
        }

    def persist(self, root: str | Path | None = None) -> Path:
        """Write snapshot.json + digest under the store directory."""
        with self._lock:
            target = Path(root) if root is not None else self.root
            if target is None:
                raise ValueError("no store directory configured")
            target.mkdir(parents=True, exist_ok=True)
            snapshot = json.dumps(self._state_dict(), indent=2, sort_keys=True)
            (target / "snapshot.json").write_text(snapshot)
            (target / "digest").write_text(
                hashlib.sha256(snapshot.encode()).hexdigest())
            if self.root is None or target != self.root:
                # Full oplog dump when persisting to a fresh location.
                with (target / "oplog.ndjson").open("w") as fh:
                    fh.write("")
            return target

    @classmethod
    def load(cls, root: str | Path,
             clock: Callable[[], int] | None = None) -> "Workspace":
        root = Path(root)
        snap_path = root / "snapshot.json"
        digest_path = root / "digest"
        ws = cls(root=root, clock=clock)
        if not snap_path.exists():
            ws._replay_oplog_tail(0)  # oplog-only store: no snapshot yet
            return ws
        raw = snap_path.read_text()
        if not digest_path.exists() or hashlib.sha256(
                raw.encode()).hexdigest() != digest_path.read_text().strip():
            raise CorruptStore("snapshot digest mismatch")
        try:
            state = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise CorruptStore("snapshot is not valid JSON") from exc
        for d in state["task"]:
            ws._tasks[d["id"]] = TaskItem.from_dict(d)
        for d in state["wiki"]:
            ws._wiki[d["id"]] = WikiPage.from_dict(d)
        for d in state["timeline"]:
            ws._timeline[d["id"]] = TimelineEntry.from_dict(d)
        for d in state["proposals"]:
            ws._proposals[d["id"]] = Proposal.from_dict(d)
        ws._counters = dict(state["counters"])
        ws._last_ts = state["last_ts"]
        ws._op_seq = state["op_seq"]
        ws._replay_oplog_tail(state["op_seq"])
        return ws

    def _replay_oplog_tail(self, snapshot_seq: int) -> None:
        if self.root is None:
            return
        oplog = self.root / "oplog.ndjson"
        if not oplog.exists():
            return
        def bump_counter(ref: str) -> None:
            m = re.fullmatch(r"(task|wiki|timeline|prop)-(\d+)", ref)
            if m:
                kind, n = m.group(1), int(m.group(2))
                self._counters[kind] = max(self._counters[kind], n)

        for line in oplog.read_text().splitlines():
            if not line.strip():
                continue
            op = json.loads(line)
            if op.get("seq", 0) <= snapshot_seq:
                continue
            self._op_seq = op["seq"]
            if op["op"] == "upsert":
                record = op["record"]
                self._bucket(op["type"])[record["id"]] = _TYPE_CLS[op["type"]].from_dict(record)
                bump_counter(record["id"])
                self._last_ts = max(self._last_ts, record.get("updated_ts", 0))
            elif op["op"] == "remove":
                self._bucket(op["type"]).pop(op["id"], None)
                # Removed ids stay burned so later inserts cannot alias them.
                bump_counter(op["id"])
            elif op["op"] == "proposal":
                record = op["record"]
                self._proposals[record["id"]] = Proposal.from_dict(record)
                bump_counter(record["id"])
                self._last_ts = max(self._last_ts, record.get("created_ts", 0),
                                    record.get("decided_ts") or 0)

    def deep_equal(self, other: "Workspace") -> bool:
        return self._state_dict() == other._state_dict()


def _snippet(text: str, q_tokens: list[str]) -> str:
    lower = text.lower()
    pos = -1
    for t in q_tokens:
        pos = lower.find(t)
        if pos >= 0:
            break
    start = max(0, pos - 60) if pos >= 0 else 0
    clipped = " ".join(text[start:start + SNIPPET_LIMIT].split())
    return clipped[:SNIPPET_LIMIT]
