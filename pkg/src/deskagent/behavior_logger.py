"""Consent-gated capture of user activity events with dedup compression.

Events are appended as newline-delimited JSON, one file per session under
logs/<session_id>.ndjson. Screenshots stay opaque reference strings; no
pixel data enters this pipeline. For page_view events the payload slot
carries the page title.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable

EVENT_KINDS = frozenset({"page_view", "click", "input", "tab_switch", "screenshot_ref"})


class UnorderedInput(ValueError):
    """Event timestamps decreased within one session."""


@dataclass
class BehaviorEvent:
    ts: int  # milliseconds UTC
    session_id: str
    tab_id: str
    site: str  # origin
    url: str
    kind: str
    element: dict[str, Any] | None = None  # {role, name, id}
    payload: str | None = None
    snapshot_digest: str = ""
    repeat_count: int = 1  # set by dedup_compress on collapsed runs

    def to_dict(self) -> dict[str, Any]:
        return {
            "ts": self.ts,
            "session_id": self.session_id,
            "tab_id": self.tab_id,
            "site": self.site,
            "url": self.url,
            "kind": self.kind,
            "element": self.element,
            "payload": self.payload,
            "snapshot_digest": self.snapshot_digest,
            "repeat_count": self.repeat_count,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BehaviorEvent:
        return cls(
            ts=d["ts"],
            session_id=d["session_id"],
            tab_id=d["tab_id"],
            site=d["site"],
            url=d["url"],
            kind=d["kind"],
            element=d.get("element"),
            payload=d.get("payload"),
            snapshot_digest=d.get("snapshot_digest", ""),
            repeat_count=d.get("repeat_count", 1),
        )


@dataclass
class ConsentState:
    enabled: bool = False  # recording is opt-in, off until explicit consent
    paused: bool = False
    consent_ts: int | None = None

    @property
    def recording(self) -> bool:
        return self.enabled and not self.paused


class BehaviorLog:
    """Append-only per-session event log."""

    def __init__(self, logs_dir: str | Path) -> None:
        self.logs_dir = Path(logs_dir)
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        self._last_ts: dict[str, int] = {}

    def session_path(self, session_id: str) -> Path:
        return self.logs_dir / f"{session_id}.ndjson"

    def record(self, event: BehaviorEvent, consent: ConsentState) -> bool:
        """Append iff consent permits; silently drops otherwise."""
        if not consent.recording:
            return False
        last = self._last_ts.get(event.session_id)
        if last is not None and event.ts < last:
            raise UnorderedInput(
                f"event ts {event.ts} precedes last recorded ts {last}")
        self._last_ts[event.session_id] = event.ts
        with self.session_path(event.session_id).open("a") as fh:
            fh.write(json.dumps(event.to_dict()) + "\n")
        return True

    def read_session(self, session_id: str) -> list[BehaviorEvent]:
        path = self.session_path(session_id)
        if not path.exists():
            return []
        return [
            BehaviorEvent.from_dict(json.loads(line))
            for line in path.read_text().splitlines()
            if line.strip()
        ]

    def sessions(self) -> list[str]:
        return sorted(p.stem for p in self.logs_dir.glob("*.ndjson"))


def _check_ordered(events: Iterable[BehaviorEvent]) -> None:
    last: int | None = None
    for e in events:
        if last is not None and e.ts < last:
            raise UnorderedInput(f"event ts {e.ts} precedes {last}")
        last = e.ts


def dedup_compress(events: list[BehaviorEvent]) -> list[BehaviorEvent]:
    """Collapse consecutive page_view runs on the same (site, digest).

    The first occurrence survives with repeat_count summing the run; other
    event kinds pass through untouched and never break out of order.
    """
    _check_ordered(events)
    out: list[BehaviorEvent] = []
    for event in events:
        if (
            event.kind == "page_view"
            and out
            and out[-1].kind == "page_view"
            and out[-1].site == event.site
            and out[-1].snapshot_digest == event.snapshot_digest
        ):
            out[-1] = replace(out[-1], repeat_count=out[-1].repeat_count + event.repeat_count)
        else:
            out.append(replace(event))
    return out
