"""Behavior-to-knowledge ETL: segment, summarize/classify, aggregate.

PII masking runs at ingestion, before anything else sees an event. The
deterministic rule backend is the default; passing a model client enables
the agentic variant, which may override summaries and routing but still
only ever emits workspace Proposals.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from filelock import FileLock

from deskagent.behavior_logger import BehaviorEvent, UnorderedInput, dedup_compress
from deskagent.model_client import ModelClient
from deskagent.workspace import (
    KNOWLEDGE_FORMATS,
    Proposal,
    TAXONOMY,
    TaskItem,
    WikiPage,
    tokenize,
)

DEFAULT_TIMEOUT_MS = 30 * 60 * 1000  # inactivity gap that closes an episode
WIKI_ACTION_THRESHOLD = 3  # min user-action events before a segment earns a wiki page
WIKI_CATEGORIES = frozenset({"research", "development", "reporting"})
ACTION_EVENT_KINDS = frozenset({"click", "input"})

_KIND_ORDER = ("page_view", "click", "input", "tab_switch", "screenshot_ref")

# First matching row wins; keywords are matched on the masked event text.
_CATEGORY_RULES: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("communication", ("mail", "chat", "message", "meet", "slack", "inbox")),
    ("research", ("search", "docs", "wiki", "knowledge", "article", "kb")),
    ("reporting", ("report", "dashboard", "analytics", "metrics")),
    ("development", ("git", "code", "repo", "issue", "build", "ci")),
    ("administration", ("catalog", "order", "form", "expense", "admin", "request", "hr")),
)


class EmptySegment(ValueError):
    pass


# -- PII masking ----------------------------------------------------------

_EMAIL = re.compile(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}")
_CARDISH = re.compile(r"(?<!\d)(?:\d[ -]?){12,18}\d(?!\d)")
_PHONES = (
    re.compile(r"\+\d{1,3}[\s.-]?\(?\d{1,4}\)?(?:[\s.-]?\d{2,4}){2,4}"),
    re.compile(r"\(?\d{3}\)?[\s.-]\d{3}[\s.-]\d{4}"),
)


def luhn_valid(digits: str) -> bool:
    total = 0
    for i, ch in enumerate(reversed(digits)):
        d = int(ch)
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def mask_pii(text: str) -> tuple[str, int]:
    """Redact emails, card numbers (Luhn-checked), and phone numbers."""
    hits = 0

    def _email_sub(m: re.Match) -> str:
        nonlocal hits
        hits += 1
        return "[REDACTED:email]"

    def _card_sub(m: re.Match) -> str:
        nonlocal hits
        digits = re.sub(r"[ -]", "", m.group(0))
        if 13 <= len(digits) <= 19 and luhn_valid(digits):
            hits += 1
            return "[REDACTED:card]"
        return m.group(0)

    def _phone_sub(m: re.Match) -> str:
        nonlocal hits
        hits += 1
        return "[REDACTED:phone]"

    masked = _EMAIL.sub(_email_sub, text)
    masked = _CARDISH.sub(_card_sub, masked)
    for pattern in _PHONES:
        masked = pattern.sub(_phone_sub, masked)
    return masked, hits


def mask_event(event: BehaviorEvent) -> tuple[BehaviorEvent, int]:
    hits = 0
    url, h = mask_pii(event.url)
    hits += h
    site, h = mask_pii(event.site)
    hits += h
    payload = event.payload
    if payload is not None:
        payload, h = mask_pii(payload)
        hits += h
    element = event.element
    if element and element.get("name"):
        name, h = mask_pii(element["name"])
        hits += h
        element = {**element, "name": name}
    return replace(event, url=url, site=site, payload=payload, element=element), hits


# -- segmentation ---------------------------------------------------------

@dataclass
class Segment:
    segment_id: str
    events: list[BehaviorEvent]
    start_ts: int
    end_ts: int
    gap_before_ms: int

    def text(self) -> str:
        """All searchable strings of the segment, for matching and routing."""
        parts = []
        for e in self.events:
            parts.append(e.site)
            parts.append(e.url)
            if e.payload:
                parts.append(e.payload)
            if e.element and e.element.get("name"):
                parts.append(e.element["name"])
        return " ".join(parts)

    def action_event_count(self) -> int:
        return sum(1 for e in self.events if e.kind in ACTION_EVENT_KINDS)

    def to_dict(self) -> dict[str, Any]:
        return {
            "segment_id": self.segment_id,
            "events": [e.to_dict() for e in self.events],
            "start_ts": self.start_ts,
            "end_ts": self.end_ts,
            "gap_before_ms": self.gap_before_ms,
        }


def segment(events: list[BehaviorEvent],
            timeout_ms: int = DEFAULT_TIMEOUT_MS) -> list[Segment]:
    """Partition time-ordered events at inactivity gaps >= timeout_ms."""
    groups: list[list[BehaviorEvent]] = []
    gaps: list[int] = []
    last_ts: int | None = None
    for e in events:
        if last_ts is not None and e.ts < last_ts:
            raise UnorderedInput(f"event ts {e.ts} precedes {last_ts}")
        gap = 0 if last_ts is None else e.ts - last_ts
        if last_ts is None or gap >= timeout_ms:
            groups.append([])
            gaps.append(gap)
        groups[-1].append(e)
        last_ts = e.ts
    return [
        Segment(
            segment_id=f"seg-{i:03d}-{group[0].ts}",
            events=group,
            start_ts=group[0].ts,
            end_ts=group[-1].ts,
            gap_before_ms=gaps[i],
        )
        for i, group in enumerate(groups)
    ]


# -- summarize / classify -------------------------------------------------

@dataclass
class SegmentSummary:
    segment_id: str
    screen_state: str
    actions: str
    resulting_changes: str
    category: str
    confidence: float

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def classify_category(text: str) -> str:
    lower = text.lower()
    for category, keywords in _CATEGORY_RULES:
        if any(kw in lower for kw in keywords):
            return category
    return "other"


def _rule_summary(seg: Segment, confidence: float) -> SegmentSummary:
    site_counts: dict[str, int] = {}
    for e in seg.events:
        site_counts[e.site] = site_counts.get(e.site, 0) + 1
    top_site = max(site_counts, key=lambda s: (site_counts[s], s))
    last_title = next(
        (e.payload for e in reversed(seg.events)
         if e.kind == "page_view" and e.payload),
        "",
    )
    screen_state = f"{top_site} - {last_title}" if last_title else top_site

    kind_counts = {k: 0 for k in _KIND_ORDER}
    for e in seg.events:
        kind_counts[e.kind] = kind_counts.get(e.kind, 0) + 1
    histogram = ", ".join(
        f"{kind_counts[k]} {k}" for k in _KIND_ORDER if kind_counts.get(k))
    digests = {e.snapshot_digest for e in seg.events if e.snapshot_digest}

    return SegmentSummary(
        segment_id=seg.segment_id,
        screen_state=screen_state,
        actions=f"{histogram} events",
        resulting_changes=f"{len(digests)} distinct page states",
        category=classify_category(seg.text()),
        confidence=confidence,
    )


_SUMMARY_SCHEMA_KEYS = {"screen_state", "actions", "resulting_changes",
                        "category", "confidence"}

_SUMMARY_PROMPT = (
    "Summarize this browsing episode as JSON with keys screen_state, "
    "actions, resulting_changes, category (one of {taxonomy}), and "
    "confidence (0..1).\n\nEvents:\n{digest}"
)


def _event_digest(seg: Segment) -> str:
    lines = []
    for e in seg.events:
        name = (e.element or {}).get("name", "")
        lines.append(f"{e.ts} {e.kind} {e.site} '{name}' {e.payload or ''}".rstrip())
    return "\n".join(lines)


def summarize(seg: Segment, client: ModelClient | None = None) -> SegmentSummary:
    """Structured record of one segment; rule backend when client is None.

    Model responses must satisfy the JSON schema; after 2 retries the rule
    backend takes over with confidence pinned to 0.0.
    """
    if not seg.events:
        raise EmptySegment(f"segment {seg.segment_id} has no events")
    if client is None:
        return _rule_summary(seg, confidence=0.5)

    prompt = _SUMMARY_PROMPT.format(taxonomy=", ".join(TAXONOMY),
                                    digest=_event_digest(seg))
    for _ in range(3):  # first try + 2 retries
        text = client.complete([{"role": "user", "content": prompt}], 1)[0]
        try:
            payload = json.loads(text)
        except json.JSONDecodeError:
            continue
        if (isinstance(payload, dict)
                and _SUMMARY_SCHEMA_KEYS <= payload.keys()
                and payload["category"] in TAXONOMY
                and isinstance(payload["confidence"], (int, float))
                and 0 <= payload["confidence"] <= 1):
            return SegmentSummary(
                segment_id=seg.segment_id,
                screen_state=str(payload["screen_state"]),
                actions=str(payload["actions"]),
                resulting_changes=str(payload["resulting_changes"]),
                category=payload["category"],
                confidence=float(payload["confidence"]),
            )
    return _rule_summary(seg, confidence=0.0)


# -- distillation ---------------------------------------------------------

def _script_steps(seg: Segment) -> list[str]:
    steps: list[str] = []
    for e in seg.events:
        name = (e.element or {}).get("name", "")
        if e.kind == "click":
            role = (e.element or {}).get("role", "")
            if role == "link":
                step = f"Navigate to '{name}'."
            elif role == "checkbox":
                step = f"Check the '{name}' box."
            else:
                step = f"Click '{name}'."
        elif e.kind == "input":
            step = f"Set '{name}' to '{e.payload or ''}'."
        else:
            continue
        if not steps or steps[-1] != step:
            steps.append(step)
    return steps


def distill(seg: Segment, summary: SegmentSummary, format: str,
            client: ModelClient | None = None) -> WikiPage:
    """Produce a wiki draft at the requested abstraction level."""
    if format not in KNOWLEDGE_FORMATS:
        raise ValueError(f"unknown knowledge format {format!r}")
    if not seg.events:
        raise EmptySegment(f"segment {seg.segment_id} has no events")

    top_site = summary.screen_state.split(" - ")[0]
    visited: list[str] = []
    for e in seg.events:
        if e.kind == "page_view" and e.payload and e.payload not in visited:
            visited.append(e.payload)
    header = f"Covers: {', '.join(visited)}." if visited else ""

    if format == "trajectory":
        lines = [header] if header else []
        for i, e in enumerate(seg.events, 1):
            name = (e.element or {}).get("name", "")
            detail = f" '{name}'" if name else ""
            payload = f" -> {e.payload}" if e.payload else ""
            lines.append(f"{i}. {e.kind} on {e.site}{detail}{payload}")
        title = f"Activity trace on {top_site}"
        body = "\n".join(lines)
    elif format == "script":
        steps = _script_steps(seg)
        if not steps:
            raise EmptySegment(f"segment {seg.segment_id} has no user actions")
        lines = [header] if header else []
        lines.extend(f"{i}. {s}" for i, s in enumerate(steps, 1))
        title = f"{summary.category.capitalize()} procedure on {top_site}"
        body = "\n".join(lines)
    else:  # insight
        title = f"Summary of {top_site} activity"
        body = (f"{summary.screen_state}. {summary.actions.capitalize()}. "
                f"{summary.resulting_changes.capitalize()}.")

    if client is not None:
        # The agentic backend may rewrite the draft body; invalid output
        # falls back to the deterministic draft.
        prompt = (f"Rewrite this {format} wiki draft, keeping it factual. "
                  f"Reply with the body text only.\n\n{body}")
        rewritten = client.complete([{"role": "user", "content": prompt}], 1)[0].strip()
        if rewritten:
            body = rewritten

    return WikiPage(
        title=title,
        body=body,
        tags=[summary.category, format],
        format=format,
        source_segments=[seg.segment_id],
        provenance="agent",
    )


# -- routing --------------------------------------------------------------

def _timeline_proposal(seg: Segment, summary: SegmentSummary) -> Proposal:
    date = datetime.fromtimestamp(seg.start_ts / 1000, tz=timezone.utc).date().isoformat()
    entry = {
        "date": date,
        "start_ts": seg.start_ts,
        "duration_ms": seg.end_ts - seg.start_ts,
        "tag": summary.category,
        "summary": summary.screen_state,
        "details": f"{summary.actions}; {summary.resulting_changes}",
        "provenance": "agent",
    }
    return Proposal(
        target="new",
        artifact_type="timeline",
        change={"artifact": entry},
        rationale=f"Observed activity in segment {seg.segment_id}.",
    )


def _title_overlap(task: TaskItem, seg: Segment) -> float:
    title_tokens = set(tokenize(task.title))
    if not title_tokens:
        return 0.0
    seg_tokens = set(tokenize(seg.text()))
    return len(title_tokens & seg_tokens) / len(title_tokens)


def route(
    drafts: dict[str, WikiPage],
    summaries: list[SegmentSummary],
    client: ModelClient | None = None,
    segments: list[Segment] | None = None,
    open_tasks: list[TaskItem] | None = None,
    force_wiki: bool = False,
) -> list[Proposal]:
    """Turn pipeline outputs into Proposals; never writes artifacts.

    Baseline routing: every summary becomes a TimelineEntry proposal;
    wiki-worthy segments (category in research/development/reporting with
    enough user actions, or force_wiki) propose their draft page; segments
    overlapping an open task title by >= 0.5 propose completing it.
    In agentic mode the model may override wiki routing per draft.
    """
    seg_by_id = {s.segment_id: s for s in (segments or [])}
    proposals: list[Proposal] = []
    for summary in summaries:
        seg = seg_by_id.get(summary.segment_id)
        if seg is not None:
            proposals.append(_timeline_proposal(seg, summary))

        route_wiki = force_wiki or (
            summary.category in WIKI_CATEGORIES
            and seg is not None
            and seg.action_event_count() >= WIKI_ACTION_THRESHOLD
        )
        if client is not None and summary.segment_id in drafts:
            directive = _agentic_directive(client, summary, drafts[summary.segment_id])
            if directive is not None:
                route_wiki = directive.get("route_wiki", route_wiki)
        if route_wiki and summary.segment_id in drafts:
            page = drafts[summary.segment_id]
            proposals.append(Proposal(
                target="new",
                artifact_type="wiki",
                change={"artifact": page.to_dict()},
                rationale=(f"Distilled a {page.format} page from segment "
                           f"{summary.segment_id}."),
            ))

        if seg is not None:
            for task in open_tasks or []:
                if _title_overlap(task, seg) >= 0.5:
                    proposals.append(Proposal(
                        target=task.id,
                        artifact_type="task",
                        change={"set": {"status": "completed"}},
                        rationale=(f"Segment {seg.segment_id} shows this task "
                                   f"being carried out ('{task.title}')."),
                    ))
    return proposals


def _agentic_directive(client: ModelClient, summary: SegmentSummary,
                       draft: WikiPage) -> dict[str, Any] | None:
    prompt = (
        "Decide routing for this draft. Reply with JSON "
        '{"route_wiki": bool, "format": "trajectory|script|insight"}.\n'
        f"Category: {summary.category}\nDraft title: {draft.title}"
    )
    text = client.complete([{"role": "user", "content": prompt}], 1)[0]
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        return None
    return payload if isinstance(payload, dict) else None


# -- pipeline driver ------------------------------------------------------

@dataclass
class PipelineConfig:
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    format: str | None = None  # force every segment into wiki drafts of this format
    agentic: bool = False
    wiki_format: str = "script"  # default draft format for baseline routing

    def __post_init__(self) -> None:
        for fmt in (self.format, self.wiki_format):
            if fmt is not None and fmt not in KNOWLEDGE_FORMATS:
                raise ValueError(f"unknown knowledge format {fmt!r}")


@dataclass
class PipelineReport:
    session_id: str
    masked_hits: int
    segments: list[Segment]
    summaries: list[SegmentSummary]
    drafts: dict[str, WikiPage]
    proposals: list[Proposal]
    proposal_ids: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "masked_hits": self.masked_hits,
            "segments": [
                {"segment_id": s.segment_id, "events": len(s.events),
                 "start_ts": s.start_ts, "end_ts": s.end_ts}
                for s in self.segments
            ],
            "summaries": [s.to_dict() for s in self.summaries],
            "drafts": {k: v.to_dict() for k, v in self.drafts.items()},
            "proposals": [p.to_dict() for p in self.proposals],
            "proposal_ids": self.proposal_ids,
        }


def run_pipeline(
    events: list[BehaviorEvent],
    config: PipelineConfig | None = None,
    client: ModelClient | None = None,
    workspace=None,
    session_id: str = "",
) -> PipelineReport:
    """Full batch run over one session's events.

    With no client the whole pipeline is a pure function of
    (events, config). Proposals are filed on the workspace when one is
    given; artifacts are untouched until a human approves them.
    """
    config = config or PipelineConfig()
    model = client if config.agentic else None

    masked: list[BehaviorEvent] = []
    hits = 0
    for e in events:
        m, h = mask_event(e)
        masked.append(m)
        hits += h
    compressed = dedup_compress(masked)
    segments = segment(compressed, config.timeout_ms)
    summaries = [summarize(s, model) for s in segments]

    drafts: dict[str, WikiPage] = {}
    fmt = config.format or config.wiki_format
    for seg, summary in zip(segments, summaries):
        try:
            drafts[seg.segment_id] = distill(seg, summary, fmt, model)
        except EmptySegment:
            continue  # segments with no user actions produce no script

    open_tasks = workspace.open_tasks() if workspace is not None else []
    proposals = route(
        drafts,
        summaries,
        client=model,
        segments=segments,
        open_tasks=open_tasks,
        force_wiki=config.format is not None,
    )

    report = PipelineReport(
        session_id=session_id,
        masked_hits=hits,
        segments=segments,
        summaries=summaries,
        drafts=drafts,
        proposals=proposals,
    )
    if workspace is not None:
        report.proposal_ids = [workspace.propose(p) for p in proposals]
    return report


def session_run_lock(logs_dir: str | Path, session_id: str) -> FileLock:
    """Guards against concurrent pipeline runs over one session file."""
    return FileLock(str(Path(logs_dir) / f"{session_id}.lock"))
