"""Knowledge-coverage experiment over the fixture sites.

Per-category knowledge bundles are distilled by the real ETL from replays
of the shipped task solutions. The harness then sweeps coverage level
k = 0..6 (first k categories of an ordering get their bundle), runs every
fixture task with a stochastic scripted policy, and reports mean success
per (k, format). The policy only ever sees bundle content through
search_workspace results; the harness enforces that by checking the
initial step context.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from deskagent.agent_core import ScaffoldConfig, TaskRun, run_task
from deskagent.etl_pipeline import PipelineConfig, run_pipeline
from deskagent.history import ContextBudget
from deskagent.model_client import CallableModelClient
from deskagent.sim_env import (
    SimSession,
    SiteSpec,
    TaskSpec,
    load_sites,
    load_tasks,
    make_session,
    record_replay,
)
from deskagent.workspace import Proposal, WikiPage, Workspace

CATEGORIES = ("dashboard", "form", "knowledge", "list-filter", "list-sort",
              "service-catalog")
FORMATS = ("trajectory", "script", "insight")
DEFAULT_SEED = 7
DEFAULT_P_FOLLOW = 0.6


class MissingBundle(KeyError):
    """No knowledge bundle exists for a requested (category, format)."""


class KnowledgeLeak(AssertionError):
    """Bundle text reached the agent outside search_workspace results."""


# -- scripted policy -------------------------------------------------------

class SolutionPolicy:
    """Deterministic per-run model: search first, then follow or give up.

    After the opening search_workspace call the policy checks whether any
    result references the task's site. If so it executes the shipped
    solution faithfully; if not it follows the solution only when
    `follow_blind` was drawn true, otherwise it answers that it cannot
    proceed (the degraded mode).
    """

    def __init__(self, task: TaskSpec, follow_blind: bool) -> None:
        self.task = task
        self.follow_blind = follow_blind
        self._searched = False
        self._follow: bool | None = None
        self._cursor = 0
        self._last_context: str | None = None
        self._response = ""

    def __call__(self, messages: list[dict[str, str]]) -> str:
        context = messages[-1]["content"]
        if context == self._last_context:
            return self._response  # repeated sample within one vote
        self._last_context = context
        self._response = self._next(context)
        return self._response

    def _next(self, context: str) -> str:
        if not self._searched:
            self._searched = True
            query = json.dumps(f"{self.task.site_id} {self.task.instruction}")
            return ("Check the workspace for relevant know-how first.\n"
                    f"ACTION: search_workspace({query})")
        if self._follow is None:
            marker = f"{self.task.site_id}.example"
            self._follow = marker in context or self.follow_blind
        if not self._follow:
            return ('No guidance found; giving up.\n'
                    'ACTION: answer("I could not complete this task.")')
        if self._cursor >= len(self.task.solution):
            return 'Nothing left to do.\nACTION: answer("done")'
        line = self.task.solution[self._cursor]
        self._cursor += 1
        return f"Following the known procedure.\n{line}"


# -- bundles ----------------------------------------------------------------

def build_bundles(
    tasks: list[TaskSpec],
    sites: dict[str, SiteSpec] | None = None,
    formats: tuple[str, ...] = FORMATS,
) -> dict[tuple[str, str], list[WikiPage]]:
    """Distill one bundle of wiki pages per (category, format).

    Events come from replaying each task's solution through the simulator;
    the ETL turns them into drafts exactly as it would for logged user
    behavior.
    """
    sites = sites or load_sites()
    bundles: dict[tuple[str, str], list[WikiPage]] = {
        (c, f): [] for c in CATEGORIES for f in formats
    }
    for task in sorted(tasks, key=lambda t: t.task_id):
        log = record_replay(task, sites)
        if not log.succeeded:
            raise ValueError(f"solution replay failed for {task.task_id}")
        for fmt in formats:
            report = run_pipeline(log.events,
                                  PipelineConfig(format=fmt),
                                  session_id=f"bundle-{task.task_id}")
            bundles[(task.category, fmt)].extend(report.drafts.values())
    return bundles


def seed_workspace(ws: Workspace, pages: list[WikiPage]) -> None:
    """File and approve one proposal per page (the gate stays honest)."""
    for page in pages:
        pid = ws.propose(Proposal(
            target="new",
            artifact_type="wiki",
            change={"artifact": page.to_dict()},
            rationale="knowledge bundle seeding",
        ))
        ws.decide(pid, approve=True)


def _check_no_leak(run: TaskRun, pages: list[WikiPage]) -> None:
    if not run.steps or not pages:
        return
    first = run.steps[0]
    initial_context = f"{run.instruction}\n{first.observation_full}\n{first.diff_from_prev}"
    for page in pages:
        marker = page.body[:48]
        if marker and marker in initial_context:
            raise KnowledgeLeak(
                f"bundle text leaked into the initial context: {marker!r}")


# -- the sweep ---------------------------------------------------------------

@dataclass
class CoverageCell:
    ordering: int
    k: int
    format: str
    results: dict[str, bool]

    @property
    def mean(self) -> float:
        if not self.results:
            return 0.0
        return sum(self.results.values()) / len(self.results)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ordering": self.ordering,
            "k": self.k,
            "format": self.format,
            "results": dict(sorted(self.results.items())),
            "successes": sum(self.results.values()),
            "tasks": len(self.results),
            "mean": round(self.mean, 6),
        }


@dataclass
class CoverageReport:
    seed: int
    p_follow: float
    categories: list[str]
    orderings: list[list[str]]
    bundle_counts: dict[str, dict[str, int]]
    cells: list[CoverageCell] = field(default_factory=list)

    def matrix(self) -> dict[str, dict[str, float]]:
        """format -> coverage level -> mean success across orderings."""
        out: dict[str, dict[str, float]] = {}
        for fmt in sorted({c.format for c in self.cells}):
            out[fmt] = {}
            for k in sorted({c.k for c in self.cells}):
                means = [c.mean for c in self.cells
                         if c.format == fmt and c.k == k]
                out[fmt][str(k)] = round(sum(means) / len(means), 6)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "p_follow": self.p_follow,
            "categories": self.categories,
            "orderings": self.orderings,
            "bundle_counts": self.bundle_counts,
            "matrix": self.matrix(),
            "cells": [c.to_dict() for c in self.cells],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        matrix = self.matrix()
        formats = sorted(matrix)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["coverage_level", *formats])
        levels = sorted({c.k for c in self.cells})
        for k in levels:
            writer.writerow([k, *(f"{matrix[f][str(k)]:.4f}" for f in formats)])
        return buf.getvalue()


def _follow_coin(seed: int, ordering: int, k: int, fmt: str, task_id: str,
                 p: float) -> bool:
    rng = random.Random(f"{seed}:{ordering}:{k}:{fmt}:{task_id}")
    return rng.random() < p


def run_coverage(
    tasks: list[TaskSpec] | None = None,
    sites: dict[str, SiteSpec] | None = None,
    seed: int = DEFAULT_SEED,
    n_orderings: int = 6,
    formats: tuple[str, ...] = FORMATS,
    p_follow: float = DEFAULT_P_FOLLOW,
    bundles: dict[tuple[str, str], list[WikiPage]] | None = None,
) -> CoverageReport:
    sites = sites or load_sites()
    tasks = tasks if tasks is not None else load_tasks()
    tasks = sorted(tasks, key=lambda t: t.task_id)
    bundles = bundles if bundles is not None else build_bundles(tasks, sites, formats)

    for cat in CATEGORIES:
        for fmt in formats:
            if (cat, fmt) not in bundles or not bundles[(cat, fmt)]:
                raise MissingBundle(f"no bundle for ({cat}, {fmt})")

    rng = random.Random(seed)
    orderings = [rng.sample(CATEGORIES, len(CATEGORIES))
                 for _ in range(n_orderings)]

    report = CoverageReport(
        seed=seed,
        p_follow=p_follow,
        categories=list(CATEGORIES),
        orderings=[list(o) for o in orderings],
        bundle_counts={
            c: {f: len(bundles[(c, f)]) for f in formats} for c in CATEGORIES
        },
    )

    config = ScaffoldConfig(n_samples=1, max_steps=20,
                            budget=ContextBudget(30000))

    for oi, ordering in enumerate(orderings):
        for fmt in formats:
            for k in range(len(CATEGORIES) + 1):
                ws = Workspace(clock=_fixed_clock())
                pages: list[WikiPage] = []
                for cat in ordering[:k]:  # whole categories, no sub-sampling
                    pages.extend(bundles[(cat, fmt)])
                seed_workspace(ws, pages)

                results: dict[str, bool] = {}
                for task in tasks:
                    follow = _follow_coin(seed, oi, k, fmt, task.task_id,
                                          p_follow)
                    session = make_session(task, sites)
                    policy = SolutionPolicy(task, follow_blind=follow)
                    run = run_task(task.instruction, session, ws, config,
                                   CallableModelClient(policy),
                                   task_id=task.task_id)
                    _check_no_leak(run, pages)
                    results[task.task_id] = session.check_success(run.answer)
                report.cells.append(CoverageCell(oi, k, fmt, results))
    return report


def _fixed_clock():
    state = {"t": 1_700_000_000_000}

    def clock() -> int:
        state["t"] += 1000
        return state["t"]

    return clock


def write_report(report: CoverageReport,
                 out_dir: str | Path = "reports") -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "coverage.json"
    csv_path = out / "coverage.csv"
    json_path.write_text(report.to_json())
    csv_path.write_text(report.to_csv())
    return json_path, csv_path


def category_effect(report: CoverageReport, category: str,
                    task_prefixes: tuple[str, ...]) -> tuple[int, int]:
    """Successes on matching tasks just before vs just after a category's
    bundle enters, summed over orderings and formats."""
    before = after = 0
    for cell in report.cells:
        ordering = report.orderings[cell.ordering]
        j = ordering.index(category)
        if cell.k not in (j, j + 1):
            continue
        hits = sum(ok for task_id, ok in cell.results.items()
                   if task_id.startswith(task_prefixes))
        if cell.k == j:
            before += hits
        else:
            after += hits
    return before, after
