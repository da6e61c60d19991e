"""ReAct orchestrator: observe, diff, vote on an action, dispatch, repeat."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Protocol

from deskagent.action_space import (
    Action,
    ActionError,
    ENV_ACTION_KINDS,
    canonicalize,
    parse_action,
    split_thought,
)
from deskagent.diff_engine import NO_CHANGES, render_verbal, structurally_equal, tree_diff
from deskagent.history import ContextBudget, Step, compose_context
from deskagent.model_client import Message, ModelClient
from deskagent.page_model import AXSnapshot, render_full, render_viewport

SYSTEM_PROMPT = (
    "You operate a web page through numbered elements. Reply with brief "
    "reasoning followed by exactly one line of the form ACTION: kind(args). "
    "See the documented action grammar for the available kinds."
)

CHOICES_PREFIX = "CHOICES:"

# Resumes a paused run: receives the option list, returns the chosen index.
ChoiceHandler = Callable[[list[str]], int]


class AllSamplesMalformed(RuntimeError):
    """Every sampled completion failed to parse into an action."""


class AgentEnv(Protocol):
    """Environment session contract consumed by run_task."""

    def observe(self) -> AXSnapshot: ...

    def step(self, action: Action) -> tuple[AXSnapshot, str]: ...

    def success(self, answer: str | None = None) -> bool: ...

    def fork(self) -> "AgentEnv": ...


@dataclass
class ScaffoldConfig:
    n_samples: int = 5
    max_steps: int = 30
    observation_mode: str = "lazy"  # lazy | full
    history_mode: str = "diff_history"  # diff_history | full_history
    budget: ContextBudget = field(default_factory=lambda: ContextBudget(16000))
    decomposition_enabled: bool = True
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not 1 <= self.n_samples <= 5:
            raise ValueError("n_samples must be between 1 and 5")
        if self.observation_mode not in ("lazy", "full"):
            raise ValueError(f"unknown observation mode {self.observation_mode!r}")
        if self.history_mode not in ("diff_history", "full_history"):
            raise ValueError(f"unknown history mode {self.history_mode!r}")


@dataclass
class TaskRun:
    task_id: str
    instruction: str
    steps: list[Step] = field(default_factory=list)
    status: str = "running"  # running | success | failure | budget_exhausted
    answer: str | None = None
    sub_runs: list["TaskRun"] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "task_id": self.task_id,
            "instruction": self.instruction,
            "steps": [s.to_dict() for s in self.steps],
            "status": self.status,
            "answer": self.answer,
            "sub_runs": [r.to_dict() for r in self.sub_runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass
class _Vote:
    action: Action
    tally: Counter
    thought: str


def _vote(completions: list[str]) -> _Vote:
    parsed: list[tuple[Action, str, str]] = []
    for text in completions:
        try:
            action = parse_action(text)
        except ActionError:
            continue  # hallucinated/imprecise samples drop out of the vote
        parsed.append((action, canonicalize(action), split_thought(text)))
    if not parsed:
        raise AllSamplesMalformed(f"none of {len(completions)} samples parsed")

    tally = Counter(key for _, key, _ in parsed)
    best_count = max(tally.values())
    # Tie-break: the tied group whose first member was sampled earliest.
    for action, key, thought in parsed:
        if tally[key] == best_count:
            return _Vote(action, tally, thought)
    raise AssertionError("unreachable")


def propose_action(context: str, client: ModelClient, n: int,
                   temperature: float = 0.0) -> tuple[Action, Counter]:
    """Sample n completions and return the plurality action with its tally."""
    if n < 1:
        raise ValueError("n must be >= 1")
    completions = client.complete([{"role": "user", "content": context}], n, temperature)
    vote = _vote(completions)
    return vote.action, vote.tally


def build_messages(instruction: str, context: str) -> list[Message]:
    return [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": f"Task: {instruction}\n\n{context}"},
    ]


def parse_choices(answer_text: str) -> list[str] | None:
    """Decode the reserved multiple-choice answer form, if present."""
    stripped = answer_text.strip()
    if not stripped.startswith(CHOICES_PREFIX):
        return None
    try:
        options = json.loads(stripped[len(CHOICES_PREFIX):].strip())
    except json.JSONDecodeError:
        return None
    if isinstance(options, list) and options and all(isinstance(o, str) for o in options):
        return options
    return None


def run_task(
    instruction: str,
    env: AgentEnv,
    workspace,
    config: ScaffoldConfig,
    client: ModelClient,
    task_id: str = "",
    choice_handler: ChoiceHandler | None = None,
    judge_answers: bool = True,
    live_run: TaskRun | None = None,
) -> TaskRun:
    """Execute one task to completion against an initialized environment.

    workspace may be None (no search tool results). choice_handler, when
    given, resumes CHOICES answers with the selected option instead of
    finishing the run. With judge_answers the environment's success check
    decides the final status; sub-agents run un-judged because a sub-goal
    has no success predicate of its own. live_run lets a caller pass the
    TaskRun to populate, so progress is observable while the run executes.
    """
    run = live_run if live_run is not None else TaskRun(task_id=task_id,
                                                        instruction=instruction)
    run.task_id, run.instruction, run.status = task_id, instruction, "running"
    prev_snapshot: AXSnapshot | None = None
    want_full_tree = False
    tool_observation: str | None = None

    for index in range(config.max_steps):
        snapshot = env.observe()
        if tool_observation is not None:
            observation = tool_observation
            tool_observation = None
        elif config.observation_mode == "full" or want_full_tree:
            observation = render_full(snapshot)
        else:
            observation = render_viewport(snapshot)
        want_full_tree = False

        if prev_snapshot is None:
            diff_text = NO_CHANGES
        else:
            diff_text = render_verbal(tree_diff(prev_snapshot, snapshot))

        context = compose_context(run.steps, observation, diff_text,
                                  config.budget, config.history_mode)
        completions = client.complete(build_messages(instruction, context),
                                      config.n_samples, config.temperature)

        action: Action | None = None
        thought = ""
        note = ""
        try:
            vote = _vote(completions)
            action, thought = vote.action, vote.thought
        except AllSamplesMalformed as exc:
            note = f"error: {exc}"

        step = Step(
            index=index,
            thought=thought,
            action=action,
            observation_full=observation,
            # Step 0 has no previous state: it carries the initial observation.
            diff_from_prev=observation if index == 0 else diff_text,
            result_note=note,
        )

        done = False
        if action is not None:
            step.result_note, tool_observation, want_full_tree, done = _dispatch(
                run, action, env, workspace, config, client, choice_handler,
                judge_answers)
        run.steps.append(step)
        prev_snapshot = snapshot
        if done:
            break

    if run.status == "running":
        run.status = "budget_exhausted"
    return run


def _dispatch(
    run: TaskRun,
    action: Action,
    env: AgentEnv,
    workspace,
    config: ScaffoldConfig,
    client: ModelClient,
    choice_handler: ChoiceHandler | None,
    judge_answers: bool,
) -> tuple[str, str | None, bool, bool]:
    """Returns (result_note, tool_observation, want_full_tree, done)."""
    if action.kind in ENV_ACTION_KINDS:
        try:
            _, note = env.step(action)
        except Exception as exc:  # environment errors are step-local
            return f"error: {exc}", None, False, False
        if env.success(run.answer):
            run.status = "success"
            return note, None, False, True
        return note, None, False, False

    if action.kind == "request_full_tree":
        return "full tree requested", None, True, False

    if action.kind == "search_workspace":
        query = action.argument or ""
        results = workspace.search(query, k=5) if workspace is not None else []
        if results:
            body = "\n\n".join(
                f"[{r.ref}] {r.title} (score {r.score:.3f})\n{r.snippet}"
                for r in results
            )
        else:
            body = "(no results)"
        tool_obs = f"Workspace search results for '{query}':\n{body}"
        return f"workspace search returned {len(results)} results", tool_obs, False, False

    if action.kind == "decompose":
        if not config.decomposition_enabled:
            return "error: MalformedAction: decomposition is disabled", None, False, False
        sub_config = replace(config, decomposition_enabled=False)
        run.sub_runs = spawn_subagents(action.subgoals, env.fork, sub_config,
                                       client, workspace=workspace)
        run.answer = "\n".join(r.answer or "" for r in run.sub_runs)
        if judge_answers:
            ok = env.success(run.answer)
        else:
            ok = all(r.status == "success" for r in run.sub_runs)
        run.status = "success" if ok else "failure"
        return f"decomposed into {len(run.sub_runs)} sub-goals", None, False, True

    if action.kind == "answer":
        text = action.argument or ""
        options = parse_choices(text)
        if options is not None and choice_handler is not None:
            try:
                selected = choice_handler(options)
            except Exception as exc:
                run.status = "failure"
                return f"error: choice handler failed: {exc}", None, False, True
            picked = options[selected]
            tool_obs = f"User selected option {selected}: {picked}"
            return f"presented {len(options)} choices", tool_obs, False, False
        run.answer = text
        ok = env.success(text) if judge_answers else True
        run.status = "success" if ok else "failure"
        return "answered", None, False, True

    return f"error: unhandled action kind {action.kind}", None, False, False


def spawn_subagents(
    subgoals: list[str],
    env_factory: Callable[[], AgentEnv],
    config: ScaffoldConfig,
    client: ModelClient,
    workspace=None,
) -> list[TaskRun]:
    """Run one fresh-context sub-agent per subgoal, each in its own session.

    Sub-runs are independent (shared state: read-only workspace search and
    the model client); they run serially here, and the contract requires
    identical results under any parallel schedule.
    """
    if len(subgoals) < 2:
        raise ValueError("decomposition requires at least 2 subgoals")
    return [
        run_task(goal, env_factory(), workspace, config, client,
                 task_id=f"subgoal-{i}", judge_answers=False)
        for i, goal in enumerate(subgoals)
    ]


def assert_no_state_change(before: AXSnapshot, after: AXSnapshot) -> bool:
    """True when two observations show the same page state (seq aside)."""
    return structurally_equal(
        AXSnapshot(before.url, before.title, before.root, before.viewport, 0),
        AXSnapshot(after.url, after.title, after.root, after.viewport, 0),
    ) and before.url == after.url
