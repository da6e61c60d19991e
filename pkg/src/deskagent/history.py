"""Execution history and context composition under a token budget.

Past observations are the dominant context cost; in diff_history mode each
past step contributes only its verbal diff. Step 0 has no previous state,
so the agent stores the initial observation in its diff_from_prev slot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from deskagent.action_space import Action, format_action

ELISION_TEMPLATE = "[... {k} earlier steps elided ...]"


class BudgetTooSmall(ValueError):
    """The current observation alone does not fit the token budget."""


def token_count(text: str) -> int:
    """Deterministic tokenizer proxy: ceil(characters / 4)."""
    return (len(text) + 3) // 4


@dataclass
class Step:
    index: int
    thought: str
    action: Action | None  # None when no sample parsed into an action
    observation_full: str
    diff_from_prev: str
    result_note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "thought": self.thought,
            "action": self.action.to_dict() if self.action else None,
            "observation_full": self.observation_full,
            "diff_from_prev": self.diff_from_prev,
            "result_note": self.result_note,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Step:
        return cls(
            index=d["index"],
            thought=d["thought"],
            action=Action.from_dict(d["action"]) if d.get("action") else None,
            observation_full=d["observation_full"],
            diff_from_prev=d["diff_from_prev"],
            result_note=d.get("result_note", ""),
        )


@dataclass
class ContextBudget:
    max_tokens: int

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


def _step_block(step: Step, mode: str) -> str:
    lines = [
        f"Step {step.index}:",
        f"Thought: {step.thought}",
        f"Action: {format_action(step.action) if step.action else '(none)'}",
    ]
    if mode == "full_history":
        lines.append("Observation:")
        lines.append(step.observation_full)
    else:
        lines.append(f"Change: {step.diff_from_prev}")
    if step.result_note:
        lines.append(f"Result: {step.result_note}")
    return "\n".join(lines)


def _assemble(blocks: list[str], current_obs: str, current_diff: str) -> str:
    tail = f"Current observation:\n{current_obs}\n\nChanges since last step:\n{current_diff}"
    return "\n\n".join(blocks + [tail])


def compose_context(
    steps: list[Step],
    current_obs: str,
    current_diff: str,
    budget: ContextBudget,
    mode: str = "diff_history",
) -> str:
    """Render history + current observation, eliding oldest steps to fit.

    mode is "diff_history" (default) or "full_history" (ablation arm).
    The current observation is never elided; whole steps are dropped
    oldest-first, replaced by a single elision marker line.
    """
    if mode not in ("diff_history", "full_history"):
        raise ValueError(f"unknown history mode {mode!r}")
    if token_count(current_obs) > budget.max_tokens:
        raise BudgetTooSmall(
            f"current observation is {token_count(current_obs)} tokens, "
            f"budget is {budget.max_tokens}")

    for elided in range(len(steps) + 1):
        blocks = []
        if elided:
            blocks.append(ELISION_TEMPLATE.format(k=elided))
        blocks.extend(_step_block(s, mode) for s in steps[elided:])
        text = _assemble(blocks, current_obs, current_diff)
        if token_count(text) <= budget.max_tokens:
            return text
    # Nothing left to elide: return the maximally compressed form.
    return text


def dump_trajectory(steps: list[Step]) -> str:
    """Newline-delimited JSON, one Step per line."""
    return "\n".join(json.dumps(s.to_dict()) for s in steps)


def load_trajectory(text: str) -> list[Step]:
    return [Step.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
