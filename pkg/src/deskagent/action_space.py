"""Coarse-grained action vocabulary: parsing, formatting, canonical forms.

Grammar (consumed verbatim by the mock model fixtures, see docs/actions.md):

    ACTION: <kind>(<args...>)

String arguments are double-quoted with backslash escapes, integer
arguments are bare. There is no pixel-scroll action: scrolling is always
element-targeted via scroll_into.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any


class ActionError(ValueError):
    pass


class NoActionBlock(ActionError):
    """Model output contains no ACTION: block."""


class MalformedAction(ActionError):
    """Unknown kind, wrong arity, or unparseable argument list."""


class BadTargetId(ActionError):
    """Target slot did not hold a bare integer."""


# kind -> ordered argument slots. "target" is a bare integer element ID,
# "arg" a quoted string, "subgoals" two or more quoted strings.
ACTION_SIGNATURES: dict[str, tuple[str, ...]] = {
    "click": ("target",),
    "type_text": ("target", "arg"),
    "scroll_into": ("target",),
    "select_option": ("target", "arg"),
    "navigate": ("arg",),
    "go_back": (),
    "request_full_tree": (),
    "search_workspace": ("arg",),
    "decompose": ("subgoals",),
    "answer": ("arg",),
}

ENV_ACTION_KINDS = frozenset(
    {"click", "type_text", "scroll_into", "select_option", "navigate", "go_back"}
)

_ACTION_LINE = re.compile(r"^\s*ACTION:\s*(\w+)\((.*)\)\s*$")


@dataclass
class Action:
    kind: str
    target_id: int | None = None
    argument: str | None = None
    subgoals: list[str] = field(default_factory=list)

    def validate(self) -> None:
        slots = ACTION_SIGNATURES.get(self.kind)
        if slots is None:
            raise MalformedAction(f"unknown action kind {self.kind!r}")
        if ("target" in slots) != (self.target_id is not None):
            raise MalformedAction(f"{self.kind} target_id mismatch")
        if ("arg" in slots) != (self.argument is not None):
            raise MalformedAction(f"{self.kind} argument mismatch")
        if "subgoals" in slots:
            if len(self.subgoals) < 2:
                raise MalformedAction("decompose requires at least 2 subgoals")
        elif self.subgoals:
            raise MalformedAction(f"{self.kind} takes no subgoals")

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "target_id": self.target_id,
            "argument": self.argument,
            "subgoals": list(self.subgoals),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Action:
        return cls(
            kind=d["kind"],
            target_id=d.get("target_id"),
            argument=d.get("argument"),
            subgoals=list(d.get("subgoals") or []),
        )


def _split_args(raw: str) -> list[str]:
    """Split a raw argument list on top-level commas, honoring quotes."""
    parts: list[str] = []
    buf: list[str] = []
    in_string = False
    escaped = False
    for ch in raw:
        if in_string:
            buf.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
            buf.append(ch)
        elif ch == ",":
            parts.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    if in_string:
        raise MalformedAction("unterminated string argument")
    tail = "".join(buf).strip()
    if tail or parts:
        parts.append(tail)
    return parts


def _decode_string(token: str) -> str:
    if not (len(token) >= 2 and token.startswith('"') and token.endswith('"')):
        raise MalformedAction(f"expected quoted string, got {token!r}")
    try:
        return json.loads(token)
    except json.JSONDecodeError as exc:
        raise MalformedAction(f"bad string literal {token!r}") from exc


def parse_action(model_output: str) -> Action:
    """Parse the first ACTION: block in a model completion."""
    match = None
    for line in model_output.splitlines():
        match = _ACTION_LINE.match(line)
        if match:
            break
    if not match:
        raise NoActionBlock("no ACTION: block in model output")

    kind, raw_args = match.group(1), match.group(2)
    slots = ACTION_SIGNATURES.get(kind)
    if slots is None:
        raise MalformedAction(f"unknown action kind {kind!r}")
    args = _split_args(raw_args)

    action = Action(kind)
    if slots == ("subgoals",):
        if len(args) < 2:
            raise MalformedAction("decompose requires at least 2 subgoals")
        action.subgoals = [_decode_string(a) for a in args]
    else:
        if len(args) != len(slots):
            raise MalformedAction(
                f"{kind} takes {len(slots)} argument(s), got {len(args)}")
        for slot, token in zip(slots, args):
            if slot == "target":
                if not re.fullmatch(r"-?\d+", token):
                    raise BadTargetId(f"target must be a bare integer, got {token!r}")
                action.target_id = int(token)
            else:
                action.argument = _decode_string(token)
    action.validate()
    return action


def split_thought(model_output: str) -> str:
    """Free text preceding the action block, recorded as the step's thought."""
    lines = model_output.splitlines()
    for i, line in enumerate(lines):
        if _ACTION_LINE.match(line):
            return "\n".join(lines[:i]).strip()
    return model_output.strip()


def format_action(a: Action) -> str:
    """Pretty-printer inverse of parse_action; used by the mock model."""
    a.validate()
    slots = ACTION_SIGNATURES[a.kind]
    if slots == ("subgoals",):
        args = [json.dumps(g) for g in a.subgoals]
    else:
        args = []
        for slot in slots:
            if slot == "target":
                args.append(str(a.target_id))
            else:
                args.append(json.dumps(a.argument))
    return f"ACTION: {a.kind}({', '.join(args)})"


def _normalize(text: str) -> str:
    # Trim and collapse internal whitespace; case is meaningful and kept.
    return re.sub(r"\s+", " ", text.strip())


def canonicalize(a: Action) -> str:
    """Deterministic string identity for voting: equal string = same vote."""
    a.validate()
    slots = ACTION_SIGNATURES[a.kind]
    if slots == ("subgoals",):
        args = [json.dumps(_normalize(g)) for g in a.subgoals]
    else:
        args = []
        for slot in slots:
            if slot == "target":
                args.append(str(a.target_id))
            else:
                args.append(json.dumps(_normalize(a.argument or "")))
    return f"{a.kind}({','.join(args)})"
