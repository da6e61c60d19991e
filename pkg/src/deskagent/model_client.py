"""Model backends: HTTP chat endpoint and deterministic scripted mocks.

The env var AGENT_MODEL_URL selects the HTTP backend; in its absence the
scripted mock is used. The mock fixture file maps a fingerprint (sha256 of
the last user message) to an ordered list of canned completions.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Callable, Protocol

import requests

Message = dict[str, str]


class ModelClient(Protocol):
    def complete(self, messages: list[Message], samples: int = 1,
                 temperature: float = 0.0) -> list[str]:
        """Return exactly `samples` completion texts."""
        ...


class ScriptMiss(LookupError):
    """The scripted fixture has no entry for this prompt fingerprint."""


def fingerprint_messages(messages: list[Message]) -> str:
    last_user = ""
    for m in messages:
        if m.get("role") == "user":
            last_user = m.get("content", "")
    return hashlib.sha256(last_user.encode("utf-8")).hexdigest()


class ScriptedModelClient:
    """Replays canned completions keyed by prompt fingerprint.

    Each fingerprint owns an ordered list; calls consume entries in order
    and hold at the last one once exhausted, so re-asking the same prompt
    is well defined.
    """

    def __init__(self, script: dict[str, list[str]]) -> None:
        self._script = {k: list(v) for k, v in script.items()}
        self._cursors: dict[str, int] = {}

    @classmethod
    def from_file(cls, path: str | Path) -> ScriptedModelClient:
        return cls(json.loads(Path(path).read_text()))

    def complete(self, messages: list[Message], samples: int = 1,
                 temperature: float = 0.0) -> list[str]:
        fp = fingerprint_messages(messages)
        entries = self._script.get(fp)
        if not entries:
            raise ScriptMiss(f"no scripted completions for fingerprint {fp[:12]}…")
        cursor = self._cursors.get(fp, 0)
        out = []
        for _ in range(samples):
            out.append(entries[min(cursor, len(entries) - 1)])
            cursor += 1
        self._cursors[fp] = cursor
        return out


class CallableModelClient:
    """Adapts a plain function (messages -> completion text) to ModelClient.

    The function is invoked once per sample; stateful or randomized
    policies vary their output across calls.
    """

    def __init__(self, fn: Callable[[list[Message]], str]) -> None:
        self._fn = fn

    def complete(self, messages: list[Message], samples: int = 1,
                 temperature: float = 0.0) -> list[str]:
        return [self._fn(messages) for _ in range(samples)]


class HTTPModelClient:
    """POSTs a chat-completion-style body to a configurable base URL."""

    def __init__(self, base_url: str, timeout: float = 60.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def complete(self, messages: list[Message], samples: int = 1,
                 temperature: float = 0.0) -> list[str]:
        resp = requests.post(
            self.base_url,
            json={"messages": messages, "n": samples, "temperature": temperature},
            timeout=self.timeout,
        )
        resp.raise_for_status()
        body = resp.json()
        if "choices" in body:
            texts = [c["message"]["content"] for c in body["choices"]]
        elif "completions" in body:
            texts = list(body["completions"])
        else:
            raise ValueError("model response has neither 'choices' nor 'completions'")
        if len(texts) != samples:
            raise ValueError(f"expected {samples} completions, got {len(texts)}")
        return texts


def default_model_client(mock_fixture: str | Path | None = None) -> ModelClient:
    """HTTP backend when AGENT_MODEL_URL is set, scripted mock otherwise."""
    url = os.environ.get("AGENT_MODEL_URL")
    if url:
        return HTTPModelClient(url)
    if mock_fixture is None:
        raise ValueError("AGENT_MODEL_URL unset and no mock fixture provided")
    return ScriptedModelClient.from_file(mock_fixture)
