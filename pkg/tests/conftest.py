"""Shared builders: deterministic snapshots, random trees, and mutators."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from deskagent.page_model import AXNode, AXSnapshot, Rect, Viewport
from deskagent.sim_env import load_sites, load_tasks

REPO = Path(__file__).resolve().parents[1]
FIXTURES = REPO / "fixtures"

ROLES = ("text", "button", "link", "row", "heading", "textbox", "checkbox")
WORDS = ("alpha", "beta", "gamma", "delta", "omega", "items", "save",
         "open", "filter", "report")


def build_node(id, role="text", name="", text="", y=0, children=(),
               editable=False, focused=False, height=40):
    return AXNode(id=id, role=role, name=name, text=text,
                  bbox=Rect(40, y, 600, height), children=list(children),
                  editable=editable, focused=focused)


def build_snapshot(children, url="https://site.example/page", seq=0,
                   title="Page"):
    root = AXNode(1, "document", title, "", Rect(0, 0, 1280, 2000),
                  list(children))
    return AXSnapshot(url=url, title=title, root=root,
                      viewport=Viewport(0, 0, 1280, 720), seq=seq)


def clone_snapshot(snapshot: AXSnapshot) -> AXSnapshot:
    return AXSnapshot.from_json(snapshot.to_json())


def random_snapshot(rng: random.Random, max_nodes: int = 50) -> AXSnapshot:
    n = rng.randint(2, max_nodes)
    root = AXNode(1, "document", "doc", "", Rect(0, 0, 1280, 4000))
    nodes = [root]
    for i in range(2, n + 1):
        parent = rng.choice(nodes)
        node = AXNode(i, rng.choice(ROLES), name=rng.choice(WORDS),
                      text=rng.choice(("", *WORDS)),
                      bbox=Rect(40, i * 12, 600, 40),
                      editable=rng.random() < 0.2)
        parent.children.append(node)
        nodes.append(node)
    return AXSnapshot(url="https://site.example/page", title="doc", root=root,
                      viewport=Viewport(0, 0, 1280, 720), seq=0)


def _subtree_ids(node: AXNode) -> set[int]:
    return {d.id for d in node.walk()}


def _parent_of(root: AXNode, node_id: int) -> AXNode | None:
    for node in root.walk():
        for child in node.children:
            if child.id == node_id:
                return node
    return None


def mutate_snapshot(rng: random.Random, snapshot: AXSnapshot,
                    n_ops: int | None = None) -> AXSnapshot:
    """Apply 1-4 random add/remove/retext/move edits to a copy."""
    out = clone_snapshot(snapshot)
    out.seq = snapshot.seq + 1
    for _ in range(n_ops if n_ops is not None else rng.randint(1, 4)):
        _mutate_once(rng, out)
    return out


def _mutate_once(rng: random.Random, snapshot: AXSnapshot) -> None:
    root = snapshot.root
    nodes = list(root.walk())
    op = rng.choice(("add", "remove", "retext", "move"))
    if op == "add":
        parent = rng.choice(nodes)
        new_id = max(n.id for n in nodes) + rng.randint(1, 3)
        child = AXNode(new_id, rng.choice(ROLES), name=rng.choice(WORDS),
                       text=rng.choice(("", *WORDS)),
                       bbox=Rect(40, new_id * 12, 600, 40))
        parent.children.insert(rng.randint(0, len(parent.children)), child)
    elif op == "remove":
        candidates = [n for n in nodes if n.id != root.id]
        if not candidates:
            return
        victim = rng.choice(candidates)
        parent = _parent_of(root, victim.id)
        parent.children.remove(victim)
    elif op == "retext":
        node = rng.choice(nodes)
        node.text = rng.choice([w for w in WORDS if w != node.text])
    else:  # move
        candidates = [n for n in nodes if n.id != root.id]
        if not candidates:
            return
        node = rng.choice(candidates)
        forbidden = _subtree_ids(node)
        parents = [n for n in nodes if n.id not in forbidden]
        if not parents:
            return
        old_parent = _parent_of(root, node.id)
        old_parent.children.remove(node)
        new_parent = rng.choice(parents)
        new_parent.children.insert(
            rng.randint(0, len(new_parent.children)), node)


@pytest.fixture(scope="session")
def sites():
    return load_sites(REPO)


@pytest.fixture(scope="session")
def fixture_tasks():
    return load_tasks(REPO)


@pytest.fixture(scope="session")
def pii_corpus():
    return json.loads((FIXTURES / "pii_corpus.json").read_text())
