"""Structured deltas between page snapshots and their verbal rendering."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from deskagent.page_model import AXNode, AXSnapshot, DuplicateId, Rect

__all__ = [
    "Change",
    "ChangeSet",
    "DuplicateId",
    "InconsistentChange",
    "tree_diff",
    "render_verbal",
    "apply_changes",
    "structurally_equal",
]

NO_CHANGES = "(no changes)"

# Rendering order of modification kinds for one element.
_MOD_ORDER = {"text_changed": 0, "name_changed": 1, "moved": 2, "attr_changed": 3}


class InconsistentChange(ValueError):
    """A change references an element that is absent where required."""


@dataclass
class Change:
    kind: str  # added | removed | text_changed | name_changed | moved | attr_changed
    id: int
    role: str
    name: str
    detail: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "id": self.id,
            "role": self.role,
            "name": self.name,
            "detail": self.detail,
        }


@dataclass
class ChangeSet:
    before_seq: int
    after_seq: int
    changes: list[Change] = field(default_factory=list)
    url_changed: tuple[str, str] | None = None

    @property
    def is_empty(self) -> bool:
        return not self.changes and self.url_changed is None

    def to_dict(self) -> dict[str, Any]:
        return {
            "before_seq": self.before_seq,
            "after_seq": self.after_seq,
            "changes": [c.to_dict() for c in self.changes],
            "url_changed": list(self.url_changed) if self.url_changed else None,
        }


def _parent_map(snapshot: AXSnapshot) -> dict[int, int | None]:
    parents: dict[int, int | None] = {snapshot.root.id: None}
    for node in snapshot.root.walk():
        for child in node.children:
            parents[child.id] = node.id
    return parents


def _child_index(parent: AXNode, node_id: int) -> int:
    for i, child in enumerate(parent.children):
        if child.id == node_id:
            return i
    raise InconsistentChange(f"element {node_id} not under parent {parent.id}")


def _lcs_keep(before_order: list[int], after_order: list[int]) -> set[int]:
    """IDs forming a longest common subsequence of the two orderings.

    Everything outside the LCS changed its relative position and is
    reported as moved.
    """
    n, m = len(before_order), len(after_order)
    lengths = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if before_order[i] == after_order[j]:
                lengths[i][j] = lengths[i + 1][j + 1] + 1
            else:
                lengths[i][j] = max(lengths[i + 1][j], lengths[i][j + 1])
    keep: set[int] = set()
    i = j = 0
    while i < n and j < m:
        if before_order[i] == after_order[j]:
            keep.add(before_order[i])
            i += 1
            j += 1
        elif lengths[i + 1][j] >= lengths[i][j + 1]:
            i += 1
        else:
            j += 1
    return keep


def tree_diff(before: AXSnapshot, after: AXSnapshot) -> ChangeSet:
    """Match nodes by stable ID and report added/removed/modified elements.

    Pure bbox movement (scrolling) is deliberately not reported. Sibling
    reorders are reported as `moved` for the nodes that left the longest
    common subsequence of the surviving children.
    """
    before_map = before.node_map()
    after_map = after.node_map()
    before_parents = _parent_map(before)
    after_parents = _parent_map(after)

    removed_keys = before_map.keys() - after_map.keys()
    added_keys = after_map.keys() - before_map.keys()
    common = (before_map.keys() & after_map.keys())
    # An id that comes back with a different role was recycled for a new
    # element; report removal plus addition rather than a mutation.
    recycled = {i for i in common if before_map[i].role != after_map[i].role}
    removed_keys |= recycled
    added_keys |= recycled
    common -= recycled

    removed = [
        Change("removed", i, before_map[i].role, before_map[i].name)
        for i in sorted(removed_keys)
    ]

    added: list[Change] = []
    for i in sorted(added_keys):
        node = after_map[i]
        parent_id = after_parents[i]
        detail: dict[str, Any] = {
            "role": node.role,
            "name": node.name,
            "text": node.text,
            "bbox": node.bbox.to_dict(),
            "editable": node.editable,
            "focused": node.focused,
            "parent_id": parent_id,
            "index": _child_index(after_map[parent_id], i) if parent_id is not None else 0,
        }
        added.append(Change("added", i, node.role, node.name, detail))

    mods: list[Change] = []
    moved_ids: set[int] = set()

    for i in common:
        if before_parents[i] != after_parents[i]:
            moved_ids.add(i)

    # Same-parent reorders: within each parent, surviving non-reparented
    # children must keep their relative order; LCS outliers are moved.
    for parent_id, parent_node in after_map.items():
        if parent_id not in before_map:
            continue
        stable = [
            c.id
            for c in parent_node.children
            if c.id in common and c.id not in moved_ids and before_parents[c.id] == parent_id
        ]
        if len(stable) < 2:
            continue
        stable_set = set(stable)
        before_order = [c.id for c in before_map[parent_id].children if c.id in stable_set]
        moved_ids.update(stable_set - _lcs_keep(before_order, stable))

    for i in common:
        b, a = before_map[i], after_map[i]
        if b.text != a.text:
            mods.append(Change("text_changed", i, a.role, a.name,
                               {"old_text": b.text, "new_text": a.text}))
        if b.name != a.name:
            mods.append(Change("name_changed", i, a.role, a.name,
                               {"old_name": b.name, "new_name": a.name}))
        if i in moved_ids:
            parent_id = after_parents[i]
            mods.append(Change("moved", i, a.role, a.name, {
                "old_parent_id": before_parents[i],
                "new_parent_id": parent_id,
                "index": _child_index(after_map[parent_id], i) if parent_id is not None else 0,
            }))
        for attr in ("editable", "focused"):
            old, new = getattr(b, attr), getattr(a, attr)
            if old != new:
                mods.append(Change("attr_changed", i, a.role, a.name,
                                   {"attr": attr, "old": old, "new": new}))

    mods.sort(key=lambda c: (c.id, _MOD_ORDER[c.kind], c.detail.get("attr", "")))

    url_changed = (before.url, after.url) if before.url != after.url else None
    return ChangeSet(before.seq, after.seq, removed + added + mods, url_changed)


def _verbal_line(c: Change) -> str:
    label = f"[{c.id}] {c.role} '{c.name}'"
    if c.kind == "added":
        return f"New element: {label}"
    if c.kind == "removed":
        return f"Removed element: {label}"
    if c.kind == "moved":
        return f"Moved element: {label}"
    if c.kind == "name_changed":
        return f"Name changed: [{c.id}]: '{c.detail['old_name']}' -> '{c.detail['new_name']}'"
    if c.kind == "text_changed":
        old, new = c.detail["old_text"], c.detail["new_text"]
        # The name segment is dropped for unnamed elements.
        head = label if c.name else f"[{c.id}] {c.role}"
        return f"Text changed: {head}{':' if c.name else ''} '{old}' -> '{new}'"
    if c.kind == "attr_changed":
        head = f"{label}:" if c.name else f"[{c.id}] {c.role}:"
        return f"Attribute changed: {head} {c.detail['attr']} {c.detail['old']} -> {c.detail['new']}"
    raise ValueError(f"unknown change kind {c.kind!r}")


def render_verbal(cs: ChangeSet) -> str:
    """Natural-language rendering of a ChangeSet, one line per change."""
    if cs.is_empty:
        return NO_CHANGES
    lines: list[str] = []
    if cs.url_changed is not None:
        lines.append(f"Navigated: {cs.url_changed[0]} -> {cs.url_changed[1]}")
    lines.extend(_verbal_line(c) for c in cs.changes)
    return "\n".join(lines)


def apply_changes(before: AXSnapshot, cs: ChangeSet) -> AXSnapshot:
    """Reconstruct the after-snapshot from `before` plus a ChangeSet.

    Round-trip oracle for tree_diff: bbox values of surviving nodes are
    carried over unchanged (bbox deltas are never part of a ChangeSet).
    """
    before_map = before.node_map()
    before_parents = _parent_map(before)

    removed_ids: set[int] = set()
    added: dict[int, Change] = {}
    moved: dict[int, Change] = {}
    field_patches: dict[int, list[Change]] = {}
    for c in cs.changes:
        if c.kind == "removed":
            if c.id not in before_map:
                raise InconsistentChange(f"removed element {c.id} absent from before-snapshot")
            removed_ids.add(c.id)
        elif c.kind == "added":
            added[c.id] = c
        elif c.kind == "moved":
            if c.id not in before_map:
                raise InconsistentChange(f"moved element {c.id} absent from before-snapshot")
            moved[c.id] = c
        else:
            if c.id not in before_map:
                raise InconsistentChange(f"modified element {c.id} absent from before-snapshot")
            field_patches.setdefault(c.id, []).append(c)

    for i in added:
        # A remove in the same set frees the id for reuse by a new element.
        if i in before_map and i not in removed_ids:
            raise InconsistentChange(f"added element {i} already present")

    if before.root.id in removed_ids or before.root.id in moved:
        raise InconsistentChange("root element cannot be removed or moved")

    # Rebuild every surviving/added node without children first.
    nodes: dict[int, AXNode] = {}
    for i, old in before_map.items():
        if i in removed_ids:
            continue
        node = AXNode(i, old.role, old.name, old.text, old.bbox,
                      [], old.editable, old.focused)
        for patch in field_patches.get(i, []):
            if patch.kind == "text_changed":
                node.text = patch.detail["new_text"]
            elif patch.kind == "name_changed":
                node.name = patch.detail["new_name"]
            elif patch.kind == "attr_changed":
                setattr(node, patch.detail["attr"], patch.detail["new"])
        nodes[i] = node
    for i, c in added.items():
        d = c.detail
        nodes[i] = AXNode(i, d["role"], d["name"], d["text"], Rect.from_dict(d["bbox"]),
                          [], d["editable"], d["focused"])

    # Assign parents: moved/added carry explicit targets, the rest keep theirs.
    new_parent: dict[int, int | None] = {}
    placement_index: dict[int, int] = {}
    for i in nodes:
        if i in moved:
            new_parent[i] = moved[i].detail["new_parent_id"]
            placement_index[i] = moved[i].detail["index"]
        elif i in added:
            new_parent[i] = added[i].detail["parent_id"]
            placement_index[i] = added[i].detail["index"]
        else:
            parent = before_parents[i]
            if parent is not None and parent in removed_ids:
                raise InconsistentChange(
                    f"element {i} survives but its parent {parent} was removed")
            new_parent[i] = parent

    for i, parent in new_parent.items():
        if parent is not None and parent not in nodes:
            raise InconsistentChange(f"element {i} placed under missing parent {parent}")

    # Children: stable survivors keep before-order, then explicit placements
    # are inserted at their recorded indexes in ascending order.
    for parent_id, parent in nodes.items():
        stable = [
            before_map[c.id].id
            for c in before_map[parent_id].children
            if c.id in nodes and new_parent[c.id] == parent_id and c.id not in placement_index
        ] if parent_id in before_map else []
        children = [nodes[i] for i in stable]
        placed = sorted(
            (i for i in nodes if new_parent[i] == parent_id and i in placement_index),
            key=lambda i: placement_index[i],
        )
        for i in placed:
            children.insert(min(placement_index[i], len(children)), nodes[i])
        parent.children = children

    url = cs.url_changed[1] if cs.url_changed else before.url
    return AXSnapshot(url=url, title=before.title, root=nodes[before.root.id],
                      viewport=before.viewport, seq=cs.after_seq)


def structurally_equal(a: AXSnapshot, b: AXSnapshot) -> bool:
    """Tree equality over IDs, roles, names, texts, flags, and child order.

    bbox is excluded: scroll-only geometry is not tracked by ChangeSets.
    """

    def eq(x: AXNode, y: AXNode) -> bool:
        if (x.id, x.role, x.name, x.text, x.editable, x.focused) != (
                y.id, y.role, y.name, y.text, y.editable, y.focused):
            return False
        if len(x.children) != len(y.children):
            return False
        return all(eq(cx, cy) for cx, cy in zip(x.children, y.children))

    return eq(a.root, b.root)
