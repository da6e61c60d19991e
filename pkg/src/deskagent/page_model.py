"""Accessibility-tree page snapshots and their textual renderings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterator


class DuplicateId(ValueError):
    """A snapshot contains the same element ID more than once."""


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    width: float
    height: float

    def intersects(self, other: Rect) -> bool:
        """True when the overlap area is strictly positive."""
        overlap_w = min(self.x + self.width, other.x + other.width) - max(self.x, other.x)
        overlap_h = min(self.y + self.height, other.y + other.height) - max(self.y, other.y)
        return overlap_w > 0 and overlap_h > 0

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "width": self.width, "height": self.height}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Rect:
        return cls(d["x"], d["y"], d["width"], d["height"])


@dataclass(frozen=True)
class Viewport:
    scroll_x: float
    scroll_y: float
    width: float
    height: float

    @property
    def rect(self) -> Rect:
        return Rect(self.scroll_x, self.scroll_y, self.width, self.height)

    def to_dict(self) -> dict[str, float]:
        return {
            "scroll_x": self.scroll_x,
            "scroll_y": self.scroll_y,
            "width": self.width,
            "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Viewport:
        return cls(d["scroll_x"], d["scroll_y"], d["width"], d["height"])


@dataclass
class AXNode:
    """A single node of the accessibility tree.

    IDs are stable element references assigned by the environment; the agent
    never re-derives them.
    """

    id: int
    role: str
    name: str = ""
    text: str = ""
    bbox: Rect = field(default_factory=lambda: Rect(0, 0, 0, 0))
    children: list[AXNode] = field(default_factory=list)
    editable: bool = False
    focused: bool = False

    def walk(self) -> Iterator[AXNode]:
        """Pre-order traversal of this subtree."""
        yield self
        for child in self.children:
            yield from child.walk()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "role": self.role,
            "name": self.name,
            "text": self.text,
            "bbox": self.bbox.to_dict(),
            "children": [c.to_dict() for c in self.children],
            "editable": self.editable,
            "focused": self.focused,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AXNode:
        return cls(
            id=d["id"],
            role=d["role"],
            name=d.get("name", ""),
            text=d.get("text", ""),
            bbox=Rect.from_dict(d["bbox"]) if "bbox" in d else Rect(0, 0, 0, 0),
            children=[cls.from_dict(c) for c in d.get("children", [])],
            editable=d.get("editable", False),
            focused=d.get("focused", False),
        )


@dataclass
class AXSnapshot:
    """One observation of a page: the full tree plus viewport geometry."""

    url: str
    title: str
    root: AXNode
    viewport: Viewport
    seq: int = 0

    def nodes(self) -> list[AXNode]:
        return list(self.root.walk())

    def node_map(self) -> dict[int, AXNode]:
        """ID -> node index; raises DuplicateId on repeated IDs."""
        out: dict[int, AXNode] = {}
        for node in self.root.walk():
            if node.id in out:
                raise DuplicateId(f"element id {node.id} appears more than once")
            out[node.id] = node
        return out

    def validate(self) -> None:
        self.node_map()
        for node in self.root.walk():
            if node.bbox.width < 0 or node.bbox.height < 0:
                raise ValueError(f"element {node.id} has a negative bbox dimension")

    def to_dict(self) -> dict[str, Any]:
        return {
            "url": self.url,
            "title": self.title,
            "root": self.root.to_dict(),
            "viewport": self.viewport.to_dict(),
            "seq": self.seq,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> AXSnapshot:
        return cls(
            url=d["url"],
            title=d["title"],
            root=AXNode.from_dict(d["root"]),
            viewport=Viewport.from_dict(d["viewport"]),
            seq=d.get("seq", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> AXSnapshot:
        return cls.from_dict(json.loads(text))


def _node_line(node: AXNode, depth: int) -> str:
    line = f"{'  ' * depth}[{node.id}] {node.role} '{node.name}'"
    if node.text:
        line += f" {node.text}"
    return line


def render_full(snapshot: AXSnapshot) -> str:
    """Render every node, one line each in pre-order, indented by depth."""
    lines: list[str] = []

    def visit(node: AXNode, depth: int) -> None:
        lines.append(_node_line(node, depth))
        for child in node.children:
            visit(child, depth + 1)

    visit(snapshot.root, 0)
    return "\n".join(lines)


def render_viewport(snapshot: AXSnapshot) -> str:
    """Render only nodes intersecting the viewport (plus their ancestors).

    Ancestors of a visible node are kept even when off-screen so the tree
    text stays parseable. Ends with a count of excluded elements.
    """
    view = snapshot.viewport.rect
    visible: set[int] = {
        node.id for node in snapshot.root.walk() if node.bbox.intersects(view)
    }

    keep: set[int] = set()

    def mark(node: AXNode) -> bool:
        kept_child = False
        for child in node.children:
            kept_child = mark(child) or kept_child
        if node.id in visible or kept_child:
            keep.add(node.id)
            return True
        return False

    mark(snapshot.root)

    lines: list[str] = []

    def visit(node: AXNode, depth: int) -> None:
        if node.id not in keep:
            return
        lines.append(_node_line(node, depth))
        for child in node.children:
            visit(child, depth + 1)

    visit(snapshot.root, 0)
    excluded = sum(1 for _ in snapshot.root.walk()) - len(keep)
    lines.append(f"(+{excluded} elements off-screen)")
    return "\n".join(lines)
