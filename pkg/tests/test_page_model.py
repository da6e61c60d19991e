import random

import pytest
from hypothesis import given, strategies as st

from deskagent.page_model import (
    AXNode,
    AXSnapshot,
    DuplicateId,
    Rect,
    Viewport,
    render_full,
    render_viewport,
)

from conftest import FIXTURES, build_node, build_snapshot, random_snapshot


def brute_force_intersects(a: Rect, b: Rect) -> bool:
    # Overlap area computed directly; positive area means intersection.
    w = min(a.x + a.width, b.x + b.width) - max(a.x, b.x)
    h = min(a.y + a.height, b.y + b.height) - max(a.y, b.y)
    return w > 0 and h > 0


rects = st.builds(
    Rect,
    st.integers(-50, 50),
    st.integers(-50, 50),
    st.integers(0, 60),
    st.integers(0, 60),
)


@given(rects, rects)
def test_intersects_matches_area_oracle(a, b):
    assert a.intersects(b) == brute_force_intersects(a, b)
    assert a.intersects(b) == b.intersects(a)


def test_touching_edges_do_not_intersect():
    a = Rect(0, 0, 10, 10)
    assert not a.intersects(Rect(10, 0, 10, 10))
    assert not a.intersects(Rect(0, 10, 10, 10))
    assert a.intersects(Rect(9, 9, 10, 10))


def test_walk_is_preorder():
    snap = build_snapshot([
        build_node(2, children=[build_node(3), build_node(4)]),
        build_node(5),
    ])
    assert [n.id for n in snap.root.walk()] == [1, 2, 3, 4, 5]


def test_node_map_rejects_duplicate_ids():
    snap = build_snapshot([build_node(2), build_node(2)])
    with pytest.raises(DuplicateId):
        snap.node_map()


def test_snapshot_json_round_trip():
    rng = random.Random(11)
    for _ in range(25):
        snap = random_snapshot(rng)
        again = AXSnapshot.from_json(snap.to_json())
        assert again.to_dict() == snap.to_dict()


def test_render_full_line_format():
    snap = build_snapshot([
        build_node(2, role="button", name="Save"),
        build_node(3, role="text", name="status", text="3 items"),
    ])
    lines = render_full(snap).splitlines()
    assert lines[0] == "[1] document 'Page'"
    assert lines[1] == "  [2] button 'Save'"
    assert lines[2] == "  [3] text 'status' 3 items"


def test_render_viewport_excludes_below_fold_and_counts():
    snap = build_snapshot([
        build_node(2, y=100),
        build_node(3, y=900),
        build_node(4, y=1500),
    ])
    text = render_viewport(snap)
    assert "[2]" in text
    assert "[3]" not in text and "[4]" not in text
    assert text.endswith("(+2 elements off-screen)")


def test_render_viewport_keeps_ancestors_of_visible_nodes():
    # Container starts below the fold top edge but its child is visible.
    container = build_node(2, y=3000, children=[build_node(3, y=200)])
    snap = build_snapshot([container])
    text = render_viewport(snap)
    assert "[2]" in text and "[3]" in text


def test_render_viewport_zero_count_when_everything_visible():
    snap = build_snapshot([build_node(2, y=10), build_node(3, y=60)])
    text = render_viewport(snap)
    assert text.endswith("(+0 elements off-screen)")
    assert text == render_full(snap) + "\n(+0 elements off-screen)"


def test_excluded_plus_printed_equals_total():
    rng = random.Random(23)
    for _ in range(40):
        snap = random_snapshot(rng)
        text = render_viewport(snap)
        lines = text.splitlines()
        k = int(lines[-1].split("+")[1].split(" ")[0])
        printed = len(lines) - 1
        assert printed + k == sum(1 for _ in snap.root.walk())


def test_render_viewport_respects_scroll():
    snap = build_snapshot([build_node(2, y=100), build_node(3, y=900)])
    snap.viewport = Viewport(0, 800, 1280, 720)
    text = render_viewport(snap)
    assert "[3]" in text
    assert "[2]" not in text


def test_viewport_render_never_exceeds_full():
    rng = random.Random(5)
    for _ in range(50):
        snap = random_snapshot(rng)
        assert len(render_viewport(snap)) <= len(render_full(snap)) + 40


def test_catalog_home_goldens():
    snap = AXSnapshot.from_json((FIXTURES / "catalog_home.ax.json").read_text())
    assert render_viewport(snap) == (FIXTURES / "catalog_home.txt").read_text().rstrip("\n")


def test_validate_passes_on_fixture():
    snap = AXSnapshot.from_json((FIXTURES / "catalog_home.ax.json").read_text())
    snap.validate()
