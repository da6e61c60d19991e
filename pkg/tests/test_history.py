import math
import random

import pytest
from hypothesis import given, strategies as st

from deskagent.action_space import Action
from deskagent.history import (
    ELISION_TEMPLATE,
    BudgetTooSmall,
    ContextBudget,
    Step,
    compose_context,
    dump_trajectory,
    load_trajectory,
    token_count,
)

from conftest import FIXTURES


def make_step(i, obs="x" * 200, diff="small diff"):
    return Step(
        index=i,
        thought=f"thinking about step {i}",
        action=Action("click", target_id=i + 2),
        observation_full=obs,
        diff_from_prev=diff,
        result_note="ok",
    )


@given(st.text(max_size=4000))
def test_token_count_is_ceil_chars_over_four(text):
    assert token_count(text) == math.ceil(len(text) / 4)


def test_budget_rejects_nonpositive():
    with pytest.raises(ValueError):
        ContextBudget(0)
    with pytest.raises(ValueError):
        ContextBudget(-5)


def test_diff_mode_omits_past_observations():
    steps = [make_step(i) for i in range(3)]
    text = compose_context(steps, "current page", "(no changes)", ContextBudget(10_000))
    assert "x" * 200 not in text
    assert "Change: small diff" in text
    assert text.count("Step ") == 3


def test_full_mode_includes_past_observations():
    steps = [make_step(i) for i in range(3)]
    text = compose_context(
        steps, "current page", "(no changes)", ContextBudget(10_000), mode="full_history"
    )
    assert text.count("x" * 200) == 3
    assert "Change: small diff" not in text


def test_current_observation_always_last_and_verbatim():
    steps = [make_step(i) for i in range(2)]
    text = compose_context(steps, "THE CURRENT OBS", "THE DIFF", ContextBudget(10_000))
    assert text.endswith("Changes since last step:\nTHE DIFF")
    assert "Current observation:\nTHE CURRENT OBS" in text


def test_unknown_mode_rejected():
    with pytest.raises(ValueError):
        compose_context([], "obs", "diff", ContextBudget(100), mode="middle_out")


def test_budget_too_small_for_current_obs():
    with pytest.raises(BudgetTooSmall):
        compose_context([], "y" * 500, "", ContextBudget(10))


def test_elision_drops_oldest_first():
    steps = [make_step(i, diff=f"diff body {i} " + "z" * 120) for i in range(8)]
    generous = compose_context(steps, "obs", "d", ContextBudget(100_000))
    assert "elided" not in generous

    tight = compose_context(steps, "obs", "d", ContextBudget(120))
    assert "elided" in tight
    kept = [i for i in range(8) if f"diff body {i} " in tight]
    dropped = [i for i in range(8) if i not in kept]
    assert dropped == list(range(len(dropped)))  # a prefix of the steps
    k = len(dropped)
    assert ELISION_TEMPLATE.format(k=k) in tight
    assert token_count(tight) <= 120


def test_elision_marker_counts_match_every_budget():
    steps = [make_step(i, diff="q" * 80) for i in range(6)]
    for budget in range(40, 600, 13):
        try:
            text = compose_context(steps, "obs", "d", ContextBudget(budget))
        except BudgetTooSmall:
            continue
        if "elided" in text:
            k = int(text.split("[... ")[1].split(" earlier")[0])
            assert text.count("Step ") == 6 - k


def test_result_note_rendered_only_when_present():
    quiet = make_step(0)
    quiet.result_note = ""
    text = compose_context([quiet], "obs", "d", ContextBudget(10_000))
    assert "Result:" not in text


def test_trajectory_ndjson_round_trip():
    rng = random.Random(77)
    steps = []
    for i in range(25):
        s = make_step(i, obs=f"obs {rng.random()}", diff=f"diff {rng.random()}")
        if i % 5 == 4:
            s.action = None
        steps.append(s)
    again = load_trajectory(dump_trajectory(steps))
    assert again == steps


def test_shipped_trajectory_loads_and_compresses():
    steps = load_trajectory((FIXTURES / "trajectory_20.ndjson").read_text())
    assert len(steps) == 20
    assert steps[0].index == 0
    # Step 0 carries the initial observation in its diff slot.
    assert steps[0].diff_from_prev == steps[0].observation_full

    budget = ContextBudget(100_000)
    for n in range(2, 21):
        prefix = steps[:n]
        cur = prefix[-1].observation_full
        diff = prefix[-1].diff_from_prev
        lean = compose_context(prefix[:-1], cur, diff, budget)
        fat = compose_context(prefix[:-1], cur, diff, budget, mode="full_history")
        assert token_count(lean) < token_count(fat)
