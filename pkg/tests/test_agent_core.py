import json

import pytest

from deskagent.action_space import Action, format_action
from deskagent.agent_core import (
    AllSamplesMalformed,
    ScaffoldConfig,
    TaskRun,
    assert_no_state_change,
    parse_choices,
    propose_action,
    run_task,
)
from deskagent.history import ContextBudget
from deskagent.model_client import CallableModelClient
from deskagent.page_model import AXSnapshot, Rect, Viewport
from deskagent.workspace import WikiPage, Workspace

from conftest import build_node, build_snapshot


class MiniEnv:
    """Two-element page; click on [2] flips the goal flag."""

    def __init__(self, mode="click"):
        self.mode = mode
        self.clicked = False
        self.seq = 0

    def observe(self):
        snap = build_snapshot([
            build_node(2, role="button", name="Done"),
            build_node(3, role="status", name="", text="on" if self.clicked else "off"),
        ])
        snap.seq = self.seq
        return snap

    def step(self, action):
        self.seq += 1
        if action.kind == "click" and action.target_id == 2:
            self.clicked = True
        return self.observe(), "ok"

    def success(self, answer=None):
        if self.mode == "answer":
            return answer is not None and "42" in answer
        return self.clicked

    def fork(self):
        child = MiniEnv(self.mode)
        child.clicked = self.clicked
        return child


def scripted(outputs):
    """Client returning canned outputs in order, holding on the last."""
    state = {"i": 0}

    def fn(messages):
        out = outputs[min(state["i"], len(outputs) - 1)]
        state["i"] += 1
        return out

    return CallableModelClient(fn)


def cfg(**kw):
    kw.setdefault("n_samples", 1)
    kw.setdefault("max_steps", 6)
    kw.setdefault("budget", ContextBudget(50_000))
    return ScaffoldConfig(**kw)


def test_config_validation():
    with pytest.raises(ValueError):
        ScaffoldConfig(n_samples=0)
    with pytest.raises(ValueError):
        ScaffoldConfig(n_samples=6)
    with pytest.raises(ValueError):
        ScaffoldConfig(observation_mode="binocular")
    with pytest.raises(ValueError):
        ScaffoldConfig(history_mode="none")


def test_vote_plurality_wins():
    client = scripted([])
    client.complete = lambda m, n=1, t=0.0: [
        "ACTION: click(2)",
        "ACTION: click(3)",
        "ACTION: click(2)",
    ]
    action, tally = propose_action("ctx", client, 3)
    assert action == Action("click", target_id=2)
    assert tally["click(2)"] == 2 and tally["click(3)"] == 1


def test_vote_drops_malformed_samples():
    client = scripted([])
    client.complete = lambda m, n=1, t=0.0: [
        "no action at all",
        "ACTION: click(5)",
        "ACTION: bogus(1)",
    ]
    action, tally = propose_action("ctx", client, 3)
    assert action == Action("click", target_id=5)
    assert sum(tally.values()) == 1


def test_vote_tie_breaks_to_earliest_sample():
    client = scripted([])
    client.complete = lambda m, n=1, t=0.0: [
        "ACTION: click(9)",
        "ACTION: click(2)",
        "ACTION: click(2)",
        "ACTION: click(9)",
    ]
    action, _ = propose_action("ctx", client, 4)
    assert action.target_id == 9


def test_vote_all_malformed_raises():
    client = scripted([])
    client.complete = lambda m, n=1, t=0.0: ["nope", "also nope"]
    with pytest.raises(AllSamplesMalformed):
        propose_action("ctx", client, 2)
    with pytest.raises(ValueError):
        propose_action("ctx", client, 0)


def test_parse_choices():
    assert parse_choices('CHOICES: ["a", "b"]') == ["a", "b"]
    assert parse_choices('  CHOICES: ["x"]  ') == ["x"]
    assert parse_choices("plain answer") is None
    assert parse_choices("CHOICES: not json") is None
    assert parse_choices("CHOICES: []") is None
    assert parse_choices('CHOICES: [1, 2]') is None


def test_run_succeeds_via_env_action():
    env = MiniEnv("click")
    run = run_task("flip the flag", env, None, cfg(),
                   scripted(["I see the button.\nACTION: click(2)"]), task_id="t1")
    assert run.status == "success"
    assert run.task_id == "t1"
    assert len(run.steps) == 1
    assert run.steps[0].action == Action("click", target_id=2)
    assert run.steps[0].thought == "I see the button."
    # step 0 carries its observation in the diff slot
    assert run.steps[0].diff_from_prev == run.steps[0].observation_full


def test_run_succeeds_via_judged_answer():
    env = MiniEnv("answer")
    run = run_task("what is the answer", env, None, cfg(),
                   scripted(['ACTION: answer("it is 42")']))
    assert run.status == "success"
    assert run.answer == "it is 42"


def test_wrong_answer_fails_when_judged():
    env = MiniEnv("answer")
    run = run_task("what is the answer", env, None, cfg(),
                   scripted(['ACTION: answer("no idea")']))
    assert run.status == "failure"


def test_unjudged_answer_is_accepted():
    env = MiniEnv("answer")
    run = run_task("sub-goal", env, None, cfg(),
                   scripted(['ACTION: answer("no idea")']), judge_answers=False)
    assert run.status == "success"


def test_malformed_steps_note_and_continue():
    env = MiniEnv("click")
    run = run_task("flip", env, None, cfg(max_steps=3),
                   scripted(["gibberish", "more gibberish", "ACTION: click(2)"]))
    assert run.status == "success"
    assert len(run.steps) == 3
    assert run.steps[0].action is None
    assert run.steps[0].result_note.startswith("error:")


def test_budget_exhausted_when_never_done():
    env = MiniEnv("click")
    run = run_task("flip", env, None, cfg(max_steps=4), scripted(["ACTION: click(3)"]))
    assert run.status == "budget_exhausted"
    assert len(run.steps) == 4


def test_env_error_is_step_local():
    env = MiniEnv("click")

    def boom(action):
        raise RuntimeError("element exploded")

    env.step = boom
    run = run_task("flip", env, None, cfg(max_steps=2), scripted(["ACTION: click(2)"]))
    assert run.status == "budget_exhausted"
    assert "element exploded" in run.steps[0].result_note


def test_search_workspace_injects_tool_observation():
    ws = Workspace(clock=iter(range(1, 10_000)).__next__)
    ws.upsert_user(WikiPage(title="Ordering hardware",
                            body="Use the catalog portal to order laptops."))
    env = MiniEnv("click")
    run = run_task("flip", env, ws, cfg(max_steps=3), scripted([
        'ACTION: search_workspace("order laptops")',
        "ACTION: click(2)",
    ]))
    assert run.status == "success"
    obs = run.steps[1].observation_full
    assert obs.startswith("Workspace search results for 'order laptops':")
    assert "Ordering hardware" in obs
    assert "workspace search returned 1 results" in run.steps[0].result_note


def test_search_without_workspace_yields_no_results():
    env = MiniEnv("click")
    run = run_task("flip", env, None, cfg(max_steps=2), scripted([
        'ACTION: search_workspace("anything")',
        "ACTION: click(2)",
    ]))
    assert "(no results)" in run.steps[1].observation_full


def test_request_full_tree_switches_one_observation():
    class TallEnv(MiniEnv):
        def observe(self):
            snap = build_snapshot([
                build_node(2, role="button", name="Done"),
                build_node(3, role="text", name="Hidden", y=5_000),
            ])
            snap.root.bbox = Rect(0, 0, 1280, 6_000)
            snap.seq = self.seq
            return snap

    env = TallEnv("click")
    run = run_task("flip", env, None, cfg(max_steps=3), scripted([
        "ACTION: request_full_tree()",
        "ACTION: click(2)",
    ]))
    assert "[3]" not in run.steps[0].observation_full  # lazy: below fold hidden
    assert "[3]" in run.steps[1].observation_full      # full tree on demand
    assert run.status == "success"


def test_full_observation_mode_shows_everything():
    class TallEnv(MiniEnv):
        def observe(self):
            snap = build_snapshot([
                build_node(2, role="button", name="Done"),
                build_node(3, role="text", name="Hidden", y=5_000),
            ])
            snap.root.bbox = Rect(0, 0, 1280, 6_000)
            snap.seq = self.seq
            return snap

    env = TallEnv("click")
    run = run_task("flip", env, None, cfg(observation_mode="full"),
                   scripted(["ACTION: click(2)"]))
    assert "[3]" in run.steps[0].observation_full


def test_decompose_spawns_judged_parent_and_unjudged_children():
    env = MiniEnv("answer")

    def policy(messages):
        prompt = messages[-1]["content"]
        if "Task: sub one" in prompt:
            return 'ACTION: answer("first part")'
        if "Task: sub two" in prompt:
            return 'ACTION: answer("and 42")'
        return 'ACTION: decompose("sub one", "sub two")'

    run = run_task("big goal", env, None, cfg(), CallableModelClient(policy))
    assert [r.instruction for r in run.sub_runs] == ["sub one", "sub two"]
    assert all(r.status == "success" for r in run.sub_runs)  # unjudged
    assert run.answer == "first part\nand 42"
    assert run.status == "success"  # judged: joined answer contains 42


def test_nested_decomposition_is_rejected():
    env = MiniEnv("answer")

    def policy(messages):
        prompt = messages[-1]["content"]
        if "Task: inner" in prompt:
            return 'ACTION: decompose("a", "b")'
        if "Task: big" in prompt:
            return 'ACTION: decompose("inner", "inner2")'
        return 'ACTION: answer("42")'

    run = run_task("big", env, None, cfg(), CallableModelClient(policy))
    inner = run.sub_runs[0]
    assert any("disabled" in s.result_note for s in inner.steps)


def test_choices_flow_resumes_with_selection():
    env = MiniEnv("answer")
    options = ["blue", "green 42"]
    picked = {}

    def handler(opts):
        picked["options"] = opts
        return 1

    ask = format_action(Action("answer", argument=f"CHOICES: {json.dumps(options)}"))
    run = run_task("pick one", env, None, cfg(max_steps=3), scripted([
        ask,
        'ACTION: answer("you chose green 42")',
    ]), choice_handler=handler)
    assert picked["options"] == options
    assert run.steps[1].observation_full == "User selected option 1: green 42"
    assert run.status == "success"


def test_choices_without_handler_is_a_plain_answer():
    env = MiniEnv("answer")
    run = run_task("pick", env, None, cfg(), scripted([
        'ACTION: answer("CHOICES: [\\"a\\", \\"b\\"]")',
    ]))
    assert run.status == "failure"  # judged as a literal answer, no 42
    assert run.answer.startswith("CHOICES:")


def test_choice_handler_failure_fails_the_run():
    env = MiniEnv("answer")

    def handler(opts):
        raise TimeoutError("nobody picked")

    run = run_task("pick", env, None, cfg(), scripted([
        'ACTION: answer("CHOICES: [\\"a\\", \\"b\\"]")',
    ]), choice_handler=handler)
    assert run.status == "failure"
    assert "nobody picked" in run.steps[0].result_note


def test_live_run_is_populated_in_place():
    env = MiniEnv("click")
    shell = TaskRun(task_id="", instruction="")
    out = run_task("flip", env, None, cfg(), scripted(["ACTION: click(2)"]),
                   task_id="t9", live_run=shell)
    assert out is shell
    assert shell.task_id == "t9"
    assert shell.status == "success"


def test_task_run_json_round_trips_as_dict():
    env = MiniEnv("click")
    run = run_task("flip", env, None, cfg(), scripted(["ACTION: click(2)"]))
    assert json.loads(run.to_json()) == run.to_dict()


def test_assert_no_state_change_ignores_seq():
    a = build_snapshot([build_node(2)])
    b = build_snapshot([build_node(2)])
    b.seq = 10
    assert assert_no_state_change(a, b)
    c = build_snapshot([build_node(2, text="different")])
    assert not assert_no_state_change(a, c)
