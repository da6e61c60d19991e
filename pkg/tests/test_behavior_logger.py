import random

import pytest

from deskagent.behavior_logger import (
    BehaviorEvent,
    BehaviorLog,
    ConsentState,
    UnorderedInput,
    dedup_compress,
)


def ev(ts, kind="page_view", site="a.example", digest="d0", session="s1", payload=None):
    return BehaviorEvent(
        ts=ts,
        session_id=session,
        tab_id="tab-1",
        site=site,
        url=f"https://{site}/p",
        kind=kind,
        element={"role": "button", "name": "Go", "id": 4} if kind == "click" else None,
        payload=payload,
        snapshot_digest=digest,
    )


def test_consent_gate_default_off(tmp_path):
    log = BehaviorLog(tmp_path)
    consent = ConsentState()
    assert log.record(ev(1), consent) is False
    assert log.read_session("s1") == []
    assert not log.session_path("s1").exists()


def test_consent_pause_stops_recording(tmp_path):
    log = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True, consent_ts=0)
    assert log.record(ev(1), consent) is True
    consent.paused = True
    assert log.record(ev(2), consent) is False
    consent.paused = False
    assert log.record(ev(3), consent) is True
    assert [e.ts for e in log.read_session("s1")] == [1, 3]


def test_record_rejects_time_travel(tmp_path):
    log = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True)
    log.record(ev(100), consent)
    with pytest.raises(UnorderedInput):
        log.record(ev(99), consent)
    log.record(ev(100), consent)  # equal timestamps are allowed


def test_per_session_ordering_is_independent(tmp_path):
    log = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True)
    log.record(ev(100, session="s1"), consent)
    log.record(ev(5, session="s2"), consent)  # other session, fine
    assert log.sessions() == ["s1", "s2"]


def test_ndjson_round_trip(tmp_path):
    log = BehaviorLog(tmp_path)
    consent = ConsentState(enabled=True)
    events = [
        ev(1),
        ev(2, kind="click"),
        ev(3, kind="input", payload="hello"),
        ev(4, kind="tab_switch"),
        ev(5, kind="screenshot_ref", payload="shot-001"),
    ]
    for e in events:
        log.record(e, consent)
    assert log.read_session("s1") == events


def test_event_dict_round_trip():
    e = ev(7, kind="input", payload="text")
    assert BehaviorEvent.from_dict(e.to_dict()) == e


def test_dedup_collapses_consecutive_same_page_views():
    events = [ev(1), ev(2), ev(3), ev(4, kind="click"), ev(5)]
    out = dedup_compress(events)
    assert [e.kind for e in out] == ["page_view", "click", "page_view"]
    assert out[0].repeat_count == 3
    assert out[0].ts == 1  # first occurrence survives
    assert out[2].repeat_count == 1


def test_dedup_respects_site_and_digest_boundaries():
    events = [ev(1, digest="d0"), ev(2, digest="d1"), ev(3, digest="d1", site="b.example")]
    out = dedup_compress(events)
    assert len(out) == 3
    assert all(e.repeat_count == 1 for e in out)


def test_dedup_requires_ordered_input():
    with pytest.raises(UnorderedInput):
        dedup_compress([ev(5), ev(4)])


def test_dedup_does_not_mutate_input():
    events = [ev(1), ev(2)]
    dedup_compress(events)
    assert events[0].repeat_count == 1


def random_events(rng, n):
    ts = 0
    out = []
    for _ in range(n):
        ts += rng.randint(0, 50)
        kind = rng.choice(["page_view", "page_view", "click", "input"])
        out.append(ev(
            ts,
            kind=kind,
            site=rng.choice(["a.example", "b.example"]),
            digest=rng.choice(["d0", "d1"]),
        ))
    return out


def test_dedup_matches_run_length_oracle():
    rng = random.Random(61)
    for _ in range(200):
        events = random_events(rng, rng.randint(0, 30))
        out = dedup_compress(events)

        # Oracle: total multiplicity is conserved and no two adjacent
        # outputs are collapsible.
        assert sum(e.repeat_count for e in out) == sum(e.repeat_count for e in events)
        for a, b in zip(out, out[1:]):
            collapsible = (
                a.kind == b.kind == "page_view"
                and a.site == b.site
                and a.snapshot_digest == b.snapshot_digest
            )
            assert not collapsible
        # Non-page_view events pass through verbatim, preserving order.
        assert [e for e in out if e.kind != "page_view"] == [
            e for e in events if e.kind != "page_view"
        ]


def test_dedup_is_idempotent():
    rng = random.Random(62)
    for _ in range(100):
        events = random_events(rng, rng.randint(0, 25))
        once = dedup_compress(events)
        assert dedup_compress(once) == once
