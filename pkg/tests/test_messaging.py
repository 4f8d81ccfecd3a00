import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwmsr.graph import Path
from mwmsr.messaging import (
    DUPLICATE,
    MISSING,
    UNKNOWN_PATH,
    Message,
    classify_path_anomaly,
    cover_masks,
    cover_size_at_most,
    dump_log,
    is_cover,
    message,
    minimum_cover_size,
)


def brute_force_min_cover(msgs, dest):
    """Independent oracle: enumerate candidate subsets by ascending size."""
    node_sets = [set(m.path.nodes) - {dest} for m in msgs]
    candidates = sorted(set().union(*node_sets)) if node_sets else []
    if not node_sets:
        return 0, frozenset()
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, size):
            chosen = set(combo)
            if all(chosen & ns for ns in node_sets):
                return size, frozenset(combo)
    raise AssertionError("uncoverable message set")


# --- the worked relay example: paths into node 0 (1-based node 1) ---
M_3_1 = message(100.0, (2, 0))
M_4_3_1 = message(100.0, (3, 2, 0))
M_5_1 = message(10.0, (4, 0))


def test_is_cover_worked_example():
    assert is_cover([M_4_3_1, M_3_1], {2}, 0)
    assert not is_cover([M_4_3_1, M_3_1], {3}, 0)
    assert is_cover([], set(), 0)


def test_is_cover_rejects_destination_candidate():
    with pytest.raises(ValueError, match="destination"):
        is_cover([M_3_1], {0, 2}, 0)
    with pytest.raises(ValueError, match="destination"):
        is_cover([M_3_1], {2}, 1)


def test_minimum_cover_worked_example():
    r = minimum_cover_size([M_4_3_1, M_3_1], 0)
    assert (r.size, r.witness, r.capped) == (1, frozenset({2}), False)
    r = minimum_cover_size([M_4_3_1, M_3_1, M_5_1], 0)
    assert (r.size, r.witness) == (2, frozenset({2, 4}))
    r = minimum_cover_size([], 0)
    assert (r.size, r.witness) == (0, frozenset())


def test_minimum_cover_cap():
    msgs = [message(1.0, (j, 0)) for j in range(1, 6)]  # five disjoint one-hop paths
    r = minimum_cover_size(msgs, 0, bound=2)
    assert r.capped and r.size == 3
    assert minimum_cover_size(msgs, 0).size == 5


def test_minimum_cover_rejects_own_message():
    with pytest.raises(ValueError, match="no coverable node"):
        minimum_cover_size([message(1.0, (0,))], 0)


def test_cover_decision_matches_exact():
    masks = cover_masks([M_4_3_1, M_3_1, M_5_1], 0)
    assert not cover_size_at_most(masks, 1)
    assert cover_size_at_most(masks, 2)
    assert not cover_size_at_most([], -1)
    assert cover_size_at_most([], 0)


def test_min_cover_matches_brute_force_random():
    rng = random.Random(2024)
    for trial in range(200):
        n = rng.randint(3, 8)
        dest = 0
        msgs = []
        for _ in range(rng.randint(1, 7)):
            length = rng.randint(1, min(3, n - 1))
            others = rng.sample(range(1, n), length)
            msgs.append(message(rng.random(), tuple(others) + (dest,)))
        got = minimum_cover_size(msgs, dest)
        want_size, _ = brute_force_min_cover(msgs, dest)
        assert got.size == want_size, (trial, msgs)
        assert is_cover(msgs, got.witness, dest)
        assert len(got.witness) == got.size


def test_monotone_under_message_addition():
    rng = random.Random(7)
    for _ in range(60):
        n = 7
        msgs = []
        for _ in range(rng.randint(2, 6)):
            length = rng.randint(1, 3)
            others = rng.sample(range(1, n), length)
            msgs.append(message(rng.random(), tuple(others) + (0,)))
        base = minimum_cover_size(msgs, 0).size
        extra = message(0.5, tuple(rng.sample(range(1, n), rng.randint(1, 3))) + (0,))
        grown = minimum_cover_size(msgs + [extra], 0).size
        assert base <= grown <= base + 1
        shrunk = minimum_cover_size(msgs[:-1], 0).size
        assert shrunk <= base


def test_common_node_gives_cover_one():
    msgs = [
        message(1.0, (5, 3, 0)),
        message(2.0, (4, 3, 0)),
        message(3.0, (3, 0)),
    ]
    assert minimum_cover_size(msgs, 0).size == 1


@given(st.lists(st.integers(min_value=1, max_value=10), min_size=1, max_size=6, unique=True))
@settings(max_examples=50, deadline=None)
def test_property_single_source_cover(one_hop_sources):
    msgs = [message(float(j), (j, 0)) for j in one_hop_sources]
    r = minimum_cover_size(msgs, 0)
    assert r.size == len(one_hop_sources)  # disjoint one-hop paths need one node each


def test_message_validation():
    with pytest.raises(ValueError):
        Message(float("nan"), Path((1, 0)))
    m = message(3.0, (2, 1, 0))
    assert m.originator == 2 and m.destination == 0


def test_log_serialization():
    text = dump_log([(0, M_3_1), (1, M_4_3_1)])
    lines = text.splitlines()
    first = json.loads(lines[0])
    assert first == {"step": 0, "value": 100.0, "path": [3, 1], "originator": 3}


# --- anomaly classification ---


def expected_paths():
    return [Path((2, 0)), Path((3, 2, 0)), Path((4, 0))]


def fault_free_log(steps):
    log = []
    for k in range(steps):
        for p in expected_paths():
            log.append((k, Message(1.0, p)))
    return log


def test_fault_free_sync_is_ok():
    report = classify_path_anomaly(fault_free_log(5), expected_paths(), tau=1)
    assert report.ok


def test_duplicate_detection():
    log = fault_free_log(3) + [(1, Message(9.0, Path((2, 0))))]
    report = classify_path_anomaly(log, expected_paths(), tau=1)
    kinds = {(e.kind, e.path, e.step) for e in report.events}
    assert (DUPLICATE, (2, 0), 1) in kinds
    assert (2, 0) in report.implicated


def test_unknown_path_detection():
    log = fault_free_log(2) + [(0, Message(5.0, Path((9, 0))))]
    report = classify_path_anomaly(log, expected_paths(), tau=1)
    assert any(e.kind == UNKNOWN_PATH and e.path == (9, 0) for e in report.events)


def test_missing_sync_flags_every_silent_step():
    log = [(k, Message(1.0, p)) for k in range(4) for p in expected_paths()[1:]]
    report = classify_path_anomaly(log, expected_paths(), tau=1, steps=(0, 3))
    missing = [e for e in report.events if e.kind == MISSING]
    assert [e.step for e in missing] == [0, 1, 2, 3]
    assert all(e.path == (2, 0) for e in missing)


def test_missing_async_requires_tau_gap():
    # path (2,0) silent at steps 2..4 only
    log = []
    for k in range(6):
        for p in expected_paths():
            if p.nodes == (2, 0) and 2 <= k <= 4:
                continue
            log.append((k, Message(1.0, p)))
    r3 = classify_path_anomaly(log, expected_paths(), tau=3, steps=(0, 5))
    assert [(e.step, e.kind) for e in r3.events] == [(4, MISSING)]
    r4 = classify_path_anomaly(log, expected_paths(), tau=4, steps=(0, 5))
    assert r4.ok


def test_loss_threshold_knob_defaults_off():
    log = []
    for k in range(10):
        for p in expected_paths():
            if p.nodes == (4, 0) and k % 2 == 0:
                continue  # 50% loss, never tau=5 consecutive
            log.append((k, Message(1.0, p)))
    quiet = classify_path_anomaly(log, expected_paths(), tau=5, steps=(0, 9))
    assert quiet.ok
    flagged = classify_path_anomaly(
        log, expected_paths(), tau=5, steps=(0, 9), loss_flag_threshold=0.3
    )
    assert (4, 0) in flagged.implicated and not flagged.events
