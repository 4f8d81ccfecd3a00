import random

import pytest

from mwmsr.filtering import (
    FilterResult,
    mwmsr_update,
    nominal_update,
    own_message,
    partition_extremes,
    removal_prefix_length,
    select_removal_set,
)
from mwmsr.graph import Graph, enumerate_in_paths, generate_cycle, parse_graph
from mwmsr.messaging import Message, cover_masks, message, minimum_cover_size


def w_msr_oracle(own, neighbor_values, f):
    """Brute one-hop W-MSR: drop up to f values above own and up to f below,
    then average the rest together with own. Returns (new value, removed)."""
    highs = sorted((v for v in neighbor_values if v > own), reverse=True)
    lows = sorted(v for v in neighbor_values if v < own)
    removed = highs[:f] + lows[:f]
    kept = [own] + [v for v in neighbor_values if v == own] + highs[f:] + lows[f:]
    return sum(kept) / len(kept), sorted(removed)


def worked_example_messages(five_node):
    """Values received by node 0 when node 2 forges 100 everywhere:
    sorted input {2, 4, 8, 8, 10, 100, 100}."""
    x0 = [2.0, 4.0, 100.0, 8.0, 10.0]
    msgs = []
    for p in enumerate_in_paths(five_node, 0, 2):
        forged = 2 in p.nodes[:-1]
        msgs.append(Message(100.0 if forged else x0[p.source], p))
    return msgs


def test_partition_worked_example(five_node):
    msgs = worked_example_messages(five_node) + [own_message(2.0, 0)]
    high, low = partition_extremes(msgs, 2.0)
    assert sorted(m.value for m in high) == [4.0, 8.0, 8.0, 10.0, 100.0, 100.0]
    assert low == ()
    # most-extreme first, ties by (originator, path)
    assert [m.value for m in high[:2]] == [100.0, 100.0]


def test_partition_all_equal():
    msgs = [message(5.0, (j, 0)) for j in (1, 2)] + [own_message(5.0, 0)]
    assert partition_extremes(msgs, 5.0) == ((), ())


def test_partition_strict():
    msgs = [message(1.0, (1, 0)), message(5.0, (2, 0)), message(9.0, (3, 0))]
    high, low = partition_extremes(msgs, 5.0)
    assert [m.value for m in high] == [9.0]
    assert [m.value for m in low] == [1.0]


def test_select_removal_worked_example(five_node):
    msgs = worked_example_messages(five_node)
    high, _ = partition_extremes(msgs, 2.0)
    removed = select_removal_set(high, 1, 0)
    assert {(m.value, m.path.nodes) for m in removed} == {
        (100.0, (2, 0)),
        (100.0, (3, 2, 0)),
    }


def test_select_removal_empty_and_negative_f():
    assert select_removal_set((), 3, 0) == ()
    with pytest.raises(ValueError):
        removal_prefix_length([], -1)


def test_select_removal_one_hop_case():
    # ring node 1 with own 2: the single larger value has cover size 1 = f
    removed = select_removal_set((message(4.0, (2, 1)),), 1, 1)
    assert [m.value for m in removed] == [4.0]


def test_update_worked_example(five_node):
    msgs = worked_example_messages(five_node)
    new, result = mwmsr_update(2.0, msgs, 1, 0)
    assert new == sum([2.0, 4.0, 8.0, 8.0, 10.0]) / 5 == 6.4
    assert {(m.value, m.path.nodes) for m in result.removed_high} == {
        (100.0, (2, 0)),
        (100.0, (3, 2, 0)),
    }
    assert result.removed_low == ()
    assert sorted(m.value for m in result.kept) == [2.0, 4.0, 8.0, 8.0, 10.0]
    assert result.weight == 1.0 / 5


def test_update_identity_with_only_own_value():
    new, result = mwmsr_update(7.5, [], 0, 3)
    assert new == 7.5
    assert result.kept == (own_message(7.5, 3),)


def test_update_one_hop_ring_case():
    # values [1, 2, 4, 6] on a 4-ring, node 1 (own 2) hears 1 and 4
    msgs = [message(1.0, (0, 1)), message(4.0, (2, 1))]
    new, result = mwmsr_update(2.0, msgs, 1, 1)
    assert new == 2.0
    assert [m.value for m in result.removed_high] == [4.0]
    assert [m.value for m in result.removed_low] == [1.0]


def test_update_rejects_wrong_own_message():
    with pytest.raises(ValueError, match="own-value"):
        mwmsr_update(2.0, [own_message(3.0, 0)], 1, 0)


def test_own_value_never_removed():
    msgs = [message(100.0, (j, 0)) for j in (1, 2, 3)]
    new, result = mwmsr_update(0.0, msgs, 3, 0)
    assert own_message(0.0, 0) in result.kept


def test_equal_values_never_removed():
    msgs = [message(2.0, (1, 0)), message(9.0, (2, 0))]
    _, result = mwmsr_update(2.0, msgs, 2, 0)
    assert message(2.0, (1, 0)) in result.kept


def test_nominal_update():
    assert nominal_update(5.0, [], []) == 5.0
    msgs = [message(0.0, (1, 0)), message(10.0, (2, 0))]
    assert nominal_update(5.0, msgs, [0.25, 0.25]) == 5.0
    assert nominal_update(2.0, [message(8.0, (1, 0))], [0.5]) == 5.0
    assert nominal_update(5.0, msgs, [0.0, 0.0]) == 5.0


def test_nominal_update_weight_violations():
    msgs = [message(0.0, (1, 0))]
    with pytest.raises(ValueError):
        nominal_update(5.0, msgs, [-0.1])
    with pytest.raises(ValueError):
        nominal_update(5.0, msgs, [1.5])
    with pytest.raises(ValueError):
        nominal_update(5.0, msgs, [])


def random_instance(rng, graph_pool, max_f=2):
    g, dest, l = rng.choice(graph_pool)
    paths = enumerate_in_paths(g, dest, l)
    msgs = [Message(rng.randint(0, 24) / 2.0, p) for p in paths]
    own = rng.randint(0, 24) / 2.0
    return g, dest, msgs, own, rng.randint(0, max_f)


def graph_pool(rng, count=12, l_max=3):
    pool = []
    while len(pool) < count:
        n = rng.randint(3, 8)
        edges = frozenset(
            (a, b)
            for a in range(n)
            for b in range(n)
            if a != b and rng.random() < 0.5
        )
        g = Graph(n, edges)
        dest = rng.randrange(n)
        if g.in_neighbors(dest):
            pool.append((g, dest, rng.randint(1, l_max)))
    return pool


def test_one_hop_matches_w_msr_oracle():
    rng = random.Random(11)
    for _ in range(200):
        n = rng.randint(2, 8)
        dest = 0
        values = [rng.randint(0, 20) / 2.0 for _ in range(n - 1)]
        msgs = [message(v, (j + 1, dest)) for j, v in enumerate(values)]
        own = rng.randint(0, 20) / 2.0
        f = rng.randint(0, 2)
        new, result = mwmsr_update(own, msgs, f, dest)
        want, want_removed = w_msr_oracle(own, values, f)
        assert new == want
        got_removed = sorted(
            [m.value for m in result.removed_high]
            + [m.value for m in result.removed_low]
        )
        assert got_removed == want_removed


def test_filter_invariants_random_multihop():
    rng = random.Random(5)
    pool = graph_pool(rng)
    for _ in range(150):
        g, dest, msgs, own, f = random_instance(rng, pool)
        new, result = mwmsr_update(own, msgs, f, dest)
        kept_vals = [m.value for m in result.kept]
        assert min(kept_vals) <= new <= max(kept_vals)
        for side in (result.removed_high, result.removed_low):
            if side:
                assert minimum_cover_size(side, dest).size <= f
        # maximality: the next message in canonical order forces cover f+1
        high, low = partition_extremes(list(msgs) + [own_message(own, dest)], own)
        for side, removed in ((high, result.removed_high), (low, result.removed_low)):
            if removed != side:
                bigger = side[: len(removed) + 1]
                assert minimum_cover_size(bigger, dest, bound=f).capped


def test_filter_permutation_invariance():
    rng = random.Random(3)
    pool = graph_pool(rng, count=6)
    for _ in range(40):
        g, dest, msgs, own, f = random_instance(rng, pool)
        new, result = mwmsr_update(own, msgs, f, dest)
        shuffled = msgs[:]
        rng.shuffle(shuffled)
        new2, result2 = mwmsr_update(own, shuffled, f, dest)
        assert new == new2
        assert result == result2


def test_removal_prefix_against_exact_cover():
    rng = random.Random(17)
    pool = graph_pool(rng, count=6)
    for _ in range(60):
        g, dest, msgs, own, f = random_instance(rng, pool)
        high, _ = partition_extremes(msgs + [own_message(own, dest)], own)
        masks = cover_masks(high, dest)
        cut = removal_prefix_length(masks, f)
        if cut < len(masks):
            assert minimum_cover_size(high[:cut], dest).size == f
            assert minimum_cover_size(high[: cut + 1], dest).size == f + 1
        else:
            assert minimum_cover_size(high, dest).size <= f


def test_filter_result_weight():
    r = FilterResult((), (), (own_message(1.0, 0), message(3.0, (1, 0))))
    assert r.weight == 0.5
