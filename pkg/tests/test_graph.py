import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mwmsr.graph import (
    Graph,
    GraphParseError,
    Path,
    enumerate_in_paths,
    format_graph,
    generate,
    generate_complete,
    generate_cycle,
    generate_grid,
    grid_coordinate,
    is_connected,
    l_hop_in_neighbors,
    longest_path_length,
    neighbors_from_paths,
    parse_graph,
    path_exists_in,
)


def test_parse_undirected_expands_both_directions():
    g = parse_graph("undirected 4\n1 2\n2 3\n3 4\n4 1\n")
    assert g.n == 4
    assert len(g.edges) == 8
    assert g.has_edge(0, 1) and g.has_edge(1, 0)


def test_parse_five_node_adjacency(five_node):
    assert set(five_node.in_neighbors(0)) == {1, 2, 4}
    assert set(five_node.in_neighbors(3)) == {1, 2, 4}


def test_parse_rejects_self_loop():
    with pytest.raises(GraphParseError, match="self-loop"):
        parse_graph("directed 2\n1 1\n")


def test_parse_error_carries_line_number():
    with pytest.raises(GraphParseError, match="line 3"):
        parse_graph("directed 3\n1 2\n5 1\n")
    with pytest.raises(GraphParseError, match="line 2"):
        parse_graph("undirected 3\nbogus\n")
    with pytest.raises(GraphParseError, match="empty"):
        parse_graph("# only a comment\n")


def test_parse_ignores_comments_and_duplicates():
    g = parse_graph("# c\nundirected 3\n1 2  # trailing\n2 1\n\n2 3\n")
    assert len(g.edges) == 4


def test_format_round_trip(five_node, c4):
    for g in (five_node, c4):
        assert parse_graph(format_graph(g)) == g
    d = parse_graph("directed 3\n1 2\n3 1\n")
    assert parse_graph(format_graph(d)) == d


def test_generate_cycle_and_complete():
    c = generate_cycle(4)
    assert all(len(c.in_neighbors(i)) == 2 for i in range(4))
    k5 = generate_complete(5)
    assert all(len(k5.in_neighbors(i)) == 4 for i in range(5))
    with pytest.raises(ValueError):
        generate_cycle(1)


def test_grid_neighbors_and_coordinates():
    g = generate_grid(10, 1.2)
    assert set(g.in_neighbors(0)) == {1, 10}
    assert grid_coordinate(23, 10) == (3, 2)
    with pytest.raises(ValueError):
        generate_grid(10, 0.0)


def test_grid_symmetry_and_rotation():
    g = generate_grid(10, 1.5)
    assert all(g.has_edge(b, a) for a, b in g.edges)
    # 180-degree relabeling i -> 99-i preserves the neighbor structure
    for i in range(100):
        rotated = {99 - j for j in g.in_neighbors(99 - i)}
        assert rotated == set(g.in_neighbors(i))


def test_generate_dispatch():
    assert generate("cycle 6") == generate_cycle(6)
    assert generate("complete 4") == generate_complete(4)
    assert generate("grid 3 1.0") == generate_grid(3, 1.0)
    with pytest.raises(ValueError):
        generate("torus 4")


def test_l_hop_in_neighbors_five_node(five_node):
    # node 1 hears 2, 3, 5 directly and node 4 via the relays
    assert l_hop_in_neighbors(five_node, 0, 1) == frozenset({1, 2, 4})
    assert l_hop_in_neighbors(five_node, 0, 2) == frozenset({1, 2, 3, 4})


def test_l_hop_saturates_at_n_minus_1(five_node):
    assert l_hop_in_neighbors(five_node, 0, 4) == l_hop_in_neighbors(five_node, 0, 12)


def test_enumerate_in_paths_five_node(five_node):
    got = {p.nodes for p in enumerate_in_paths(five_node, 0, 2)}
    assert got == {(1, 0), (2, 0), (4, 0), (3, 1, 0), (3, 2, 0), (3, 4, 0)}


def test_enumerate_in_paths_c4(c4):
    got = {p.nodes for p in enumerate_in_paths(c4, 0, 2)}
    assert got == {(1, 0), (3, 0), (2, 1, 0), (2, 3, 0)}


def test_enumerate_in_paths_isolated_node():
    g = Graph(3, frozenset({(0, 1)}))
    assert enumerate_in_paths(g, 2, 3) == ()


def test_enumerate_canonical_order(five_node):
    paths = enumerate_in_paths(five_node, 0, 2)
    keys = [(p.length, p.nodes) for p in paths]
    assert keys == sorted(keys)


def test_paths_revalidate_and_cross_checks(five_node, c4):
    for g in (five_node, c4):
        for i in range(g.n):
            for l in (1, 2, 3):
                paths = enumerate_in_paths(g, i, l)
                assert all(path_exists_in(g, p) for p in paths)
                assert neighbors_from_paths(paths) == l_hop_in_neighbors(g, i, l)
            assert len(enumerate_in_paths(g, i, 1)) == len(g.in_neighbors(i))


def test_l_hop_monotone(five_node):
    for i in range(five_node.n):
        prev = frozenset()
        for l in range(1, 5):
            cur = l_hop_in_neighbors(five_node, i, l)
            assert prev <= cur
            prev = cur


def test_longest_path_length(five_node):
    assert longest_path_length(generate_cycle(6)) == 5
    assert longest_path_length(generate_complete(4)) == 3
    assert longest_path_length(five_node) == 4


def test_path_invariants():
    with pytest.raises(ValueError):
        Path((1, 2, 1))
    p = Path((3, 2, 0))
    assert p.source == 3 and p.destination == 0 and p.length == 2
    assert p.internals == (2,)


def test_is_connected():
    assert is_connected(generate_cycle(5))
    assert not is_connected(Graph(4, frozenset({(0, 1), (1, 0)})))


@st.composite
def random_graphs(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    pairs = [(a, b) for a in range(n) for b in range(n) if a != b]
    picked = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs)))
    return Graph(n, frozenset(picked))


@given(random_graphs(), st.integers(min_value=1, max_value=4))
@settings(max_examples=60, deadline=None)
def test_property_paths_valid_and_sources_match(g, l):
    for i in range(g.n):
        paths = enumerate_in_paths(g, i, l)
        assert all(path_exists_in(g, p) for p in paths)
        assert len(set(paths)) == len(paths)
        assert neighbors_from_paths(paths) == l_hop_in_neighbors(g, i, l)


def test_grid_distance_rule():
    g = generate_grid(4, 2.0)
    for a, b in g.edges:
        assert math.dist(grid_coordinate(a, 4), grid_coordinate(b, 4)) <= 2.0
