import pytest

from mwmsr.graph import generate_cycle, parse_graph

SCENARIOS = None  # resolved lazily to the repo's scenarios/ directory


FIVE_NODE_DOC = """\
undirected 5
1 2
1 3
1 5
2 4
3 4
4 5
"""


@pytest.fixture(scope="session")
def five_node():
    """The 5-node relay example: node 1 hears 2, 3, 5; node 4 hears 2, 3, 5."""
    return parse_graph(FIVE_NODE_DOC)


@pytest.fixture(scope="session")
def c4():
    return generate_cycle(4)


@pytest.fixture(scope="session")
def scenarios_dir(request):
    path = request.config.rootpath / "scenarios"
    assert path.is_dir(), "committed scenarios directory missing"
    return path


@pytest.fixture(scope="session")
def six_node(scenarios_dir):
    return parse_graph((scenarios_dir / "six_node.txt").read_text())
