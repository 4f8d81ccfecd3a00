"""Directed graphs, edge-list files, topology generators, and l-hop path queries.

Edges are ordered pairs (j, i): node i can get information from node j.
Node ids are 0-based internally; edge-list files are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator


class GraphParseError(ValueError):
    """Raised for malformed edge-list documents; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Path:
    """A simple directed path, stored source-first: nodes[0] -> ... -> nodes[-1]."""

    nodes: tuple[int, ...]

    def __post_init__(self):
        if len(self.nodes) < 1:
            raise ValueError("path must contain at least one node")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path nodes must be distinct: {self.nodes}")

    @property
    def source(self) -> int:
        return self.nodes[0]

    @property
    def destination(self) -> int:
        return self.nodes[-1]

    @property
    def length(self) -> int:
        """Hop count: one less than the number of nodes."""
        return len(self.nodes) - 1

    @property
    def internals(self) -> tuple[int, ...]:
        return self.nodes[1:-1]

    def __iter__(self) -> Iterator[int]:
        return iter(self.nodes)

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph on nodes 0..n-1.

    Undirected inputs are expanded to both directions on load, so `edges`
    always holds directed pairs. Safe to share across threads; all derived
    adjacency is computed once and cached.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    directed: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        for j, i in self.edges:
            if j == i:
                raise ValueError(f"self-loop at node {j}")
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"edge ({j}, {i}) out of range for n={self.n}")

    @cached_property
    def _in(self) -> tuple[tuple[int, ...], ...]:
        table: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in self.edges:
            table[i].append(j)
        return tuple(tuple(sorted(js)) for js in table)

    @cached_property
    def _out(self) -> tuple[tuple[int, ...], ...]:
        table: list[list[int]] = [[] for _ in range(self.n)]
        for j, i in self.edges:
            table[j].append(i)
        return tuple(tuple(sorted(js)) for js in table)

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        return self._in[i]

    def out_neighbors(self, i: int) -> tuple[int, ...]:
        return self._out[i]

    def has_edge(self, j: int, i: int) -> bool:
        return (j, i) in self.edges

    def with_edge(self, j: int, i: int) -> "Graph":
        """New graph with one extra directed edge."""
        return Graph(self.n, self.edges | {(j, i)}, directed=True)

    def nodes(self) -> range:
        return range(self.n)


def parse_graph(text: str) -> Graph:
    """Parse an edge-list document.

    First significant line: `directed N` or `undirected N`. Each following line
    is a 1-based pair `j i` stating that i can hear j (both directions are added
    for undirected graphs). `#` starts a comment; blank lines are ignored.
    """
    header: tuple[str, int] | None = None
    edges: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2 or parts[0] not in ("directed", "undirected"):
                raise GraphParseError(
                    "expected header 'directed N' or 'undirected N'", lineno
                )
            try:
                n = int(parts[1])
            except ValueError:
                raise GraphParseError(f"bad node count {parts[1]!r}", lineno) from None
            if n < 1:
                raise GraphParseError(f"node count must be positive, got {n}", lineno)
            header = (parts[0], n)
            continue
        if len(parts) != 2:
            raise GraphParseError(f"expected 'j i' pair, got {line!r}", lineno)
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphParseError(f"non-integer node id in {line!r}", lineno) from None
        n = header[1]
        for v in (j, i):
            if not (1 <= v <= n):
                raise GraphParseError(f"node id {v} out of range 1..{n}", lineno)
        if j == i:
            raise GraphParseError(f"self-loop at node {j}", lineno)
        edges.add((j - 1, i - 1))
        if header[0] == "undirected":
            edges.add((i - 1, j - 1))
    if header is None:
        raise GraphParseError("empty document: missing header")
    return Graph(header[1], frozenset(edges), directed=(header[0] == "directed"))


def format_graph(g: Graph) -> str:
    """Canonical 1-based edge-list text for `g` (inverse of parse_graph)."""
    lines = [f"{'directed' if g.directed else 'undirected'} {g.n}"]
    if g.directed:
        pairs = sorted(g.edges)
    else:
        pairs = sorted({(min(j, i), max(j, i)) for j, i in g.edges})
    lines.extend(f"{j + 1} {i + 1}" for j, i in pairs)
    return "\n".join(lines) + "\n"


def generate_cycle(n: int) -> Graph:
    """Undirected cycle C_n."""
    if n < 2:
        raise ValueError("cycle needs n >= 2")
    edges = set()
    for i in range(n):
        j = (i + 1) % n
        edges.add((i, j))
        edges.add((j, i))
    return Graph(n, frozenset(edges), directed=False)


def generate_complete(n: int) -> Graph:
    """Undirected complete graph K_n."""
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    edges = {(i, j) for i in range(n) for j in range(n) if i != j}
    return Graph(n, frozenset(edges), directed=False)


def grid_coordinate(i: int, side: int) -> tuple[int, int]:
    """Node i sits at (i mod side, i // side)."""
    return (i % side, i // side)


def generate_grid(side: int, radius: float) -> Graph:
    """side*side nodes on the integer lattice; undirected edge when the
    Euclidean distance between coordinates is <= radius."""
    if side < 2:
        raise ValueError("grid needs side >= 2")
    if radius <= 0:
        raise ValueError("grid needs radius > 0")
    n = side * side
    coords = [grid_coordinate(i, side) for i in range(n)]
    edges = set()
    for a in range(n):
        xa, ya = coords[a]
        for b in range(a + 1, n):
            xb, yb = coords[b]
            if math.dist((xa, ya), (xb, yb)) <= radius:
                edges.add((a, b))
                edges.add((b, a))
    return Graph(n, frozenset(edges), directed=False)


def generate(spec: str) -> Graph:
    """Build a graph from a generator spec: 'cycle N', 'complete N', or
    'grid SIDE RADIUS'."""
    parts = spec.split()
    if not parts:
        raise ValueError("empty generator spec")
    kind = parts[0]
    try:
        if kind == "cycle" and len(parts) == 2:
            return generate_cycle(int(parts[1]))
        if kind == "complete" and len(parts) == 2:
            return generate_complete(int(parts[1]))
        if kind == "grid" and len(parts) == 3:
            return generate_grid(int(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ValueError(f"bad generator spec {spec!r}: {exc}") from None
    raise ValueError(f"unknown generator spec {spec!r}")


def l_hop_in_neighbors(g: Graph, i: int, l: int) -> frozenset[int]:
    """Nodes that can reach i via at most l hops, excluding i itself."""
    if l < 1:
        raise ValueError("l must be >= 1")
    seen = {i}
    frontier = [i]
    for _ in range(l):
        nxt = []
        for v in frontier:
            for j in g.in_neighbors(v):
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        if not nxt:
            break
        frontier = nxt
    seen.discard(i)
    return frozenset(seen)


def enumerate_in_paths(g: Graph, i: int, l: int) -> tuple[Path, ...]:
    """Every simple path of length 1..l ending at i, in canonical order
    (shorter first, then lexicographic on the node sequence)."""
    if l < 1:
        raise ValueError("l must be >= 1")
    found: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], used: set[int]):
        # prefix is source-first and already ends at i
        if len(prefix) - 1 >= l:
            return
        head = prefix[0]
        for j in g.in_neighbors(head):
            if j not in used:
                nodes = (j,) + prefix
                found.append(nodes)
                used.add(j)
                extend(nodes, used)
                used.discard(j)

    extend((i,), {i})
    found.sort(key=lambda nodes: (len(nodes), nodes))
    return tuple(Path(nodes) for nodes in found)


def path_exists_in(g: Graph, path: Path) -> bool:
    """Re-validate a path against a graph: distinct nodes joined by edges."""
    nodes = path.nodes
    if len(set(nodes)) != len(nodes):
        return False
    if any(not (0 <= v < g.n) for v in nodes):
        return False
    return all(g.has_edge(nodes[k], nodes[k + 1]) for k in range(len(nodes) - 1))


def longest_path_length(g: Graph) -> int:
    """Length of the longest simple path in g (exact search; small graphs only)."""
    best = 0

    def dfs(v: int, used: int, depth: int):
        nonlocal best
        if depth > best:
            best = depth
        for w in g.out_neighbors(v):
            bit = 1 << w
            if not used & bit:
                dfs(w, used | bit, depth + 1)

    for start in range(g.n):
        dfs(start, 1 << start, 0)
    return best


def is_connected(g: Graph) -> bool:
    """Weak connectivity (edge direction ignored)."""
    if g.n == 1:
        return True
    adj: list[set[int]] = [set() for _ in range(g.n)]
    for j, i in g.edges:
        adj[j].add(i)
        adj[i].add(j)
    seen = {0}
    stack = [0]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == g.n


def neighbors_from_paths(paths: Iterable[Path]) -> frozenset[int]:
    """Set of path sources; cross-check helper for l_hop_in_neighbors."""
    return frozenset(p.source for p in paths)
