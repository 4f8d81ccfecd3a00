"""Messages, message covers, and path-anomaly classification.

A message is a (value, path) pair relayed through the network. A message
cover is a node set intersecting every message path; its minimum cardinality
is the number of distinct nodes that could have forged those messages, which
is what the filtering step needs to bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .graph import Path

DUPLICATE = "duplicate"
UNKNOWN_PATH = "unknown_path"
MISSING = "missing"


@dataclass(frozen=True)
class Message:
    """State content plus the path it traveled (source first, receiver last)."""

    value: float
    path: Path

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"message value must be finite, got {self.value}")

    @property
    def originator(self) -> int:
        return self.path.source

    @property
    def destination(self) -> int:
        return self.path.destination


def message(value: float, nodes: Sequence[int]) -> Message:
    """Shorthand constructor from a plain node sequence."""
    return Message(value, Path(tuple(nodes)))


@dataclass(frozen=True)
class CoverResult:
    """Minimum message cover size with a witness set.

    When `capped` is set the search stopped after proving the minimum exceeds
    the requested bound; `size` is then bound+1 (a lower bound) and the
    witness is empty.
    """

    size: int
    witness: frozenset[int]
    capped: bool = False


def cover_masks(msgs: Iterable[Message], dest: int) -> list[int]:
    """Coverable node sets as bitmasks: path nodes minus the destination."""
    masks = []
    bit_dest = 1 << dest
    for m in msgs:
        mask = 0
        for v in m.path.nodes:
            mask |= 1 << v
        masks.append(mask & ~bit_dest)
    return masks


def is_cover(msgs: Iterable[Message], cand: Iterable[int], dest: int) -> bool:
    """True iff `cand` intersects the node set of every message path."""
    cand = set(cand)
    if dest in cand:
        raise ValueError(f"destination {dest} cannot be part of a cover candidate")
    for m in msgs:
        if m.destination != dest:
            raise ValueError(
                f"message on path {m.path.nodes} does not end at destination {dest}"
            )
        if not cand & set(m.path.nodes):
            return False
    return True


def _packing_bound(masks: Sequence[int]) -> int:
    """Count of pairwise-disjoint masks: a lower bound on any hitting set."""
    packed = 0
    acc = 0
    for m in masks:
        if not m & acc:
            packed += 1
            acc |= m
    return packed


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _greedy_cover_size(masks: Sequence[int], cap: int) -> int:
    """Size of a greedy hitting set, or cap+1 if it exceeds cap."""
    remaining = list(masks)
    size = 0
    while remaining:
        if size >= cap:
            return cap + 1
        counts: dict[int, int] = {}
        for m in remaining:
            for b in _bits(m):
                counts[b] = counts.get(b, 0) + 1
        best = max(counts, key=lambda b: (counts[b], -b))
        size += 1
        remaining = [m for m in remaining if not (m >> best) & 1]
    return size


def _branch_at_most(masks: list[int], budget: int) -> bool:
    if not masks:
        return True
    if budget <= 0:
        return False
    if _packing_bound(masks) > budget:
        return False
    if _greedy_cover_size(masks, budget) <= budget:
        return True
    pivot = min(masks, key=int.bit_count)
    for b in _bits(pivot):
        rest = [m for m in masks if not (m >> b) & 1]
        if _branch_at_most(rest, budget - 1):
            return True
    return False


def cover_size_at_most(masks: Iterable[int], bound: int) -> bool:
    """Decision form: does a hitting set of size <= bound exist?

    Masks are node bitmasks (the destination already excluded). A zero mask is
    unhittable, so any such entry makes the answer False.
    """
    if bound < 0:
        return False
    work = []
    forced = 0
    nforced = 0
    for m in masks:
        if m == 0:
            return False
        if m.bit_count() == 1:
            if not m & forced:
                forced |= m
                nforced += 1
                if nforced > bound:
                    return False
        else:
            work.append(m)
    remaining = list({m for m in work if not m & forced})
    return _branch_at_most(remaining, bound - nforced)


def minimum_cover_size(
    msgs: Iterable[Message], dest: int, bound: int | None = None
) -> CoverResult:
    """Exact minimum message cover over candidates = (path nodes) minus dest.

    Searches sizes 0, 1, 2, ... with branch-and-bound pruning; stops early with
    capped=True once the minimum is proven greater than `bound`. The witness is
    the lexicographically smallest minimum cover.
    """
    if bound is not None and bound < 0:
        raise ValueError("bound must be >= 0")
    masks = cover_masks(msgs, dest)
    if any(m == 0 for m in masks):
        raise ValueError("a message has no coverable node besides the destination")
    if not masks:
        return CoverResult(0, frozenset())
    size = 0
    while not cover_size_at_most(masks, size):
        size += 1
        if bound is not None and size > bound:
            return CoverResult(size, frozenset(), capped=True)
    # lex-smallest witness: greedily admit the smallest candidate that still
    # leaves the remainder coverable within the budget
    union = 0
    for m in masks:
        union |= m
    chosen: list[int] = []
    remaining = masks
    budget = size
    for c in _bits(union):
        if not remaining:
            break
        rest = [m for m in remaining if not (m >> c) & 1]
        if len(rest) < len(remaining) and cover_size_at_most(rest, budget - 1):
            chosen.append(c)
            remaining = rest
            budget -= 1
    return CoverResult(size, frozenset(chosen))


# --- message logs and path-anomaly classification ---


def log_record(step: int, msg: Message) -> dict:
    """JSON-lines record for a received message (1-based ids externally)."""
    return {
        "step": step,
        "value": msg.value,
        "path": [v + 1 for v in msg.path.nodes],
        "originator": msg.originator + 1,
    }


def dump_log(entries: Iterable[tuple[int, Message]]) -> str:
    return "\n".join(
        json.dumps(log_record(step, m), sort_keys=True) for step, m in entries
    )


@dataclass(frozen=True)
class AnomalyEvent:
    kind: str
    path: tuple[int, ...]
    step: int


@dataclass(frozen=True)
class AnomalyReport:
    events: tuple[AnomalyEvent, ...]
    implicated: frozenset[tuple[int, ...]]

    @property
    def ok(self) -> bool:
        return not self.events and not self.implicated


def classify_path_anomaly(
    log: Iterable[tuple[int, Message]],
    expected: Iterable[Path],
    tau: int = 1,
    steps: tuple[int, int] | None = None,
    loss_flag_threshold: float | None = None,
) -> AnomalyReport:
    """Classify one node's received-message log against its expected paths.

    Every (path, step) with more than one message is a DUPLICATE; paths outside
    the expected set are UNKNOWN_PATH. An expected path absent for `tau`
    consecutive steps raises MISSING at each step completing such a gap (with
    the synchronous tau=1 this is simply every step the path is silent).
    `steps` bounds the window as (first, last) inclusive; it defaults to the
    span of the log. All implicated paths contain at least one faulty node.

    `loss_flag_threshold`, when set, additionally implicates (without events)
    any expected path missing in more than that fraction of the window, for
    deployments that want frequent packet loss treated as suspect. Default:
    never auto-flag.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    entries = [(step, m) for step, m in log]
    expected_set = {p.nodes for p in expected}
    if steps is None:
        if entries:
            steps = (min(s for s, _ in entries), max(s for s, _ in entries))
        else:
            steps = (0, -1)
    first, last = steps

    seen: dict[tuple[tuple[int, ...], int], int] = {}
    for step, m in entries:
        key = (m.path.nodes, step)
        seen[key] = seen.get(key, 0) + 1

    events: list[AnomalyEvent] = []
    for (nodes, step), count in sorted(seen.items()):
        if count > 1:
            events.append(AnomalyEvent(DUPLICATE, nodes, step))
        if nodes not in expected_set:
            events.append(AnomalyEvent(UNKNOWN_PATH, nodes, step))

    implicated: set[tuple[int, ...]] = set()
    window = range(first, last + 1)
    for nodes in sorted(expected_set):
        present = {step for (n, step) in seen if n == nodes}
        gap = 0
        absent = 0
        for step in window:
            if step in present:
                gap = 0
            else:
                gap += 1
                absent += 1
                if gap >= tau:
                    events.append(AnomalyEvent(MISSING, nodes, step))
        if (
            loss_flag_threshold is not None
            and len(window) > 0
            and absent / len(window) > loss_flag_threshold
        ):
            implicated.add(nodes)

    events.sort(key=lambda e: (e.step, e.path, e.kind))
    implicated.update(e.path for e in events)
    return AnomalyReport(tuple(events), frozenset(implicated))
