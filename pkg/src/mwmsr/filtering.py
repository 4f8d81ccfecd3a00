"""The multi-hop weighted MSR filter and update.

Each node partitions received values around its own state, removes the
largest-sized extreme prefixes attributable to at most f nodes (measured by
minimum message cover), and averages what is left with equal weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .graph import Path
from .messaging import Message, cover_masks, cover_size_at_most


@dataclass(frozen=True)
class FilterResult:
    """Removal sets and survivors of one filtering step, canonical order."""

    removed_high: tuple[Message, ...]
    removed_low: tuple[Message, ...]
    kept: tuple[Message, ...]

    @property
    def weight(self) -> float:
        return 1.0 / len(self.kept)


def own_message(own: float, node: int) -> Message:
    """The node's own value as a message with the trivial one-node path."""
    return Message(own, Path((node,)))


def _canonical_key(m: Message):
    return (m.value, m.originator, m.path.nodes)


def partition_extremes(
    msgs: Sequence[Message], own: float
) -> tuple[tuple[Message, ...], tuple[Message, ...]]:
    """Split strictly-greater and strictly-smaller messages, each ordered
    most-extreme first with deterministic tie-breaking (originator, path)."""
    high = sorted(
        (m for m in msgs if m.value > own),
        key=lambda m: (-m.value, m.originator, m.path.nodes),
    )
    low = sorted((m for m in msgs if m.value < own), key=_canonical_key)
    return tuple(high), tuple(low)


def removal_prefix_length(masks: Sequence[int], f: int) -> int:
    """Length of the removal prefix over one extreme side.

    `masks` are cover bitmasks ordered most-extreme first. Removes the whole
    side when its minimum cover is at most f; otherwise returns the longest
    prefix whose minimum cover is exactly f. Since the prefix cover size is
    nondecreasing and grows in steps of at most one, the boundary is found by
    galloping + bisection over the single decision "cover <= f".
    """
    if f < 0:
        raise ValueError("f must be >= 0")
    t = len(masks)
    if t <= f:
        return t

    def le(h: int) -> bool:
        return cover_size_at_most(masks[:h], f)

    if not le(f + 1):
        return f
    lo = f + 1  # largest prefix known to have cover <= f
    step = 1
    while lo < t:
        hi = min(lo + step, t)
        if le(hi):
            lo = hi
            step *= 2
        else:
            while lo + 1 < hi:
                mid = (lo + hi) // 2
                if le(mid):
                    lo = mid
                else:
                    hi = mid
            return lo
    return t


def select_removal_set(
    sorted_extremes: Sequence[Message], f: int, dest: int
) -> tuple[Message, ...]:
    """Removal set for one side: the extreme prefix whose minimum message
    cover stays within f (see removal_prefix_length)."""
    masks = cover_masks(sorted_extremes, dest)
    if any(m == 0 for m in masks):
        raise ValueError("extreme set may not contain the own-value message")
    k = removal_prefix_length(masks, f)
    return tuple(sorted_extremes[:k])


def mwmsr_update(
    own: float, msgs: Sequence[Message], f: int, dest: int
) -> tuple[float, FilterResult]:
    """One filtering-and-averaging step for node `dest`.

    `msgs` is the received set; the own-value message (trivial path) is added
    if absent. Returns the new state (equal-weight mean of the kept messages)
    together with the removal audit. The own value is never removed.
    """
    msgs = list(msgs)
    own_msgs = [m for m in msgs if m.path.nodes == (dest,)]
    if len(own_msgs) > 1:
        raise ValueError("multiple own-value messages")
    if own_msgs:
        if own_msgs[0].value != own:
            raise ValueError(
                f"own-value message carries {own_msgs[0].value}, expected {own}"
            )
    else:
        msgs.append(own_message(own, dest))

    high, low = partition_extremes(msgs, own)
    removed_high = select_removal_set(high, f, dest)
    removed_low = select_removal_set(low, f, dest)
    removed = set(removed_high) | set(removed_low)
    kept = tuple(sorted((m for m in msgs if m not in removed), key=_canonical_key))
    new_value = sum(m.value for m in kept) / len(kept)
    return new_value, FilterResult(removed_high, removed_low, kept)


def nominal_update(
    own: float, msgs: Sequence[Message], weights: Sequence[float]
) -> float:
    """Fault-free consensus step: own + sum of w_m * (value(m) - own).

    Weights must be nonnegative and sum to at most 1 (a zero weight simply
    means the neighbor is ignored this step).
    """
    if len(msgs) != len(weights):
        raise ValueError("one weight per message required")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be nonnegative")
    if sum(weights) > 1.0 + 1e-12:
        raise ValueError("weights must sum to at most 1")
    return own + sum(w * (m.value - own) for m, w in zip(msgs, weights))
