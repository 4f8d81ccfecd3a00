"""Malicious-node behavior: deterministic forgery laws for own and relayed values.

A law's output depends only on the step, the originating source, and the path
prefix so far, which is exactly what makes a node "malicious" rather than
Byzantine: every neighbor sees the same bytes. The one deliberate exception is
the receiver-sensitive probe law used to demonstrate that the engine's
broadcast-consistency audit catches per-neighbor forgery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .graph import Path

WILDCARD = "*"

DUPLICATE_PATH = "duplicate"
UNKNOWN_PATH_INJECT = "unknown_path"
DROP_PATH = "drop_path"


@dataclass(frozen=True)
class ConstantLaw:
    value: float
    receiver_sensitive = False

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return self.value


@dataclass(frozen=True)
class SineLaw:
    amplitude: float
    frequency: float = 0.3
    offset: float = 0.0
    phase: float = 0.0
    receiver_sensitive = False

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return self.offset + self.amplitude * math.sin(self.frequency * k + self.phase)


@dataclass(frozen=True)
class TableLaw:
    """Explicit per-step values; steps beyond the table hold the last entry."""

    values: tuple[float, ...]
    receiver_sensitive = False

    def __post_init__(self):
        if not self.values:
            raise ValueError("table law needs at least one value")

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return self.values[min(k, len(self.values) - 1)]


@dataclass(frozen=True)
class OmitLaw:
    """Send nothing, ever (the omissive/crash behavior)."""

    receiver_sensitive = False

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return None


@dataclass(frozen=True)
class PassthroughLaw:
    receiver_sensitive = False

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return true_value


@dataclass(frozen=True)
class PerReceiverProbe:
    """Test-only escape hatch: forged value depends on the receiving neighbor.

    This violates broadcast consistency by construction; the engine audit must
    reject any run that uses it on a branching relay position.
    """

    base: float
    step: float = 1.0
    receiver_sensitive = True

    def evaluate(self, k: int, true_value: float | None, receiver: int | None = None):
        return self.base + self.step * (receiver if receiver is not None else 0)


Law = ConstantLaw | SineLaw | TableLaw | OmitLaw | PassthroughLaw | PerReceiverProbe

PASSTHROUGH = PassthroughLaw()
OMIT = OmitLaw()


def sine_for_range(lo: float, hi: float, frequency: float = 0.3, phase: float = 0.0) -> SineLaw:
    """Default attack sine: amplitude = half the given range, offset = midpoint."""
    return SineLaw(
        amplitude=(hi - lo) / 2.0, frequency=frequency, offset=(lo + hi) / 2.0, phase=phase
    )


@dataclass(frozen=True)
class AnomalyInjection:
    """Opt-in path-information misbehavior for exercising the classifier.

    kind 'duplicate' emits an extra message along `path` each step, valued by
    `law`; 'unknown_path' does the same along a path the receiver does not
    expect; 'drop_path' suppresses the real message on `path`. The adversary
    must itself sit on the injected path.
    """

    kind: str
    path: tuple[int, ...]
    law: Law = ConstantLaw(0.0)

    def __post_init__(self):
        if self.kind not in (DUPLICATE_PATH, UNKNOWN_PATH_INJECT, DROP_PATH):
            raise ValueError(f"unknown injection kind {self.kind!r}")
        if len(self.path) < 2:
            raise ValueError("injected path needs at least source and destination")


@dataclass(frozen=True)
class AdversarySpec:
    """One malicious node: its own-value law plus per-source relay laws.

    relay_laws maps an originating source id (or WILDCARD) to the law applied
    when this node relays that source's value; unmapped sources pass through.
    """

    node: int
    own_value_law: Law
    relay_laws: Mapping[int | str, Law] = field(default_factory=dict)
    anomaly_injections: tuple[AnomalyInjection, ...] = ()

    def __post_init__(self):
        if isinstance(self.own_value_law, PassthroughLaw):
            raise ValueError("own-value law cannot be passthrough")
        for inj in self.anomaly_injections:
            if self.node not in inj.path:
                raise ValueError(
                    f"adversary {self.node} not on injected path {inj.path}"
                )

    def relay_law_for(self, source: int) -> Law:
        law = self.relay_laws.get(source)
        if law is None:
            law = self.relay_laws.get(WILDCARD, PASSTHROUGH)
        return law


def forge_own_value(spec: AdversarySpec, k: int) -> float | None:
    """The value spec.node broadcasts as its own state at step k (None = omit)."""
    return spec.own_value_law.evaluate(k, None)


def forge_relay(
    spec: AdversarySpec,
    k: int,
    source: int,
    path_so_far: Path | Sequence[int],
    true_value: float,
    receiver: int | None = None,
) -> float | None:
    """The value spec.node forwards for `source`'s message at step k.

    Identical for every neighbor given the same (k, source, path_so_far),
    except under the test-only receiver probe.
    """
    law = spec.relay_law_for(source)
    return law.evaluate(k, true_value, receiver)
