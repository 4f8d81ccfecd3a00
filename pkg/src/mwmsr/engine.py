"""Deterministic discrete-time execution of the relay/filter protocol.

Synchronous mode floods every node's value along every at-most-l-hop in-path
each step and applies the trimming filter at every normal node. Asynchronous
mode delivers messages through per-path delays into a freshest-value store and
lets nodes update on their own schedules. Both modes compile the scenario
once (paths, forgery chains, cover masks) so the per-step work is array
gathers plus the filter's cover decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .adversary import (
    DROP_PATH,
    DUPLICATE_PATH,
    UNKNOWN_PATH_INJECT,
    AdversarySpec,
    ConstantLaw,
    OmitLaw,
    PassthroughLaw,
    PerReceiverProbe,
    SineLaw,
    TableLaw,
    forge_own_value,
)
from .filtering import removal_prefix_length
from .graph import Graph, Path, enumerate_in_paths
from .messaging import Message


class EngineError(RuntimeError):
    pass


class BroadcastConsistencyError(EngineError):
    """A malicious node emitted different copies for the same (step, source, prefix)."""


SYNC = "sync"
ASYNC = "async"
BY_HOPS = "by-hops"
UNIFORM = "uniform"


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval lo must not exceed hi")

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol


@dataclass(frozen=True)
class ScenarioConfig:
    graph: Graph
    hops: int
    f: int
    initial_values: tuple[float, ...]
    adversaries: tuple[AdversarySpec, ...] = ()
    mode: str = SYNC
    horizon: int = 100
    seed: int = 0
    periods: tuple[int, ...] | None = None
    phases: tuple[int, ...] | None = None
    delay_kind: str = BY_HOPS
    hop_delays: tuple[int, ...] = ()
    tau: int = 0
    withhold_adversary_origin: bool = False
    record_filters: bool = False
    record_messages: bool = False
    label: str = ""

    def adversary_nodes(self) -> frozenset[int]:
        return frozenset(a.node for a in self.adversaries)


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Raise on structural errors; return non-fatal warnings."""
    g = cfg.graph
    if cfg.hops < 1:
        raise ValueError("hops must be >= 1")
    if cfg.f < 0:
        raise ValueError("f must be >= 0")
    if cfg.horizon < 1:
        raise ValueError("horizon must be >= 1")
    if len(cfg.initial_values) != g.n:
        raise ValueError(
            f"expected {g.n} initial values, got {len(cfg.initial_values)}"
        )
    if any(not math.isfinite(v) for v in cfg.initial_values):
        raise ValueError("initial values must be finite")
    if cfg.mode not in (SYNC, ASYNC):
        raise ValueError(f"unknown mode {cfg.mode!r}")
    seen = set()
    for a in cfg.adversaries:
        if not (0 <= a.node < g.n):
            raise ValueError(f"adversary node {a.node} out of range")
        if a.node in seen:
            raise ValueError(f"duplicate adversary for node {a.node}")
        seen.add(a.node)
    if cfg.mode == ASYNC:
        if cfg.periods is None or len(cfg.periods) != g.n:
            raise ValueError("async mode needs one update period per node")
        if any(p < 1 for p in cfg.periods):
            raise ValueError("update periods must be >= 1")
        if cfg.phases is not None and len(cfg.phases) != g.n:
            raise ValueError("phases must match the node count")
        if cfg.tau < 0:
            raise ValueError("tau must be >= 0")
        if cfg.delay_kind == BY_HOPS:
            if len(cfg.hop_delays) < cfg.hops:
                raise ValueError("need a delay entry for each hop count 1..l")
            if any(d < 0 for d in cfg.hop_delays):
                raise ValueError("delays must be >= 0")
            if any(d > cfg.tau for d in cfg.hop_delays[: cfg.hops]):
                raise ValueError("normal-path delays must not exceed tau")
        elif cfg.delay_kind != UNIFORM:
            raise ValueError(f"unknown delay kind {cfg.delay_kind!r}")
    warnings = []
    if len(cfg.adversaries) > cfg.f:
        warnings.append(
            f"{len(cfg.adversaries)} adversaries exceed the filter budget f={cfg.f}; "
            "guarantees are void (over-budget attack run)"
        )
    return warnings


@dataclass(frozen=True)
class FilterAudit:
    """Per-(step, node) record of one filtering decision."""

    removed_high: tuple[tuple[float, tuple[int, ...]], ...]
    removed_low: tuple[tuple[float, tuple[int, ...]], ...]
    kept: tuple[tuple[float, tuple[int, ...]], ...]
    weight: float


@dataclass
class Trace:
    config: ScenarioConfig
    states: np.ndarray  # (horizon+1, n)
    is_normal: np.ndarray  # bool (n,)
    warnings: tuple[str, ...] = ()
    filters: dict[tuple[int, int], FilterAudit] = field(default_factory=dict)
    messages: dict[int, list[tuple[int, Message]]] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def normal_states(self) -> np.ndarray:
        return self.states[:, self.is_normal]


# --- scenario compilation ---

_KIND_PLAIN = 0
_KIND_CONST = 1
_KIND_SINE = 2
_KIND_TABLE = 3
_KIND_DYNAMIC = 4


@dataclass
class _Entry:
    src: int
    path: Path
    mask: int
    hops: int
    kind: int = _KIND_PLAIN
    law: object = None
    chain: tuple = ()  # (node, law, position) triples for dynamic evaluation


class _Compiled:
    def __init__(self, cfg: ScenarioConfig):
        g = cfg.graph
        self.cfg = cfg
        adv_map = {a.node: a for a in cfg.adversaries}
        self.adv_map = adv_map
        self.normal = sorted(set(range(g.n)) - set(adv_map))

        drop_requests = set()
        extra: dict[int, list[tuple[AdversarySpec, object, Path]]] = {}
        for a in cfg.adversaries:
            for inj in a.anomaly_injections:
                if any(not (0 <= v < g.n) for v in inj.path):
                    raise ValueError(f"injected path {inj.path} has out-of-range ids")
                if inj.kind == DROP_PATH:
                    drop_requests.add(inj.path)
                elif inj.kind in (DUPLICATE_PATH, UNKNOWN_PATH_INJECT):
                    extra.setdefault(inj.path[-1], []).append((a, inj.law, Path(inj.path)))

        entries: list[_Entry] = []
        self.segments: dict[int, tuple[int, int]] = {}
        for i in self.normal:
            seg_entries: list[_Entry] = []
            for p in enumerate_in_paths(g, i, cfg.hops):
                e = self._compile_path(p, adv_map, cfg)
                if e is None or p.nodes in drop_requests:
                    continue
                seg_entries.append(e)
            for a, law, p in extra.get(i, ()):
                e = _Entry(src=p.source, path=p, mask=self._mask(p, i), hops=p.length)
                self._apply_law(e, law, a.node, p)
                seg_entries.append(e)
            # canonical tie order: originator, then path nodes
            seg_entries.sort(key=lambda e: (e.src, e.path.nodes))
            lo = len(entries)
            entries.extend(seg_entries)
            self.segments[i] = (lo, len(entries))

        self.entries = entries
        P = len(entries)
        self.src = np.fromiter((e.src for e in entries), dtype=np.int64, count=P)
        self.masks = [e.mask for e in entries]
        tie = np.empty(P, dtype=np.int64)
        for i, (lo, hi) in self.segments.items():
            tie[lo:hi] = np.arange(hi - lo)
        self.tie = tie
        self.hops_arr = np.fromiter((e.hops for e in entries), dtype=np.int64, count=P)

        self.const_idx = np.fromiter(
            (j for j, e in enumerate(entries) if e.kind == _KIND_CONST), dtype=np.int64
        )
        self.const_val = np.fromiter(
            (e.law.value for e in entries if e.kind == _KIND_CONST), dtype=np.float64
        )
        self.sine_groups: dict[tuple, np.ndarray] = {}
        for j, e in enumerate(entries):
            if e.kind == _KIND_SINE:
                key = (e.law.amplitude, e.law.frequency, e.law.offset, e.law.phase)
                self.sine_groups.setdefault(key, []).append(j)
        self.sine_groups = {
            k: np.array(v, dtype=np.int64) for k, v in self.sine_groups.items()
        }
        self.table_entries = [
            (j, e.law) for j, e in enumerate(entries) if e.kind == _KIND_TABLE
        ]
        self.dynamic_entries = [
            (j, e) for j, e in enumerate(entries) if e.kind == _KIND_DYNAMIC
        ]
        # consistency-audit groups: same (adversary, source, prefix) must agree
        groups: dict[tuple, list[tuple[int, int]]] = {}
        for j, e in self.dynamic_entries:
            for node, law, pos in e.chain:
                if getattr(law, "receiver_sensitive", False):
                    key = (node, e.src, e.path.nodes[: pos + 1])
                    receiver = e.path.nodes[pos + 1]
                    groups.setdefault(key, []).append((j, receiver))
        self.audit_groups = {k: v for k, v in groups.items() if len(v) >= 2}

    @staticmethod
    def _mask(p: Path, dest: int) -> int:
        m = 0
        for v in p.nodes:
            m |= 1 << v
        return m & ~(1 << dest)

    def _apply_law(self, e: _Entry, law, adv_node: int, p: Path):
        if isinstance(law, ConstantLaw):
            e.kind, e.law = _KIND_CONST, law
        elif isinstance(law, SineLaw):
            e.kind, e.law = _KIND_SINE, law
        elif isinstance(law, TableLaw):
            e.kind, e.law = _KIND_TABLE, law
        else:
            e.kind = _KIND_DYNAMIC
            pos = p.nodes.index(adv_node)
            e.chain = ((adv_node, law, pos),)

    def _compile_path(self, p: Path, adv_map, cfg: ScenarioConfig) -> _Entry | None:
        src = p.source
        if src in adv_map:
            if isinstance(adv_map[src].own_value_law, OmitLaw):
                return None  # crashed source: the path never carries a message
            if cfg.withhold_adversary_origin:
                return None  # modeled as infinite delay on adversary-origin paths
        e = _Entry(src=src, path=p, mask=self._mask(p, p.destination), hops=p.length)
        chain = []
        for pos, r in enumerate(p.internals, start=1):
            if r in adv_map:
                law = adv_map[r].relay_law_for(src)
                if isinstance(law, OmitLaw):
                    return None  # relay withholds: downstream never sees it
                if not isinstance(law, PassthroughLaw):
                    chain.append((r, law, pos))
        if not chain:
            return e  # value is just the (possibly source-forged) broadcast
        if any(getattr(law, "receiver_sensitive", False) for _, law, _ in chain):
            e.kind = _KIND_DYNAMIC
            e.chain = tuple(chain)
        else:
            # input-independent laws compose to the last applied one
            self._apply_law(e, chain[-1][1], chain[-1][0], p)
        return e

    def path_values(self, k: int, broadcast: np.ndarray) -> np.ndarray:
        vals = broadcast[self.src]
        if self.const_idx.size:
            vals[self.const_idx] = self.const_val
        for (amp, freq, off, phase), idx in self.sine_groups.items():
            vals[idx] = off + amp * math.sin(freq * k + phase)
        for j, law in self.table_entries:
            vals[j] = law.values[min(k, len(law.values) - 1)]
        for j, e in self.dynamic_entries:
            v = broadcast[e.src]
            for node, law, pos in e.chain:
                v = law.evaluate(k, v, receiver=e.path.nodes[pos + 1])
            vals[j] = v
        self._audit(k, broadcast)
        return vals

    def _audit(self, k: int, broadcast: np.ndarray):
        for (node, src, prefix), members in self.audit_groups.items():
            emitted = set()
            for j, receiver in members:
                e = self.entries[j]
                v = broadcast[src]
                for anode, law, pos in e.chain:
                    if e.path.nodes[: pos + 1] == prefix and anode == node:
                        v = law.evaluate(k, v, receiver=receiver)
                        break
                    v = law.evaluate(k, v, receiver=e.path.nodes[pos + 1])
                emitted.add(v)
            if len(emitted) > 1:
                raise BroadcastConsistencyError(
                    f"step {k}: node {node} sent {sorted(emitted)} for source {src} "
                    f"on prefix {prefix}"
                )


def _filter_segment(
    vals: np.ndarray,
    tie: np.ndarray,
    masks: Sequence[int],
    own: float,
    f: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Apply the trimming filter to one node's received values.

    Returns (new value, removed-low indices, removed-high indices); indices are
    positions within `vals`, ordered most-extreme first.
    """
    m = vals.shape[0]
    empty = np.empty(0, dtype=np.int64)
    if m == 0:
        return own, empty, empty
    asc = np.lexsort((tie, vals))
    va = vals[asc]
    n_low = int(np.searchsorted(va, own, side="left"))
    n_high = m - int(np.searchsorted(va, own, side="right"))
    removed_low = empty
    removed_high = empty
    if f > 0 and n_low:
        low_order = asc[:n_low]
        cut = removal_prefix_length([masks[j] for j in low_order], f)
        removed_low = low_order[:cut]
    if f > 0 and n_high:
        desc = np.lexsort((tie, -vals))
        high_order = desc[:n_high]
        cut = removal_prefix_length([masks[j] for j in high_order], f)
        removed_high = high_order[:cut]
    dropped = 0.0
    count = m - removed_low.size - removed_high.size + 1
    if removed_low.size:
        dropped += float(vals[removed_low].sum())
    if removed_high.size:
        dropped += float(vals[removed_high].sum())
    new_value = (float(vals.sum()) - dropped + own) / count
    return new_value, removed_low, removed_high


def _adversary_state(spec: AdversarySpec, k: int, fallback: float) -> float:
    v = forge_own_value(spec, k)
    return fallback if v is None else v


def run(cfg: ScenarioConfig) -> Trace:
    return run_sync(cfg) if cfg.mode == SYNC else run_async(cfg)


def _setup(cfg: ScenarioConfig):
    warnings = validate_config(cfg)
    comp = _Compiled(cfg)
    n = cfg.graph.n
    states = np.empty((cfg.horizon + 1, n), dtype=np.float64)
    states[0] = cfg.initial_values
    is_normal = np.ones(n, dtype=bool)
    for a in cfg.adversaries:
        is_normal[a.node] = False
    return comp, states, is_normal, tuple(warnings)


def _record(trace: Trace, k: int, i: int, vals: np.ndarray,
            paths: Sequence[tuple[int, ...]], rem_lo: np.ndarray,
            rem_hi: np.ndarray, own: float):
    removed = set(int(j) for j in rem_lo) | set(int(j) for j in rem_hi)
    kept = [(float(vals[j]), paths[j]) for j in range(vals.shape[0]) if j not in removed]
    kept.append((own, (i,)))
    kept.sort(key=lambda t: (t[0], t[1]))
    trace.filters[(k, i)] = FilterAudit(
        removed_high=tuple((float(vals[j]), paths[j]) for j in rem_hi),
        removed_low=tuple((float(vals[j]), paths[j]) for j in rem_lo),
        kept=tuple(kept),
        weight=1.0 / len(kept),
    )


def run_sync(cfg: ScenarioConfig) -> Trace:
    if cfg.mode != SYNC:
        raise ValueError("config mode is not sync")
    comp, states, is_normal, warnings = _setup(cfg)
    trace = Trace(cfg, states, is_normal, warnings)
    x = states[0].copy()
    for k in range(cfg.horizon):
        broadcast = x.copy()
        for a in cfg.adversaries:
            broadcast[a.node] = _adversary_state(a, k, x[a.node])
        vals = comp.path_values(k, broadcast)
        new = x.copy()
        for i in comp.normal:
            lo, hi = comp.segments[i]
            seg_vals = vals[lo:hi]
            nv, rem_lo, rem_hi = _filter_segment(
                seg_vals, comp.tie[lo:hi], comp.masks[lo:hi], x[i], cfg.f
            )
            new[i] = nv
            if cfg.record_filters:
                paths = [comp.entries[j].path.nodes for j in range(lo, hi)]
                _record(trace, k, i, seg_vals, paths, rem_lo, rem_hi, x[i])
            if cfg.record_messages:
                log = trace.messages.setdefault(i, [])
                for j in range(lo, hi):
                    log.append((k, Message(float(vals[j]), comp.entries[j].path)))
        for a in cfg.adversaries:
            new[a.node] = _adversary_state(a, k + 1, x[a.node])
        if not np.isfinite(new).all():
            bad = int(np.nonzero(~np.isfinite(new))[0][0])
            raise EngineError(f"non-finite state at step {k + 1}, node {bad}")
        states[k + 1] = new
        x = new.copy()
    return trace


def run_async(cfg: ScenarioConfig) -> Trace:
    if cfg.mode != ASYNC:
        raise ValueError("config mode is not async")
    comp, states, is_normal, warnings = _setup(cfg)
    trace = Trace(cfg, states, is_normal, warnings)
    n = cfg.graph.n
    P = len(comp.entries)
    phases = cfg.phases or tuple(0 for _ in range(n))
    periods = cfg.periods

    if cfg.delay_kind == BY_HOPS:
        delay_arr = np.array(
            [cfg.hop_delays[e.hops - 1] for e in comp.entries], dtype=np.int64
        )
        max_delay = int(delay_arr.max()) if P else 0
    else:
        delay_arr = None
        max_delay = cfg.tau
    ring = max_delay + 1
    pend_val = np.zeros((ring, P), dtype=np.float64)
    pend_sent = np.full((ring, P), -1, dtype=np.int64)
    store_val = np.zeros(P, dtype=np.float64)
    store_arr = np.full(P, -1, dtype=np.int64)
    rng = np.random.default_rng(cfg.seed)
    all_idx = np.arange(P)

    x = states[0].copy()
    for k in range(cfg.horizon):
        broadcast = x.copy()
        for a in cfg.adversaries:
            broadcast[a.node] = _adversary_state(a, k, x[a.node])
        vals = comp.path_values(k, broadcast)
        if P:
            if delay_arr is not None:
                slots = (k + delay_arr) % ring
            else:
                slots = (k + rng.integers(0, cfg.tau + 1, size=P)) % ring
            # same-arrival collisions resolve to the freshest send, which is
            # always the current step, so plain assignment is correct
            pend_val[slots, all_idx] = vals
            pend_sent[slots, all_idx] = k
            slot = k % ring
            arrived = pend_sent[slot] >= 0
            if arrived.any():
                idx = np.nonzero(arrived)[0]
                store_val[idx] = pend_val[slot, idx]
                store_arr[idx] = k
                if cfg.record_messages:
                    for j in idx:
                        i = comp.entries[j].path.destination
                        trace.messages.setdefault(i, []).append(
                            (k, Message(float(pend_val[slot, j]), comp.entries[j].path))
                        )
                pend_sent[slot] = -1

        new = x.copy()
        for i in comp.normal:
            if (k - phases[i]) % periods[i] != 0:
                continue
            lo, hi = comp.segments[i]
            present = store_arr[lo:hi] >= 0
            seg_vals = store_val[lo:hi][present]
            seg_tie = comp.tie[lo:hi][present]
            seg_masks = [comp.masks[j] for j in range(lo, hi) if store_arr[j] >= 0]
            nv, rem_lo, rem_hi = _filter_segment(seg_vals, seg_tie, seg_masks, x[i], cfg.f)
            new[i] = nv
            if cfg.record_filters:
                paths = [
                    comp.entries[j].path.nodes
                    for j in range(lo, hi)
                    if store_arr[j] >= 0
                ]
                _record(trace, k, i, seg_vals, paths, rem_lo, rem_hi, x[i])
        for a in cfg.adversaries:
            new[a.node] = _adversary_state(a, k + 1, x[a.node])
        if not np.isfinite(new).all():
            bad = int(np.nonzero(~np.isfinite(new))[0][0])
            raise EngineError(f"non-finite state at step {k + 1}, node {bad}")
        states[k + 1] = new
        x = new.copy()
    return trace


# --- metrics over traces ---


def consensus_error(trace: Trace, k: int, tau: int = 0) -> float:
    """Spread of normal states at step k (tau=0) or over the window
    [k-tau, k], clipped at 0 where the initial history begins."""
    if k > trace.horizon:
        raise ValueError(f"step {k} beyond horizon {trace.horizon}")
    lo = max(0, k - tau)
    window = trace.states[lo : k + 1][:, trace.is_normal]
    return float(window.max() - window.min())


def consensus_error_series(trace: Trace, tau: int = 0) -> np.ndarray:
    return np.array(
        [consensus_error(trace, k, tau) for k in range(trace.horizon + 1)]
    )


def safety_interval(trace: Trace) -> Interval:
    """Hull of the normal initial values (the initial history replicates
    them, so the sync and async intervals coincide)."""
    init = trace.states[0][trace.is_normal]
    return Interval(float(init.min()), float(init.max()))


def check_safety(trace: Trace, tol: float = 1e-9) -> bool:
    """Every normal state inside the safety interval at every step (small
    tolerance absorbs floating-point accumulation in the averaging)."""
    s = safety_interval(trace)
    normal = trace.normal_states()
    scale = max(1.0, abs(s.lo), abs(s.hi))
    return bool(
        (normal >= s.lo - tol * scale).all() and (normal <= s.hi + tol * scale).all()
    )


def extremes_monotone(trace: Trace, tau: int = 0, tol: float = 1e-12) -> bool:
    """Max of normal states nonincreasing and min nondecreasing, windowed over
    tau steps for asynchronous traces (tau=0 gives the synchronous form)."""
    normal = trace.normal_states()
    highs = []
    lows = []
    for k in range(trace.horizon + 1):
        lo = max(0, k - tau)
        highs.append(normal[lo : k + 1].max())
        lows.append(normal[lo : k + 1].min())
    highs = np.array(highs)
    lows = np.array(lows)
    return bool((np.diff(highs) <= tol).all() and (np.diff(lows) >= -tol).all())


@dataclass(frozen=True)
class RunSummary:
    converged: bool
    final_error: float
    safety_ok: bool
    steps_to_threshold: int | None
    monotone_ok: bool
    failed: bool
    warnings: tuple[str, ...] = ()


def summarize(
    trace: Trace,
    converge_tol: float = 1e-6,
    threshold: float = 1.0,
    failure_gap: float = 0.5,
    failure_window: int = 10,
) -> RunSummary:
    """Outcome metrics for one run.

    `failed` means the spread stayed at or above `failure_gap` over the last
    `failure_window` steps: a sustained-disagreement detector, not a claim
    about the exact trajectory.
    """
    tau = trace.config.tau if trace.config.mode == ASYNC else 0
    errors = consensus_error_series(trace, tau)
    final_error = float(errors[-1])
    steps = None
    for k, e in enumerate(errors):
        if e < threshold:
            steps = k
            break
    tail = errors[-failure_window:]
    return RunSummary(
        converged=final_error < converge_tol,
        final_error=final_error,
        safety_ok=check_safety(trace),
        steps_to_threshold=steps,
        monotone_ok=extremes_monotone(trace, tau),
        failed=bool((tail >= failure_gap).all()),
        warnings=trace.warnings,
    )
