"""Scenario files: line-oriented key/value sections describing one run.

The echo-back serialization records every resolved default explicitly, so
re-loading an echoed config reproduces the identical run byte for byte.
"""

from __future__ import annotations

import math
from pathlib import Path as FsPath

from .adversary import (
    WILDCARD,
    AdversarySpec,
    ConstantLaw,
    Law,
    OmitLaw,
    PassthroughLaw,
    SineLaw,
    TableLaw,
)
from .engine import ASYNC, BY_HOPS, SYNC, UNIFORM, ScenarioConfig, validate_config
from .graph import Graph, format_graph, generate, parse_graph


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _sections(text: str) -> list[tuple[str, int, list[tuple[int, str, str]]]]:
    """Split into (section name, line, [(line, key, value), ...]) triples."""
    out: list[tuple[str, int, list[tuple[int, str, str]]]] = []
    current: list[tuple[int, str, str]] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            current = []
            out.append((name, lineno, current))
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = line.split("=", 1)
        if current is None:
            raise ConfigError("key/value before any [section]", lineno)
        current.append((lineno, key.strip(), value.strip()))
    return out


def _parse_law(
    spec: str, lineno: int, normal_range: tuple[float, float], allow_passthrough: bool
) -> Law:
    parts = spec.split()
    if not parts:
        raise ConfigError("empty law", lineno)
    kind = parts[0]
    args = parts[1:]
    try:
        if kind == "constant":
            if len(args) != 1:
                raise ConfigError("constant law takes one value", lineno)
            return ConstantLaw(float(args[0]))
        if kind == "sine":
            lo, hi = normal_range
            params = {
                "amplitude": (hi - lo) / 2.0,
                "frequency": 0.3,
                "offset": (lo + hi) / 2.0,
                "phase": 0.0,
            }
            for a in args:
                if "=" not in a:
                    raise ConfigError(f"sine parameter {a!r} must be name=value", lineno)
                name, val = a.split("=", 1)
                if name not in params:
                    raise ConfigError(f"unknown sine parameter {name!r}", lineno)
                params[name] = float(val)
            return SineLaw(**params)
        if kind == "table":
            if not args:
                raise ConfigError("table law needs at least one value", lineno)
            return TableLaw(tuple(float(a) for a in args))
        if kind == "omit":
            return OmitLaw()
        if kind == "passthrough" and allow_passthrough:
            return PassthroughLaw()
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad number in law {spec!r}", lineno) from None
    raise ConfigError(f"unknown law {spec!r}", lineno)


def _format_law(law: Law) -> str:
    if isinstance(law, ConstantLaw):
        return f"constant {law.value!r}"
    if isinstance(law, SineLaw):
        return (
            f"sine amplitude={law.amplitude!r} frequency={law.frequency!r} "
            f"offset={law.offset!r} phase={law.phase!r}"
        )
    if isinstance(law, TableLaw):
        return "table " + " ".join(repr(v) for v in law.values)
    if isinstance(law, OmitLaw):
        return "omit"
    if isinstance(law, PassthroughLaw):
        return "passthrough"
    raise ValueError(f"law {law!r} has no file representation")


def load_scenario(text: str, base_dir: FsPath | str | None = None) -> ScenarioConfig:
    """Parse a scenario document into a validated ScenarioConfig.

    `base_dir` resolves relative `source = file ...` references.
    """
    secs = _sections(text)
    if not secs:
        raise ConfigError("empty scenario: no sections found")
    by_name: dict[str, list[tuple[int, str, str]]] = {}
    adversary_secs: list[tuple[int, int, list[tuple[int, str, str]]]] = []
    for name, lineno, items in secs:
        if name.startswith("adversary"):
            parts = name.split()
            if len(parts) != 2:
                raise ConfigError("adversary section needs a node id", lineno)
            try:
                node = int(parts[1])
            except ValueError:
                raise ConfigError(f"bad adversary id {parts[1]!r}", lineno) from None
            adversary_secs.append((node, lineno, items))
        elif name in by_name:
            raise ConfigError(f"duplicate section [{name}]", lineno)
        else:
            by_name[name] = items

    known = {"graph", "run", "init", "schedule", "delays"}
    for name, lineno, _ in secs:
        if not name.startswith("adversary") and name not in known:
            raise ConfigError(f"unknown section [{name}]", lineno)

    if "graph" not in by_name:
        raise ConfigError("missing [graph] section")
    graph = _load_graph(by_name["graph"], base_dir)

    run_items = dict_of(by_name.get("run", []), "run")
    mode = run_items.pop("mode", ("", SYNC))[1]
    if mode not in (SYNC, ASYNC):
        raise ConfigError(f"unknown mode {mode!r}")
    hops = _int_of(run_items, "hops", required=True)
    f = _int_of(run_items, "f", required=True)
    horizon = _int_of(run_items, "horizon", default=100)
    seed = _int_of(run_items, "seed", default=0)
    tau = _int_of(run_items, "tau", default=0)
    label = run_items.pop("label", ("", ""))[1]
    _reject_unknown(run_items, "run")

    init_items = dict_of(by_name.get("init", []), "init")
    if "values" not in init_items:
        raise ConfigError("missing initial values ([init] values = ...)")
    lineno, raw = init_items.pop("values")
    try:
        initial = tuple(float(v) for v in raw.split())
    except ValueError:
        raise ConfigError("bad initial values", lineno) from None
    if len(initial) != graph.n:
        raise ConfigError(
            f"expected {graph.n} initial values, got {len(initial)}", lineno
        )
    _reject_unknown(init_items, "init")

    adv_nodes_1b = [node for node, _, _ in adversary_secs]
    if len(set(adv_nodes_1b)) != len(adv_nodes_1b):
        raise ConfigError("duplicate adversary sections")
    normal_vals = [
        v for i, v in enumerate(initial, start=1) if i not in set(adv_nodes_1b)
    ]
    if normal_vals:
        normal_range = (min(normal_vals), max(normal_vals))
    else:
        normal_range = (0.0, 1.0)

    adversaries = []
    for node1, lineno, items in sorted(adversary_secs, key=lambda t: t[0]):
        if not (1 <= node1 <= graph.n):
            raise ConfigError(f"adversary id {node1} out of range 1..{graph.n}", lineno)
        own: Law | None = None
        relays: dict[int | str, Law] = {}
        for ln, key, value in items:
            if key == "own":
                own = _parse_law(value, ln, normal_range, allow_passthrough=False)
            elif key.startswith("relay"):
                target = key[len("relay") :].strip()
                law = _parse_law(value, ln, normal_range, allow_passthrough=True)
                if target == WILDCARD:
                    relays[WILDCARD] = law
                else:
                    try:
                        src1 = int(target)
                    except ValueError:
                        raise ConfigError(f"bad relay source {target!r}", ln) from None
                    if not (1 <= src1 <= graph.n):
                        raise ConfigError(f"relay source {src1} out of range", ln)
                    relays[src1 - 1] = law
            else:
                raise ConfigError(f"unknown adversary key {key!r}", ln)
        if own is None:
            raise ConfigError(f"adversary {node1} needs an 'own' law", lineno)
        adversaries.append(AdversarySpec(node1 - 1, own, relays))

    periods = phases = None
    if "schedule" in by_name:
        sched = dict_of(by_name["schedule"], "schedule")
        periods = _int_tuple(sched, "periods", graph.n)
        phases = _int_tuple(sched, "phases", graph.n, optional=True)
        _reject_unknown(sched, "schedule")

    delay_kind = BY_HOPS
    hop_delays: tuple[int, ...] = ()
    withhold = False
    if "delays" in by_name:
        raw_items = by_name["delays"]
        hop_map: dict[int, int] = {}
        for ln, key, value in raw_items:
            if key == "law":
                if value not in (BY_HOPS, UNIFORM):
                    raise ConfigError(f"unknown delay law {value!r}", ln)
                delay_kind = value
            elif key.startswith("hop"):
                try:
                    h = int(key[len("hop") :].strip())
                    hop_map[h] = int(value)
                except ValueError:
                    raise ConfigError(f"bad hop delay {key!r} = {value!r}", ln) from None
            elif key == "withhold-adversary":
                withhold = value.lower() in ("true", "yes", "1")
            else:
                raise ConfigError(f"unknown delays key {key!r}", ln)
        if hop_map:
            if set(hop_map) != set(range(1, max(hop_map) + 1)):
                raise ConfigError("hop delays must cover 1..max contiguously")
            hop_delays = tuple(hop_map[h] for h in range(1, max(hop_map) + 1))

    if mode == ASYNC and periods is None:
        raise ConfigError("async mode needs a [schedule] section with periods")
    if mode == ASYNC and delay_kind == BY_HOPS and not hop_delays:
        hop_delays = tuple(0 for _ in range(hops))

    cfg = ScenarioConfig(
        graph=graph,
        hops=hops,
        f=f,
        initial_values=initial,
        adversaries=tuple(adversaries),
        mode=mode,
        horizon=horizon,
        seed=seed,
        periods=periods,
        phases=phases,
        delay_kind=delay_kind,
        hop_delays=hop_delays,
        tau=tau,
        withhold_adversary_origin=withhold,
        label=label,
    )
    validate_config(cfg)
    return cfg


def load_scenario_file(path: FsPath | str) -> ScenarioConfig:
    path = FsPath(path)
    return load_scenario(path.read_text(), base_dir=path.parent)


def dict_of(items: list[tuple[int, str, str]], section: str) -> dict:
    out: dict[str, tuple[int, str]] = {}
    for lineno, key, value in items:
        if key in out:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        out[key] = (lineno, value)
    return out


def _reject_unknown(items: dict, section: str):
    if items:
        key = next(iter(items))
        lineno, _ = items[key]
        raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)


def _int_of(items: dict, key: str, default: int | None = None, required: bool = False) -> int:
    if key not in items:
        if required:
            raise ConfigError(f"missing required key {key!r} in [run]")
        return default
    lineno, value = items.pop(key)
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"bad integer for {key!r}: {value!r}", lineno) from None


def _int_tuple(items: dict, key: str, n: int, optional: bool = False):
    if key not in items:
        if optional:
            return None
        raise ConfigError(f"missing key {key!r}")
    lineno, value = items.pop(key)
    try:
        vals = tuple(int(v) for v in value.split())
    except ValueError:
        raise ConfigError(f"bad integers for {key!r}", lineno) from None
    if len(vals) != n:
        raise ConfigError(f"{key} needs {n} entries, got {len(vals)}", lineno)
    return vals


def _load_graph(items: list[tuple[int, str, str]], base_dir) -> Graph:
    source = None
    source_line = 0
    edge_lines: list[tuple[int, str]] = []
    for lineno, key, value in items:
        if key == "source":
            if source is not None:
                raise ConfigError("duplicate graph source", lineno)
            source = value
            source_line = lineno
        elif key == "edge":
            edge_lines.append((lineno, value))
        else:
            raise ConfigError(f"unknown graph key {key!r}", lineno)
    if source is None:
        raise ConfigError("graph section needs a 'source' key")
    parts = source.split()
    if parts[0] == "file":
        if len(parts) != 2:
            raise ConfigError("graph file source needs a path", source_line)
        path = FsPath(parts[1])
        if base_dir is not None and not path.is_absolute():
            path = FsPath(base_dir) / path
        if not path.exists():
            raise ConfigError(f"graph file {path} not found", source_line)
        return parse_graph(path.read_text())
    if parts[0] == "inline":
        if len(parts) != 3:
            raise ConfigError(
                "inline source is 'inline directed|undirected N'", source_line
            )
        doc = [f"{parts[1]} {parts[2]}"] + [v for _, v in edge_lines]
        return parse_graph("\n".join(doc))
    if edge_lines:
        raise ConfigError("edge lines only belong to an inline source", edge_lines[0][0])
    try:
        return generate(source)
    except ValueError as exc:
        raise ConfigError(str(exc), source_line) from None


def scenario_echo(cfg: ScenarioConfig) -> str:
    """Canonical serialization with every default resolved explicitly."""
    lines: list[str] = []
    g = cfg.graph
    lines.append("[graph]")
    doc = format_graph(g).splitlines()
    lines.append(f"source = inline {doc[0]}")
    lines.extend(f"edge = {edge}" for edge in doc[1:])
    lines.append("")
    lines.append("[run]")
    lines.append(f"mode = {cfg.mode}")
    lines.append(f"hops = {cfg.hops}")
    lines.append(f"f = {cfg.f}")
    lines.append(f"horizon = {cfg.horizon}")
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"tau = {cfg.tau}")
    if cfg.label:
        lines.append(f"label = {cfg.label}")
    lines.append("")
    lines.append("[init]")
    lines.append("values = " + " ".join(repr(v) for v in cfg.initial_values))
    for a in sorted(cfg.adversaries, key=lambda a: a.node):
        lines.append("")
        lines.append(f"[adversary {a.node + 1}]")
        lines.append(f"own = {_format_law(a.own_value_law)}")
        for key in sorted(a.relay_laws, key=lambda s: (isinstance(s, str), s)):
            name = WILDCARD if key == WILDCARD else str(key + 1)
            lines.append(f"relay {name} = {_format_law(a.relay_laws[key])}")
    if cfg.mode == ASYNC:
        lines.append("")
        lines.append("[schedule]")
        lines.append("periods = " + " ".join(str(p) for p in cfg.periods))
        phases = cfg.phases or tuple(0 for _ in range(g.n))
        lines.append("phases = " + " ".join(str(p) for p in phases))
        lines.append("")
        lines.append("[delays]")
        lines.append(f"law = {cfg.delay_kind}")
        for h, d in enumerate(cfg.hop_delays, start=1):
            lines.append(f"hop {h} = {d}")
        lines.append(f"withhold-adversary = {'true' if cfg.withhold_adversary_origin else 'false'}")
    return "\n".join(lines) + "\n"
