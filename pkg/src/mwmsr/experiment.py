"""Monte-Carlo grid sweep: success rate of the filter on a lattice network.

A 100-node sensor grid is attacked by sine-valued malicious nodes drawn from
a fixed order; each (f, radius, hops) cell runs seeded repetitions with
uniform random initial values and scores a run as a success when the spread
of normal states is below the threshold at the scoring step.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .adversary import WILDCARD, AdversarySpec, SineLaw
from .engine import ScenarioConfig, consensus_error_series, run_sync
from .graph import Graph, generate_grid, is_connected
from .scenario import ConfigError, _sections

# Malicious nodes switch on in this order as f grows (grid ids, 0-based).
MALICIOUS_ORDER = (32, 34, 36, 38, 43, 62, 64, 66, 68, 74, 14)


@dataclass(frozen=True)
class ExperimentConfig:
    radii: tuple[float, ...]
    hops_values: tuple[int, ...]
    f_values: tuple[int, ...]
    side: int = 10
    runs: int = 50
    horizon: int = 70
    threshold: float = 1.0
    success_step: int = 70
    init_low: float = 0.0
    init_high: float = 100.0
    frequency: float = 0.3
    seed: int = 12345

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.threshold <= 0:
            raise ConfigError("threshold must be positive")
        if self.success_step > self.horizon:
            raise ConfigError("success-step cannot exceed the horizon")
        if not (self.radii and self.hops_values and self.f_values):
            raise ConfigError("sweep axes must be nonempty")
        if max(self.f_values) > len(MALICIOUS_ORDER):
            raise ConfigError(
                f"f greater than {len(MALICIOUS_ORDER)} exceeds the malicious order"
            )


def default_experiment_config() -> ExperimentConfig:
    """Desk-scale defaults; the full sweep takes a while on one core."""
    return ExperimentConfig(
        radii=(1.2, 1.5, 2.0, 2.5, 3.1),
        hops_values=(1, 2),
        f_values=(0, 1, 2, 4, 6),
    )


@dataclass(frozen=True)
class CellResult:
    f: int
    radius: float
    hops: int
    success_rate: float
    mean_final_error: float
    mean_steps_to_threshold: float | None
    disconnected: bool


@dataclass(frozen=True)
class RunDetail:
    f: int
    radius: float
    hops: int
    run_index: int
    seed: int
    phases: tuple[float, ...]
    final_error: float
    success: bool
    steps_to_threshold: int | None


def run_seed(seed: int, f: int, radius: float, hops: int, run_index: int) -> int:
    """Stable per-run seed; adding cells never perturbs existing cells."""
    text = f"{seed}|{f}|{radius!r}|{hops}|{run_index}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _cell_scenarios(cfg: ExperimentConfig, g: Graph, f: int, radius: float, hops: int):
    amplitude = (cfg.init_high - cfg.init_low) / 2.0
    offset = (cfg.init_high + cfg.init_low) / 2.0
    malicious = MALICIOUS_ORDER[:f]
    for run_index in range(cfg.runs):
        rs = run_seed(cfg.seed, f, radius, hops, run_index)
        rng = np.random.default_rng(rs)
        phases = tuple(float(p) for p in rng.uniform(0.0, 2.0 * math.pi, size=f))
        init = rng.uniform(cfg.init_low, cfg.init_high, size=g.n)
        adversaries = []
        for node, phase in zip(malicious, phases):
            law = SineLaw(amplitude, cfg.frequency, offset, phase)
            adversaries.append(AdversarySpec(node, law, {WILDCARD: law}))
            init[node] = law.evaluate(0, None)
        yield run_index, rs, phases, ScenarioConfig(
            graph=g,
            hops=hops,
            f=f,
            initial_values=tuple(float(v) for v in init),
            adversaries=tuple(adversaries),
            horizon=cfg.horizon,
            seed=rs,
        )


def run_cell(
    cfg: ExperimentConfig, f: int, radius: float, hops: int, g: Graph | None = None
) -> tuple[CellResult, list[RunDetail]]:
    if g is None:
        g = generate_grid(cfg.side, radius)
    details: list[RunDetail] = []
    for run_index, rs, phases, scenario in _cell_scenarios(cfg, g, f, radius, hops):
        trace = run_sync(scenario)
        errors = consensus_error_series(trace)
        final = float(errors[cfg.success_step])
        steps = None
        for k, e in enumerate(errors):
            if e < cfg.threshold:
                steps = k
                break
        details.append(
            RunDetail(
                f=f,
                radius=radius,
                hops=hops,
                run_index=run_index,
                seed=rs,
                phases=phases,
                final_error=final,
                success=final < cfg.threshold,
                steps_to_threshold=steps,
            )
        )
    successes = sum(1 for d in details if d.success)
    reached = [d.steps_to_threshold for d in details if d.steps_to_threshold is not None]
    cell = CellResult(
        f=f,
        radius=radius,
        hops=hops,
        success_rate=successes / cfg.runs,
        mean_final_error=sum(d.final_error for d in details) / cfg.runs,
        mean_steps_to_threshold=(sum(reached) / len(reached)) if reached else None,
        disconnected=not is_connected(g),
    )
    return cell, details


def run_grid_experiment(
    cfg: ExperimentConfig,
) -> tuple[list[CellResult], list[RunDetail]]:
    """All cells, sorted by (f, radius, hops); per-run details for recounts."""
    cells: list[CellResult] = []
    details: list[RunDetail] = []
    graphs: dict[float, Graph] = {}
    for f in sorted(cfg.f_values):
        for radius in sorted(cfg.radii):
            if radius not in graphs:
                graphs[radius] = generate_grid(cfg.side, radius)
            for hops in sorted(cfg.hops_values):
                cell, runs = run_cell(cfg, f, radius, hops, graphs[radius])
                cells.append(cell)
                details.extend(runs)
    return cells, details


def cells_csv(cells: Iterable[CellResult]) -> str:
    lines = [
        "f,radius,hops,success_rate,mean_final_error,mean_steps_to_threshold,disconnected"
    ]
    for c in cells:
        steps = "" if c.mean_steps_to_threshold is None else repr(c.mean_steps_to_threshold)
        lines.append(
            f"{c.f},{c.radius!r},{c.hops},{c.success_rate!r},"
            f"{c.mean_final_error!r},{steps},{1 if c.disconnected else 0}"
        )
    return "\n".join(lines) + "\n"


def parse_experiment_config(text: str) -> ExperimentConfig:
    secs = _sections(text)
    if not secs:
        raise ConfigError("empty experiment config")
    items: dict[str, tuple[int, str]] = {}
    for name, lineno, pairs in secs:
        if name != "grid":
            raise ConfigError(f"unknown section [{name}]", lineno)
        for ln, key, value in pairs:
            if key in items:
                raise ConfigError(f"duplicate key {key!r}", ln)
            items[key] = (ln, value)

    def take(key, conv, default=None, required=False):
        if key not in items:
            if required:
                raise ConfigError(f"missing required key {key!r} in [grid]")
            return default
        lineno, value = items.pop(key)
        try:
            return conv(value)
        except ValueError:
            raise ConfigError(f"bad value for {key!r}: {value!r}", lineno) from None

    def floats(value):
        return tuple(float(v) for v in value.split())

    def ints(value):
        return tuple(int(v) for v in value.split())

    cfg = ExperimentConfig(
        radii=take("radii", floats, required=True),
        hops_values=take("hops", ints, required=True),
        f_values=take("f", ints, required=True),
        side=take("side", int, 10),
        runs=take("runs", int, 50),
        horizon=take("horizon", int, 70),
        threshold=take("threshold", float, 1.0),
        success_step=take("success-step", int, 70),
        init_low=take("init-low", float, 0.0),
        init_high=take("init-high", float, 100.0),
        frequency=take("frequency", float, 0.3),
        seed=take("seed", int, 12345),
    )
    if items:
        key = next(iter(items))
        raise ConfigError(f"unknown key {key!r} in [grid]", items[key][0])
    return cfg


def details_json_obj(details: Iterable[RunDetail]) -> list[dict]:
    return [
        {
            "f": d.f,
            "radius": d.radius,
            "hops": d.hops,
            "run_index": d.run_index,
            "seed": d.seed,
            "phases": list(d.phases),
            "final_error": d.final_error,
            "success": d.success,
            "steps_to_threshold": d.steps_to_threshold,
        }
        for d in details
    ]
