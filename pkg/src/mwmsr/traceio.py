"""Trace export in bit-stable CSV and JSON.

Node ids are 1-based in all emitted text, matching the edge-list file format;
floats use repr (shortest round-trip decimal), so identical runs emit
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path as FsPath

from .engine import RunSummary, Trace


def trace_csv(trace: Trace) -> str:
    lines = ["k,node,value,is_normal"]
    for k in range(trace.horizon + 1):
        row = trace.states[k]
        for i in range(trace.n):
            flag = 1 if trace.is_normal[i] else 0
            lines.append(f"{k},{i + 1},{float(row[i])!r},{flag}")
    return "\n".join(lines) + "\n"


def _audit_entry(pairs) -> list:
    return [[v, [p + 1 for p in path]] for v, path in pairs]


def trace_json(trace: Trace) -> str:
    cfg = trace.config
    doc = {
        "label": cfg.label,
        "mode": cfg.mode,
        "hops": cfg.hops,
        "f": cfg.f,
        "horizon": trace.horizon,
        "seed": cfg.seed,
        "nodes": trace.n,
        "normal": [i + 1 for i in range(trace.n) if trace.is_normal[i]],
        "adversaries": [a.node + 1 for a in cfg.adversaries],
        "initial": list(map(float, trace.states[0])),
        "states": [list(map(float, trace.states[k])) for k in range(trace.horizon + 1)],
        "warnings": list(trace.warnings),
    }
    if trace.filters:
        filters: dict = {}
        for (k, i), audit in sorted(trace.filters.items()):
            filters.setdefault(str(k), {})[str(i + 1)] = {
                "removed_high": _audit_entry(audit.removed_high),
                "removed_low": _audit_entry(audit.removed_low),
                "kept": _audit_entry(audit.kept),
                "weight": audit.weight,
            }
        doc["filters"] = filters
    return json.dumps(doc, sort_keys=True, indent=1)


def summary_json(summary: RunSummary) -> str:
    return json.dumps(
        {
            "converged": summary.converged,
            "final_error": summary.final_error,
            "safety_ok": summary.safety_ok,
            "steps_to_threshold": summary.steps_to_threshold,
            "monotone_ok": summary.monotone_ok,
            "failed": summary.failed,
            "warnings": list(summary.warnings),
        },
        sort_keys=True,
        indent=1,
    )


def emit_trace(trace: Trace, fmt: str, path: FsPath | str) -> FsPath:
    """Write one trace artifact; fmt is 'csv' or 'json'."""
    path = FsPath(path)
    if fmt == "csv":
        path.write_text(trace_csv(trace))
    elif fmt == "json":
        path.write_text(trace_json(trace))
    else:
        raise ValueError(f"unknown trace format {fmt!r}")
    return path
