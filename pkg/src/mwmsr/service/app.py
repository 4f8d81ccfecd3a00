"""The HTTP service: a thin layer over the core package.

Input problems (bad documents, out-of-range parameters, refused instance
sizes) map to 400 with a human-readable detail; the CLI translates those to
its config-error exit code.
"""

from __future__ import annotations

import dataclasses
import time

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..engine import run, summarize
from ..experiment import (
    cells_csv,
    details_json_obj,
    parse_experiment_config,
    run_grid_experiment,
)
from ..graph import Graph, GraphParseError, enumerate_in_paths, generate, parse_graph
from ..robustness import ComplexityGuardError, is_rs_robust
from ..scenario import ConfigError, load_scenario, scenario_echo
from ..traceio import trace_csv, trace_json
from .schemas import (
    CellModel,
    GraphPayload,
    GraphSummary,
    GridRequest,
    GridResponse,
    PathsRequest,
    PathsResponse,
    RobustnessRequest,
    RobustnessResponse,
    SimulateRequest,
    SimulateResponse,
    SummaryModel,
    WitnessModel,
)


def _build_graph(payload: GraphPayload) -> Graph:
    try:
        if payload.text is not None:
            return parse_graph(payload.text)
        return generate(payload.generator)
    except (GraphParseError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def create_app() -> FastAPI:
    app = FastAPI(title="mwmsr", version=__version__)

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/graph/parse", response_model=GraphSummary)
    def graph_parse(payload: GraphPayload):
        g = _build_graph(payload)
        return GraphSummary(n=g.n, directed=g.directed, edge_count=len(g.edges))

    @app.post("/graph/paths", response_model=PathsResponse)
    def graph_paths(req: PathsRequest):
        g = _build_graph(req.graph)
        if not (1 <= req.node <= g.n):
            raise HTTPException(400, f"node {req.node} out of range 1..{g.n}")
        paths = enumerate_in_paths(g, req.node - 1, req.hops)
        return PathsResponse(
            node=req.node,
            hops=req.hops,
            count=len(paths),
            paths=[[v + 1 for v in p.nodes] for p in paths],
        )

    @app.post("/robustness/check", response_model=RobustnessResponse)
    def robustness_check(req: RobustnessRequest):
        g = _build_graph(req.graph)
        start = time.perf_counter()
        try:
            report = is_rs_robust(g, req.r, req.s, req.hops, req.f, force=req.force)
        except ComplexityGuardError as exc:
            raise HTTPException(400, str(exc)) from exc
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        witness = None
        if report.witness is not None:
            w = report.witness
            witness = WitnessModel(
                v1=sorted(v + 1 for v in w.v1),
                v2=sorted(v + 1 for v in w.v2),
                fset=sorted(v + 1 for v in w.fset),
                z1=w.z1,
                z2=w.z2,
            )
        return RobustnessResponse(
            verdict=report.verdict,
            witness=witness,
            elapsed=time.perf_counter() - start,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate(req: SimulateRequest):
        try:
            cfg = load_scenario(req.scenario)
        except (ConfigError, GraphParseError) as exc:
            raise HTTPException(400, str(exc)) from exc
        cfg = dataclasses.replace(cfg, record_filters=req.record_filters)
        trace = run(cfg)
        summary = summarize(trace)
        return SimulateResponse(
            summary=SummaryModel(
                converged=summary.converged,
                final_error=summary.final_error,
                safety_ok=summary.safety_ok,
                steps_to_threshold=summary.steps_to_threshold,
                monotone_ok=summary.monotone_ok,
                failed=summary.failed,
                warnings=list(summary.warnings),
            ),
            echo=scenario_echo(cfg),
            trace_csv=trace_csv(trace),
            trace_json=trace_json(trace),
        )

    @app.post("/grid", response_model=GridResponse)
    def grid(req: GridRequest):
        try:
            cfg = parse_experiment_config(req.config)
        except ConfigError as exc:
            raise HTTPException(400, str(exc)) from exc
        cells, details = run_grid_experiment(cfg)
        return GridResponse(
            csv=cells_csv(cells),
            cells=[CellModel(**dataclasses.asdict(c)) for c in cells],
            details=details_json_obj(details) if req.include_details else None,
        )

    return app
