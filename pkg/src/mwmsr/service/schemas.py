"""Pydantic request/response models for the HTTP service.

All node ids in request and response bodies are 1-based, matching the
edge-list file format.
"""

from __future__ import annotations

from pydantic import BaseModel, Field, model_validator


class GraphPayload(BaseModel):
    """A graph supplied either as an edge-list document or a generator spec."""

    text: str | None = None
    generator: str | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.text is None) == (self.generator is None):
            raise ValueError("provide exactly one of 'text' or 'generator'")
        return self


class GraphSummary(BaseModel):
    n: int
    directed: bool
    edge_count: int


class PathsRequest(BaseModel):
    graph: GraphPayload
    node: int = Field(ge=1)
    hops: int = Field(ge=1)


class PathsResponse(BaseModel):
    node: int
    hops: int
    count: int
    paths: list[list[int]]


class RobustnessRequest(BaseModel):
    graph: GraphPayload
    r: int = Field(ge=0)
    s: int = Field(default=1, ge=1)
    hops: int = Field(ge=1)
    f: int = Field(ge=0)
    force: bool = False


class WitnessModel(BaseModel):
    v1: list[int]
    v2: list[int]
    fset: list[int]
    z1: int
    z2: int


class RobustnessResponse(BaseModel):
    verdict: bool
    witness: WitnessModel | None = None
    elapsed: float


class SummaryModel(BaseModel):
    converged: bool
    final_error: float
    safety_ok: bool
    steps_to_threshold: int | None
    monotone_ok: bool
    failed: bool
    warnings: list[str]


class SimulateRequest(BaseModel):
    scenario: str
    record_filters: bool = True


class SimulateResponse(BaseModel):
    summary: SummaryModel
    echo: str
    trace_csv: str
    trace_json: str


class CellModel(BaseModel):
    f: int
    radius: float
    hops: int
    success_rate: float
    mean_final_error: float
    mean_steps_to_threshold: float | None
    disconnected: bool


class GridRequest(BaseModel):
    config: str
    include_details: bool = False


class GridResponse(BaseModel):
    csv: str
    cells: list[CellModel]
    details: list[dict] | None = None
