"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class GeometryModel(BaseModel):
    width: int = Field(gt=0, le=0xFFFF)
    height: int = Field(gt=0, le=0xFFFF)


class ToreConfigModel(BaseModel):
    k: int = Field(default=4, ge=1)
    tau_us: int = Field(default=5_000_000, gt=0)
    tau_prime_us: int = Field(default=150, ge=1)


class EventModel(BaseModel):
    x: int = Field(ge=0)
    y: int = Field(ge=0)
    t: int = Field(ge=0)
    p: Literal[1, -1]


class SessionCreateRequest(BaseModel):
    geometry: GeometryModel
    config: ToreConfigModel = ToreConfigModel()


class SessionInfo(BaseModel):
    session_id: str
    geometry: GeometryModel
    config: ToreConfigModel
    event_count: int
    last_event_time: Optional[int]


class IngestRequest(BaseModel):
    events: list[EventModel]
    policy: Literal["reject", "clamp"] = "reject"


class IngestResponse(BaseModel):
    inserted: int
    events_per_sec: float
    last_event_time: Optional[int]


class RenderRequest(BaseModel):
    t: int = Field(ge=0)
    clamped: bool = True


class TensorPayload(BaseModel):
    """Row-major flattened tensor plus its shape, float64 values."""

    shape: list[int]
    data: list[float]
    query_time: Optional[int] = None


class PatchRequest(BaseModel):
    event: EventModel
    m: int = Field(default=9, ge=1)
    insert_missing: bool = False


class CellResponse(BaseModel):
    """One FIFO cell, newest first; null marks an empty slot."""

    slots: list[Optional[int]]


class RampParams(BaseModel):
    kind: Literal["ramp", "linear_ramp", "constant"] = "ramp"
    slope: float = 0.0
    offset: float = 0.0


class SinusoidParams(BaseModel):
    kind: Literal["sinusoid"]
    amplitude: float
    period_us: float
    phase: float = 0.0
    offset: float = 0.0


class StepTrainParams(BaseModel):
    kind: Literal["steps", "step_train"]
    times_us: list[int]
    heights: list[float]
    offset: float = 0.0


class SimulateRequest(BaseModel):
    geometry: GeometryModel
    signal: RampParams | SinusoidParams | StepTrainParams
    epsilon: float = Field(gt=0)
    t_start: int = 0
    t_end: int = 1_000_000
    quantization_us: int = Field(default=1, ge=1)
    noise_events: int = Field(default=0, ge=0)
    noise_seed: int = 0


class EventListResponse(BaseModel):
    count: int
    events: list[EventModel]


class BaselineRequest(BaseModel):
    geometry: GeometryModel
    events: list[EventModel]
    t_end: int
    duration: Optional[int] = None          # frame/count/voxel need a window
    bins: Optional[int] = None              # voxel only
    policy: Literal["reject", "clamp"] = "reject"


class SaePayload(BaseModel):
    shape: list[int]
    timestamps: list[int]
    valid: list[bool]


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
    detail: str
