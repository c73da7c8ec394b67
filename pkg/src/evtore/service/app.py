"""FastAPI service wrapping the engine for long-running, multi-client use.

Sessions hold live SensorState instances: clients push events as they
arrive and request volumes, patches or cell snapshots at arbitrary query
times. Stateless endpoints expose the simulator and the baseline
representations. Writes are serialized per session with a lock, matching
the single-writer contract of the state.
"""

from __future__ import annotations

import threading
import uuid

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..baselines import WindowSpec, event_count, event_frame, sae, voxel_grid
from ..errors import EvtoreError
from ..events import Event, EventStream, SensorGeometry, validate_stream
from ..render import render_patch, render_unclamped, render_volume
from ..simulate import SimConfig, signal_from_kind, simulate
from ..state import SensorState, ToreConfig, new_state
from . import schemas as s


class Session:
    def __init__(self, state: SensorState):
        self.state = state
        self.lock = threading.Lock()
        self.event_count = 0


def _geometry(m: s.GeometryModel) -> SensorGeometry:
    return SensorGeometry(m.width, m.height)


def _config(m: s.ToreConfigModel) -> ToreConfig:
    return ToreConfig(k=m.k, tau_us=m.tau_us, tau_prime_us=m.tau_prime_us)


def _stream(events: list[s.EventModel], geometry: SensorGeometry, policy: str) -> EventStream:
    return validate_stream(
        [Event(e.x, e.y, e.t, e.p) for e in events], geometry, policy=policy
    )


def _tensor(data: np.ndarray, query_time: int | None = None) -> s.TensorPayload:
    return s.TensorPayload(
        shape=list(data.shape),
        data=[float(v) for v in data.ravel()],
        query_time=query_time,
    )


def _session_info(session_id: str, session: Session) -> s.SessionInfo:
    st = session.state
    return s.SessionInfo(
        session_id=session_id,
        geometry=s.GeometryModel(width=st.geometry.width, height=st.geometry.height),
        config=s.ToreConfigModel(
            k=st.config.k, tau_us=st.config.tau_us, tau_prime_us=st.config.tau_prime_us
        ),
        event_count=session.event_count,
        last_event_time=st.last_event_time,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="evtore", version=__version__)
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()

    @app.exception_handler(EvtoreError)
    async def _library_error(request: Request, exc: EvtoreError) -> JSONResponse:
        return JSONResponse(
            status_code=422,
            content=s.ErrorResponse(error=type(exc).__name__, detail=str(exc)).model_dump(),
        )

    def _get(session_id: str) -> Session:
        try:
            return sessions[session_id]
        except KeyError:
            raise _NotFound(session_id) from None

    class _NotFound(Exception):
        def __init__(self, session_id: str):
            self.session_id = session_id

    @app.exception_handler(_NotFound)
    async def _not_found(request: Request, exc: _NotFound) -> JSONResponse:
        return JSONResponse(
            status_code=404,
            content=s.ErrorResponse(
                error="UnknownSession", detail=f"no session {exc.session_id}"
            ).model_dump(),
        )

    @app.get("/health", response_model=s.HealthResponse)
    def health() -> s.HealthResponse:
        return s.HealthResponse(status="ok", version=__version__)

    @app.post("/sessions", response_model=s.SessionInfo, status_code=201)
    def create_session(req: s.SessionCreateRequest) -> s.SessionInfo:
        state = new_state(_geometry(req.geometry), _config(req.config))
        session_id = uuid.uuid4().hex
        with registry_lock:
            sessions[session_id] = Session(state)
        return _session_info(session_id, sessions[session_id])

    @app.get("/sessions", response_model=list[s.SessionInfo])
    def list_sessions() -> list[s.SessionInfo]:
        with registry_lock:
            return [_session_info(sid, sess) for sid, sess in sessions.items()]

    @app.get("/sessions/{session_id}", response_model=s.SessionInfo)
    def session_info(session_id: str) -> s.SessionInfo:
        return _session_info(session_id, _get(session_id))

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str) -> None:
        _get(session_id)
        with registry_lock:
            sessions.pop(session_id, None)

    @app.post("/sessions/{session_id}/events", response_model=s.IngestResponse)
    def ingest_events(session_id: str, req: s.IngestRequest) -> s.IngestResponse:
        session = _get(session_id)
        with session.lock:
            stream = _stream(req.events, session.state.geometry, req.policy)
            report = session.state.ingest(stream, policy=req.policy)
            session.event_count += report.events
            return s.IngestResponse(
                inserted=report.events,
                events_per_sec=report.events_per_sec,
                last_event_time=session.state.last_event_time,
            )

    @app.post("/sessions/{session_id}/render", response_model=s.TensorPayload)
    def render(session_id: str, req: s.RenderRequest) -> s.TensorPayload:
        session = _get(session_id)
        with session.lock:
            fn = render_volume if req.clamped else render_unclamped
            volume = fn(session.state, req.t)
        return _tensor(volume.data, query_time=req.t)

    @app.post("/sessions/{session_id}/patch", response_model=s.TensorPayload)
    def patch(session_id: str, req: s.PatchRequest) -> s.TensorPayload:
        session = _get(session_id)
        e = req.event
        with session.lock:
            result = render_patch(
                session.state, Event(e.x, e.y, e.t, e.p), m=req.m,
                insert_missing=req.insert_missing,
            )
        return _tensor(result.data, query_time=e.t)

    @app.get("/sessions/{session_id}/cells/{x}/{y}/{p}", response_model=s.CellResponse)
    def cell(session_id: str, x: int, y: int, p: int) -> s.CellResponse:
        session = _get(session_id)
        with session.lock:
            return s.CellResponse(slots=session.state.snapshot_cell(x, y, p))

    @app.post("/simulate", response_model=s.EventListResponse)
    def run_simulation(req: s.SimulateRequest) -> s.EventListResponse:
        geometry = _geometry(req.geometry)
        params = req.signal.model_dump()
        kind = params.pop("kind")
        signal = signal_from_kind(kind, **params)
        config = SimConfig(
            geometry=geometry,
            epsilon=req.epsilon,
            t_start=req.t_start,
            t_end=req.t_end,
            quantization_us=req.quantization_us,
            noise_events=req.noise_events,
            noise_seed=req.noise_seed,
        )
        stream = simulate(signal, config)
        return s.EventListResponse(
            count=len(stream),
            events=[s.EventModel(x=e.x, y=e.y, t=e.t, p=e.p) for e in stream],
        )

    @app.post("/baselines/{kind}", response_model=s.TensorPayload)
    def baseline(kind: str, req: s.BaselineRequest) -> s.TensorPayload:
        geometry = _geometry(req.geometry)
        stream = _stream(req.events, geometry, req.policy)
        if kind in ("frame", "count", "voxel"):
            if req.duration is None:
                raise EvtoreError(f"baseline {kind!r} needs a window duration")
            window = WindowSpec(t_end=req.t_end, duration=req.duration)
        if kind == "frame":
            return _tensor(event_frame(stream, geometry, window))
        if kind == "count":
            return _tensor(event_count(stream, geometry, window))
        if kind == "voxel":
            if req.bins is None:
                raise EvtoreError("baseline 'voxel' needs a bin count")
            return _tensor(voxel_grid(stream, geometry, window, req.bins))
        if kind == "sae":
            raise EvtoreError("use /baselines/sae/timestamps for the SAE payload")
        raise EvtoreError(f"unknown baseline {kind!r}; valid: frame, count, sae, voxel")

    @app.post("/baselines/sae/timestamps", response_model=s.SaePayload)
    def baseline_sae(req: s.BaselineRequest) -> s.SaePayload:
        geometry = _geometry(req.geometry)
        stream = _stream(req.events, geometry, req.policy)
        result = sae(stream, geometry, req.t_end)
        return s.SaePayload(
            shape=list(result.timestamps.shape),
            timestamps=[int(v) for v in result.timestamps.ravel()],
            valid=[bool(v) for v in result.valid.ravel()],
        )

    return app


app = create_app()
