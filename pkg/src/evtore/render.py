"""Render TORE volumes and patches from a SensorState at arbitrary query times.

Each output value is the clamped log time difference

    max(min(ln(t - slot + 1), ln(tau)), ln(tau'))

computed in double precision with natural log. The +1 is applied to the
integer microsecond difference before the log, so a slot equal to the query
time stays finite (ln 1 = 0, then floor-clamped). EMPTY slots behave as
negative infinity: their value saturates to ln(tau) exactly. Because only
integer differences enter the log, shifting all timestamps and the query
time together leaves the output bit-identical.

Rendering is read-only over the state; queries must not precede the newest
ingested event (causal contract).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EvenPatchSize, OutOfBoundsEvent, QueryBeforeLastEvent, UnsortedQueryTimes
from .events import Event, EventStream, SensorGeometry, polarity_channel
from .state import EMPTY, SensorState, ToreConfig, new_state


def log_tau(config: ToreConfig) -> float:
    """Upper clamp ln(tau); also the value of a never-fired slot."""
    return float(np.log(np.float64(config.tau_us)))


def log_tau_prime(config: ToreConfig) -> float:
    """Lower clamp ln(tau')."""
    return float(np.log(np.float64(config.tau_prime_us)))


@dataclass(frozen=True)
class ToreVolume:
    """Dense [2, K, H, W] float64 tensor rendered at query_time."""

    query_time: int
    config: ToreConfig
    geometry: SensorGeometry
    data: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)


@dataclass(frozen=True)
class TorePatch:
    """Localized [2, K, m, m] volume centered on an event of interest."""

    center: tuple[int, int]
    m: int
    query_time: int
    config: ToreConfig
    data: np.ndarray

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)


def _check_causal(state: SensorState, t: int) -> None:
    if state.last_event_time is not None and t < state.last_event_time:
        raise QueryBeforeLastEvent(t, state.last_event_time)


def _clamped_values(slots: np.ndarray, t: int, config: ToreConfig) -> np.ndarray:
    """Apply the clamped log transform to a slot array."""
    out = np.full(slots.shape, log_tau(config), dtype=np.float64)
    filled = slots != EMPTY
    if filled.any():
        diff = (np.int64(t) - slots[filled] + 1).astype(np.float64)
        vals = np.log(diff)
        np.minimum(vals, log_tau(config), out=vals)
        np.maximum(vals, log_tau_prime(config), out=vals)
        out[filled] = vals
    return out


def render_volume(state: SensorState, t: int) -> ToreVolume:
    """Full-frame clamped volume at time t (t >= last ingested event)."""
    _check_causal(state, t)
    data = _clamped_values(state.fifo, t, state.config)
    return ToreVolume(t, state.config, state.geometry, data)


def render_unclamped(state: SensorState, t: int,
                     empty_value: float | None = None) -> ToreVolume:
    """Raw log time differences with no clamps (ablation variant).

    EMPTY slots map to empty_value, defaulting to ln(tau).
    """
    _check_causal(state, t)
    fill = log_tau(state.config) if empty_value is None else float(empty_value)
    data = np.full(state.fifo.shape, fill, dtype=np.float64)
    filled = state.fifo != EMPTY
    if filled.any():
        diff = (np.int64(t) - state.fifo[filled] + 1).astype(np.float64)
        data[filled] = np.log(diff)
    return ToreVolume(t, state.config, state.geometry, data)


def render_patch(state: SensorState, e: Event, m: int = 9,
                 insert_missing: bool = False) -> TorePatch:
    """m x m patch centered on an event of interest, rendered at e.t.

    The event is expected to be part of the state already (it belongs to its
    own patch); pass insert_missing=True to insert it first when building
    patches straight off a raw feed. Positions outside the sensor are filled
    with ln(tau), indistinguishable from pixels that never fired.
    """
    if m % 2 == 0 or m < 1:
        raise EvenPatchSize(f"patch side must be odd and positive, got {m}")
    if not state.geometry.contains(e.x, e.y):
        raise OutOfBoundsEvent(e.x, e.y, state.geometry.width, state.geometry.height)
    if insert_missing:
        cell = state.fifo[polarity_channel(e.p), 0, e.y, e.x]
        if cell != e.t:
            state.insert(e)
    _check_causal(state, e.t)

    cfg = state.config
    half = m // 2
    geom = state.geometry
    x_lo, x_hi = e.x - half, e.x + half + 1
    y_lo, y_hi = e.y - half, e.y + half + 1
    sx_lo, sx_hi = max(x_lo, 0), min(x_hi, geom.width)
    sy_lo, sy_hi = max(y_lo, 0), min(y_hi, geom.height)

    data = np.full((2, cfg.k, m, m), log_tau(cfg), dtype=np.float64)
    if sx_lo < sx_hi and sy_lo < sy_hi:
        window = state.fifo[:, :, sy_lo:sy_hi, sx_lo:sx_hi]
        data[:, :, sy_lo - y_lo:sy_hi - y_lo, sx_lo - x_lo:sx_hi - x_lo] = (
            _clamped_values(window, e.t, cfg)
        )
    return TorePatch((e.x, e.y), m, e.t, cfg, data)


def render_series(stream: EventStream, times: Sequence[int], config: ToreConfig,
                  unclamped: bool = False) -> list[ToreVolume]:
    """Volumes at several query times from one pass over the stream.

    Each volume uses exactly the events with e.t <= its query time; the k-th
    result is identical to ingesting that prefix into a fresh state and
    rendering it. Query times must be non-decreasing.
    """
    times = [int(t) for t in times]
    for a, b in zip(times, times[1:]):
        if b < a:
            raise UnsortedQueryTimes(f"query times must be non-decreasing, got {a} then {b}")

    render = render_unclamped if unclamped else render_volume
    state = new_state(stream.geometry, config)
    volumes: list[ToreVolume] = []
    pos = 0
    for t in times:
        cut = pos + int(np.searchsorted(stream.t[pos:], t, side="right"))
        if cut > pos:
            state.ingest(stream.slice(pos, cut))
            pos = cut
        volumes.append(render(state, t))
    return volumes
