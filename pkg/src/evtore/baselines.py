"""Windowed reference representations for benchmarking against TORE volumes.

All four are pure functions of (stream, window). Windows are half-open,
(t_end - duration, t_end], so consecutive windows partition a stream with
no double counting. Unlike TORE volumes none of these are invariant to a
time shift that moves events relative to the window edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidBinCount
from .events import EventStream, SensorGeometry, polarity_channel


@dataclass(frozen=True)
class WindowSpec:
    """Temporal window (t_end - duration, t_end]."""

    t_end: int
    duration: int

    def __post_init__(self) -> None:
        if self.duration <= 0:
            raise ValueError(f"window duration must be > 0, got {self.duration}")
        if self.t_end < self.duration:
            raise ValueError(
                f"window start would be negative: t_end={self.t_end}, duration={self.duration}"
            )

    @property
    def t_start(self) -> int:
        return self.t_end - self.duration


def _in_window(stream: EventStream, window: WindowSpec) -> np.ndarray:
    return (stream.t > window.t_start) & (stream.t <= window.t_end)


def event_frame(stream: EventStream, geometry: SensorGeometry,
                window: WindowSpec) -> np.ndarray:
    """[H, W] image of summed polarities over the window."""
    out = np.zeros((geometry.height, geometry.width), dtype=np.float64)
    sel = _in_window(stream, window)
    np.add.at(out, (stream.y[sel], stream.x[sel]), stream.p[sel].astype(np.float64))
    return out


def event_count(stream: EventStream, geometry: SensorGeometry,
                window: WindowSpec) -> np.ndarray:
    """[2, H, W] per-polarity event counts over the window."""
    out = np.zeros((2, geometry.height, geometry.width), dtype=np.float64)
    sel = _in_window(stream, window)
    chan = polarity_channel(stream.p[sel].astype(np.int64))
    np.add.at(out, (chan, stream.y[sel], stream.x[sel]), 1.0)
    return out


class SaeResult(NamedTuple):
    """Most-recent-timestamp image plus its validity mask.

    timestamps uses the sentinel 0 where no event ever fired; valid is the
    source of truth for distinguishing the sentinel from a real t=0 event.
    """

    timestamps: np.ndarray  # [2, H, W] int64
    valid: np.ndarray       # [2, H, W] bool


def sae(stream: EventStream, geometry: SensorGeometry, t_end: int,
        sentinel: int = 0) -> SaeResult:
    """Surface of active events: latest timestamp <= t_end per pixel/polarity."""
    # Accumulate with max against -1 (below any valid timestamp); the latest
    # event per cell is the largest timestamp, independent of write order.
    ts = np.full((2, geometry.height, geometry.width), np.int64(-1), dtype=np.int64)
    sel = stream.t <= t_end
    chan = polarity_channel(stream.p[sel].astype(np.int64))
    np.maximum.at(ts, (chan, stream.y[sel], stream.x[sel]), stream.t[sel])
    valid = ts >= 0
    ts[~valid] = np.int64(sentinel)
    return SaeResult(ts, valid)


def voxel_grid(stream: EventStream, geometry: SensorGeometry,
               window: WindowSpec, bins: int) -> np.ndarray:
    """[B, H, W] polarity mass spread over B temporal bins.

    Each in-window event lands at normalized position
    t* = (t - window start) / duration * (B - 1) and contributes
    p * max(0, 1 - |b - t*|) to the two nearest bins, so its total mass is
    exactly p.
    """
    if bins < 2:
        raise InvalidBinCount(f"voxel grid needs >= 2 bins, got {bins}")
    out = np.zeros((bins, geometry.height, geometry.width), dtype=np.float64)
    sel = _in_window(stream, window)
    if not sel.any():
        return out
    t = stream.t[sel].astype(np.float64)
    xs = stream.x[sel]
    ys = stream.y[sel]
    p = stream.p[sel].astype(np.float64)

    t_star = (t - float(window.t_start)) / float(window.duration) * (bins - 1)
    b_lo = np.floor(t_star).astype(np.int64)
    b_lo = np.minimum(b_lo, bins - 1)
    b_hi = np.minimum(b_lo + 1, bins - 1)
    w_hi = t_star - b_lo
    w_lo = 1.0 - w_hi
    np.add.at(out, (b_lo, ys, xs), p * w_lo)
    np.add.at(out, (b_hi, ys, xs), p * w_hi)
    return out
