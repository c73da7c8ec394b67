"""Core event and geometry types plus stream-level validation.

Timestamps are 64-bit integers in microseconds throughout; conversion to
floating point happens only inside the log transform at render time, so
time differences stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Literal, NamedTuple, Sequence

import numpy as np

from .errors import InvalidPolarity, NonMonotonicTimestamp, OutOfBoundsEvent

TimestampPolicy = Literal["reject", "clamp"]
PolarityConvention = Literal["signed", "binary"]

# Polarity-to-channel mapping is part of the tensor contract: +1 -> 0, -1 -> 1.
POSITIVE_CHANNEL = 0
NEGATIVE_CHANNEL = 1


class Event(NamedTuple):
    """A single DVS spike: pixel coordinates, microsecond timestamp, polarity.

    Polarity is exactly +1 or -1 after normalization.
    """

    x: int
    y: int
    t: int
    p: int


@dataclass(frozen=True)
class SensorGeometry:
    """Sensor pixel grid, width x height."""

    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"geometry must be positive, got {self.width}x{self.height}")

    def contains(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height


def normalize_polarity(raw: int, convention: PolarityConvention) -> int:
    """Map a raw file polarity onto the internal {-1, +1} alphabet.

    binary: 0 -> -1, 1 -> +1.  signed: -1 and +1 pass through.
    """
    if convention == "binary":
        if raw == 0:
            return -1
        if raw == 1:
            return +1
        raise InvalidPolarity(f"binary polarity must be 0 or 1, got {raw}")
    if convention == "signed":
        if raw in (-1, +1):
            return raw
        raise InvalidPolarity(f"signed polarity must be -1 or +1, got {raw}")
    raise InvalidPolarity(f"unknown polarity convention {convention!r}")


def polarity_channel(p: int | np.ndarray) -> int | np.ndarray:
    """Channel index for a polarity value (+1 -> 0, -1 -> 1)."""
    if isinstance(p, np.ndarray):
        return np.where(p > 0, POSITIVE_CHANNEL, NEGATIVE_CHANNEL)
    return POSITIVE_CHANNEL if p > 0 else NEGATIVE_CHANNEL


@dataclass(frozen=True)
class EventStream:
    """A validated, time-ordered event sequence bound to a sensor geometry.

    Stored columnar (one array per field) so bulk operations stay vectorized;
    iteration and indexing yield Event tuples. Arrays are read-only.
    """

    geometry: SensorGeometry
    t: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        for arr in (self.t, self.x, self.y, self.p):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def slice(self, start: int, stop: int) -> "EventStream":
        """Sub-stream over [start, stop); shares the parent geometry."""
        return EventStream(
            self.geometry,
            self.t[start:stop].copy(),
            self.x[start:stop].copy(),
            self.y[start:stop].copy(),
            self.p[start:stop].copy(),
        )


def _as_columns(events: Iterable[Event | tuple]) -> tuple[np.ndarray, ...]:
    xs, ys, ts, ps = [], [], [], []
    for e in events:
        x, y, t, p = e
        xs.append(x)
        ys.append(y)
        ts.append(t)
        ps.append(p)
    return (
        np.asarray(ts, dtype=np.int64),
        np.asarray(xs, dtype=np.int32),
        np.asarray(ys, dtype=np.int32),
        np.asarray(ps, dtype=np.int8),
    )


def validate_stream(
    events: Sequence[Event | tuple] | EventStream,
    geometry: SensorGeometry,
    policy: TimestampPolicy = "reject",
) -> EventStream:
    """Check bounds, polarity and timestamp order; return a validated stream.

    Under ``reject`` (the default) any timestamp regression is fatal; under
    ``clamp`` a regressing timestamp is raised to its predecessor's value.
    Validating an already-valid stream returns an element-wise identical one.
    """
    if isinstance(events, EventStream):
        t = events.t.astype(np.int64, copy=True)
        x = events.x.astype(np.int32, copy=True)
        y = events.y.astype(np.int32, copy=True)
        p = events.p.astype(np.int8, copy=True)
    else:
        t, x, y, p = _as_columns(events)

    if len(t) == 0:
        return EventStream(geometry, t, x, y, p)

    if t.min() < 0:
        bad = int(np.argmax(t < 0))
        raise ValueError(f"negative timestamp {int(t[bad])} at stream index {bad}")

    oob = (x < 0) | (x >= geometry.width) | (y < 0) | (y >= geometry.height)
    if oob.any():
        i = int(np.argmax(oob))
        raise OutOfBoundsEvent(int(x[i]), int(y[i]), geometry.width, geometry.height, index=i)

    bad_p = (p != 1) & (p != -1)
    if bad_p.any():
        i = int(np.argmax(bad_p))
        raise InvalidPolarity(f"polarity {int(p[i])} at stream index {i} is not +1/-1")

    if policy == "reject":
        regress = np.flatnonzero(np.diff(t) < 0)
        if regress.size:
            i = int(regress[0]) + 1
            raise NonMonotonicTimestamp(int(t[i]), int(t[i - 1]), index=i)
    elif policy == "clamp":
        t = np.maximum.accumulate(t)
    else:
        raise ValueError(f"unknown timestamp policy {policy!r}")

    return EventStream(geometry, t, x, y, p)


def stream_from_arrays(
    geometry: SensorGeometry,
    t: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    p: np.ndarray,
    policy: TimestampPolicy = "reject",
) -> EventStream:
    """Validate columnar arrays directly (bulk path for file readers)."""
    stream = EventStream(
        geometry,
        np.asarray(t, dtype=np.int64).copy(),
        np.asarray(x, dtype=np.int32).copy(),
        np.asarray(y, dtype=np.int32).copy(),
        np.asarray(p, dtype=np.int8).copy(),
    )
    return validate_stream(stream, geometry, policy)
