"""Live sensor state: per-pixel, per-polarity FIFO queues of recent timestamps.

The state is a dense int64 array indexed [channel][k][y][x]. Slot k=0 holds
the most recent timestamp of its cell (newest-first); empty slots carry the
EMPTY sentinel and always trail the filled ones. Updates are asynchronous
per event; age-based eviction never happens here, the max-time clamp is a
render-time concern.

Writes require exclusive access (single writer); any number of renders may
read between writes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import AllocationTooLarge, NonMonotonicTimestamp, OutOfBoundsEvent
from .events import (
    Event,
    EventStream,
    SensorGeometry,
    TimestampPolicy,
    polarity_channel,
)

# In-memory sentinel for a never-filled slot. Timestamps are >= 0, so -1 is
# unreachable; at render time it behaves exactly like negative infinity
# (the value saturates to the max-time clamp).
EMPTY = np.int64(-1)

# Default ceiling on 2*K*H*W cells; guards against typo-sized geometries.
DEFAULT_CELL_BUDGET = 1 << 28


@dataclass(frozen=True)
class ToreConfig:
    """Queue depth and the two render-time clamps.

    k: timestamps retained per pixel per polarity.
    tau_us: max time window; older differences saturate to log(tau).
    tau_prime_us: min time sensitivity; fresher differences floor at log(tau').
    """

    k: int = 4
    tau_us: int = 5_000_000
    tau_prime_us: int = 150

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"queue depth must be >= 1, got {self.k}")
        if self.tau_us <= 0:
            raise ValueError(f"tau_us must be > 0, got {self.tau_us}")
        if self.tau_prime_us < 1:
            raise ValueError(f"tau_prime_us must be >= 1, got {self.tau_prime_us}")
        if self.tau_prime_us >= self.tau_us:
            raise ValueError(
                f"need tau_prime < tau, got {self.tau_prime_us} >= {self.tau_us}"
            )


@dataclass(frozen=True)
class IngestReport:
    """Per-ingestion statistics (wall-clock measured)."""

    events: int
    seconds: float

    @property
    def events_per_sec(self) -> float:
        if self.seconds <= 0.0:
            return float("inf") if self.events else 0.0
        return self.events / self.seconds


class SensorState:
    """Mutable FIFO state for one sensor. Create via new_state()."""

    def __init__(self, geometry: SensorGeometry, config: ToreConfig, fifo: np.ndarray,
                 last_event_time: int | None = None):
        self.geometry = geometry
        self.config = config
        # Contiguity matters: batch ingest scatters through a reshaped view.
        self.fifo = np.ascontiguousarray(fifo, dtype=np.int64)  # [2, K, H, W]
        self.last_event_time = last_event_time

    @property
    def slot_count(self) -> int:
        return self.fifo.size

    def _check_bounds(self, x: int, y: int, index: int | None = None) -> None:
        if not self.geometry.contains(x, y):
            raise OutOfBoundsEvent(x, y, self.geometry.width, self.geometry.height, index)

    def _apply_policy(self, t: int, policy: TimestampPolicy, index: int | None = None) -> int:
        if self.last_event_time is not None and t < self.last_event_time:
            if policy == "reject":
                raise NonMonotonicTimestamp(t, self.last_event_time, index)
            t = self.last_event_time
        return t

    def insert(self, e: Event, policy: TimestampPolicy = "reject") -> None:
        """Push one event: its cell shifts one slot toward k=K-1, slot 0 = e.t.

        The oldest timestamp falls off the end; no other cell changes.
        """
        self._check_bounds(e.x, e.y)
        t = self._apply_policy(e.t, policy)
        cell = self.fifo[polarity_channel(e.p), :, e.y, e.x]
        cell[1:] = cell[:-1]
        cell[0] = t
        self.last_event_time = t

    def ingest(self, stream: EventStream, policy: TimestampPolicy = "reject") -> IngestReport:
        """Fold a validated stream into the state (vectorized batch path).

        Equivalent slot-for-slot to inserting every event in order; cells are
        updated by grouping events per cell and applying the net shift once.
        Returns wall-clock ingestion statistics.
        """
        t0 = time.perf_counter()
        n = len(stream)
        if n == 0:
            return IngestReport(0, time.perf_counter() - t0)

        geom = self.geometry
        if stream.geometry != geom:
            oob = (
                (stream.x < 0) | (stream.x >= geom.width)
                | (stream.y < 0) | (stream.y >= geom.height)
            )
            if oob.any():
                i = int(np.argmax(oob))
                raise OutOfBoundsEvent(int(stream.x[i]), int(stream.y[i]),
                                       geom.width, geom.height, index=i)

        t = stream.t
        if self.last_event_time is not None and int(t[0]) < self.last_event_time:
            if policy == "reject":
                i = int(np.argmax(t < self.last_event_time))
                raise NonMonotonicTimestamp(int(t[i]), self.last_event_time, index=i)
            t = np.maximum(t, np.int64(self.last_event_time))

        k_depth = self.config.k
        h, w = geom.height, geom.width
        chan = polarity_channel(stream.p.astype(np.int64))
        cid = (chan * h + stream.y.astype(np.int64)) * w + stream.x.astype(np.int64)

        order = np.argsort(cid, kind="stable")  # keeps arrival order inside each cell
        cid_s = cid[order]
        t_s = t[order]
        bounds = np.flatnonzero(np.diff(cid_s)) + 1
        starts = np.concatenate(([0], bounds))
        ends = np.concatenate((bounds, [n]))
        counts = ends - starts
        cells = cid_s[starts]

        fifo3 = self.fifo.reshape(2, k_depth, h * w)
        c_idx = cells // (h * w)
        hw_idx = cells % (h * w)
        old = fifo3[c_idx[:, None], np.arange(k_depth)[None, :], hw_idx[:, None]]

        shift = np.minimum(counts, k_depth)
        ks = np.arange(k_depth)[None, :]
        # Slot k takes the (k+1)-th newest incoming timestamp while k < shift,
        # otherwise the old slot k - shift.
        newest_pos = np.clip(ends[:, None] - 1 - ks, 0, n - 1)
        incoming = t_s[newest_pos]
        km = np.clip(ks - shift[:, None], 0, k_depth - 1)
        shifted_old = np.take_along_axis(old, km, axis=1)
        updated = np.where(ks < shift[:, None], incoming, shifted_old)

        fifo3[c_idx[:, None], np.arange(k_depth)[None, :], hw_idx[:, None]] = updated
        self.last_event_time = int(t[-1])
        return IngestReport(n, time.perf_counter() - t0)

    def snapshot_cell(self, x: int, y: int, p: int) -> list[int | None]:
        """The K slots of one cell, newest-first; EMPTY reported as None."""
        self._check_bounds(x, y)
        cell = self.fifo[polarity_channel(p), :, y, x]
        return [None if v == EMPTY else int(v) for v in cell]

    def copy(self) -> "SensorState":
        return SensorState(self.geometry, self.config, self.fifo.copy(), self.last_event_time)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SensorState):
            return NotImplemented
        return (
            self.geometry == other.geometry
            and self.config == other.config
            and self.last_event_time == other.last_event_time
            and np.array_equal(self.fifo, other.fifo)
        )


def new_state(geometry: SensorGeometry, config: ToreConfig,
              cell_budget: int = DEFAULT_CELL_BUDGET) -> SensorState:
    """Allocate an all-EMPTY state of 2*K*H*W slots."""
    slots = 2 * config.k * geometry.height * geometry.width
    if slots > cell_budget:
        raise AllocationTooLarge(
            f"state needs {slots} slots, budget is {cell_budget}"
        )
    fifo = np.full((2, config.k, geometry.height, geometry.width), EMPTY, dtype=np.int64)
    return SensorState(geometry, config, fifo)
