"""Exception types raised across the package.

Everything derives from EvtoreError so callers (CLI, HTTP service) can map
library failures to exit codes / status codes in one place.
"""

from __future__ import annotations


class EvtoreError(Exception):
    """Base class for all package-specific errors."""


class OutOfBoundsEvent(EvtoreError):
    """Event coordinates fall outside the sensor geometry."""

    def __init__(self, x: int, y: int, width: int, height: int, index: int | None = None):
        self.x, self.y, self.width, self.height, self.index = x, y, width, height, index
        where = f" at stream index {index}" if index is not None else ""
        super().__init__(f"event ({x},{y}){where} outside {width}x{height} sensor")


class NonMonotonicTimestamp(EvtoreError):
    """Timestamp went backwards under the reject policy."""

    def __init__(self, t: int, previous: int, index: int | None = None):
        self.t, self.previous, self.index = t, previous, index
        where = f" at stream index {index}" if index is not None else ""
        super().__init__(f"timestamp {t}{where} precedes {previous}")


class InvalidPolarity(EvtoreError):
    """Raw polarity value outside the declared convention's alphabet."""


class UnsupportedSignal(EvtoreError):
    """Simulator asked to evaluate an unknown signal kind."""


class AllocationTooLarge(EvtoreError):
    """Requested sensor state exceeds the configured cell budget."""


class QueryBeforeLastEvent(EvtoreError):
    """Render query time precedes the newest ingested event (non-causal)."""

    def __init__(self, t: int, last_event_time: int):
        self.t, self.last_event_time = t, last_event_time
        super().__init__(f"query time {t} precedes last event time {last_event_time}")


class EvenPatchSize(EvtoreError):
    """Patch side length must be odd so the event of interest is centered."""


class UnsortedQueryTimes(EvtoreError):
    """Query times for a series render must be non-decreasing."""


class InvalidBinCount(EvtoreError):
    """Voxel grid needs at least two temporal bins."""


class ParseError(EvtoreError):
    """Malformed text input; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class BadMagic(EvtoreError):
    """File does not start with the expected magic bytes."""


class TruncatedFile(EvtoreError):
    """File ended before the declared payload was complete."""


class CountMismatch(EvtoreError):
    """Declared record count disagrees with the records present."""


class VersionMismatch(EvtoreError):
    """File declares a format version this reader does not support."""
