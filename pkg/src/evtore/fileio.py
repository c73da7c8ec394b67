"""Bit-exact file formats: event streams, tensors, and state checkpoints.

All formats are little-endian fixed-width binary so golden files stay
byte-identical across platforms and implementations. Layouts:

  events  "EVT1": magic, version u16, width u16, height u16,
          convention u8 (0=signed, 1=binary), count u64;
          then count records of (t u64, x u16, y u16, p u8).
  tensors "TOR1": magic, version u16, dtype u8 (0=f64, 1=f32), rank u8,
          rank x u32 dims; then row-major payload.
  state   "STA1": magic, version u16, width u16, height u16, K u16,
          tau u64, tau' u64, has_last u8, last_event_time u64;
          then 2*K*H*W slot u64s in [channel][k][y][x] order, with EMPTY
          stored as u64 max (unreachable as a real microsecond timestamp).

Writers are deterministic: the same input always produces identical bytes.
CSV (lines of ``t,x,y,p``, optional header) is the text interchange bridge.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    CountMismatch,
    InvalidPolarity,
    ParseError,
    TruncatedFile,
    VersionMismatch,
)
from .events import (
    EventStream,
    PolarityConvention,
    SensorGeometry,
    TimestampPolicy,
    normalize_polarity,
    stream_from_arrays,
)
from .state import EMPTY, SensorState, ToreConfig

EVENT_MAGIC = b"EVT1"
TENSOR_MAGIC = b"TOR1"
STATE_MAGIC = b"STA1"
FORMAT_VERSION = 1

_EVENT_HEADER = struct.Struct("<4sHHHBQ")
_RECORD_DTYPE = np.dtype([("t", "<u8"), ("x", "<u2"), ("y", "<u2"), ("p", "u1")])
_TENSOR_HEADER = struct.Struct("<4sHBB")
_STATE_HEADER = struct.Struct("<4sHHHHQQBQ")

_DTYPE_CODES = {"f64": 0, "f32": 1}
_CODE_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}


# ---------------------------------------------------------------------------
# CSV events
# ---------------------------------------------------------------------------

def read_events_csv(
    path: str | Path,
    geometry: SensorGeometry | None = None,
    convention: PolarityConvention = "binary",
    policy: TimestampPolicy = "reject",
) -> EventStream:
    """Parse ``t,x,y,p`` lines into a validated stream.

    A leading non-numeric header line is skipped. When geometry is None it
    is inferred from the maximum coordinates (1x1 for an empty file).
    """
    ts: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = [s.strip() for s in line.split(",")]
            if len(parts) != 4:
                raise ParseError(lineno, f"expected 4 fields, got {len(parts)}")
            try:
                t, x, y, p_raw = (int(s) for s in parts)
            except ValueError:
                def _is_int(s: str) -> bool:
                    try:
                        int(s)
                        return True
                    except ValueError:
                        return False

                if lineno == 1 and not any(_is_int(s) for s in parts):
                    continue  # optional header line: no numeric fields at all
                raise ParseError(lineno, f"non-integer field in {line!r}") from None
            try:
                p = normalize_polarity(p_raw, convention)
            except Exception as exc:
                raise ParseError(lineno, str(exc)) from None
            ts.append(t)
            xs.append(x)
            ys.append(y)
            ps.append(p)

    if geometry is None:
        width = max(xs, default=0) + 1
        height = max(ys, default=0) + 1
        geometry = SensorGeometry(width, height)
    return stream_from_arrays(
        geometry,
        np.asarray(ts, dtype=np.int64),
        np.asarray(xs, dtype=np.int32),
        np.asarray(ys, dtype=np.int32),
        np.asarray(ps, dtype=np.int8),
        policy=policy,
    )


# ---------------------------------------------------------------------------
# Binary events
# ---------------------------------------------------------------------------

def write_events_binary(stream: EventStream, path: str | Path) -> None:
    """Write an EVT1 file; round-trips through read_events_binary exactly."""
    geom = stream.geometry
    if geom.width > 0xFFFF or geom.height > 0xFFFF:
        raise ValueError(f"geometry {geom.width}x{geom.height} exceeds u16 format range")
    n = len(stream)
    header = _EVENT_HEADER.pack(EVENT_MAGIC, FORMAT_VERSION, geom.width, geom.height, 1, n)
    records = np.empty(n, dtype=_RECORD_DTYPE)
    records["t"] = stream.t.astype(np.uint64)
    records["x"] = stream.x.astype(np.uint16)
    records["y"] = stream.y.astype(np.uint16)
    records["p"] = (stream.p > 0).astype(np.uint8)
    Path(path).write_bytes(header + records.tobytes())


def read_events_binary(path: str | Path) -> EventStream:
    """Read an EVT1 file back into a validated stream."""
    blob = Path(path).read_bytes()
    if len(blob) < _EVENT_HEADER.size:
        if blob[:4] != EVENT_MAGIC:
            raise BadMagic(f"{path}: expected {EVENT_MAGIC!r}")
        raise TruncatedFile(f"{path}: header incomplete")
    magic, version, width, height, convention, count = _EVENT_HEADER.unpack_from(blob)
    if magic != EVENT_MAGIC:
        raise BadMagic(f"{path}: expected {EVENT_MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: event format version {version}")
    if convention not in (0, 1):
        raise InvalidPolarity(f"{path}: unknown polarity convention byte {convention}")

    payload = blob[_EVENT_HEADER.size:]
    if len(payload) % _RECORD_DTYPE.itemsize != 0:
        raise TruncatedFile(f"{path}: payload ends mid-record")
    present = len(payload) // _RECORD_DTYPE.itemsize
    if present != count:
        raise CountMismatch(f"{path}: header declares {count} events, found {present}")

    records = np.frombuffer(payload, dtype=_RECORD_DTYPE)
    if convention == 1:
        ok = np.isin(records["p"], (0, 1))
        if not ok.all():
            raise InvalidPolarity(f"binary polarity byte {records['p'][~ok][0]} outside {{0,1}}")
        p = np.where(records["p"] == 1, 1, -1).astype(np.int8)
    else:
        p = records["p"].view(np.int8).astype(np.int8)
        ok = np.isin(p, (-1, 1))
        if not ok.all():
            raise InvalidPolarity(f"signed polarity byte {int(p[~ok][0])} outside {{-1,+1}}")
    return stream_from_arrays(
        SensorGeometry(width, height),
        records["t"].astype(np.int64),
        records["x"].astype(np.int32),
        records["y"].astype(np.int32),
        p,
    )


# ---------------------------------------------------------------------------
# Tensors
# ---------------------------------------------------------------------------

def write_tensor(data, path: str | Path, dtype: str = "f64") -> None:
    """Write a TOR1 tensor file.

    Accepts a raw ndarray or anything exposing a ``.data`` ndarray (volumes,
    patches). f64 round-trips bit-exactly; f32 is round-to-nearest-even.
    """
    arr = np.asarray(getattr(data, "data", data))
    if dtype not in _DTYPE_CODES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPE_CODES)}, got {dtype!r}")
    code = _DTYPE_CODES[dtype]
    arr = np.ascontiguousarray(arr, dtype=_CODE_DTYPES[code])
    header = _TENSOR_HEADER.pack(TENSOR_MAGIC, FORMAT_VERSION, code, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + dims + arr.tobytes())


def read_tensor(path: str | Path) -> np.ndarray:
    """Read a TOR1 tensor file; dims and dtype come from the header."""
    blob = Path(path).read_bytes()
    if len(blob) < _TENSOR_HEADER.size:
        if blob[:4] != TENSOR_MAGIC:
            raise BadMagic(f"{path}: expected {TENSOR_MAGIC!r}")
        raise TruncatedFile(f"{path}: header incomplete")
    magic, version, code, rank = _TENSOR_HEADER.unpack_from(blob)
    if magic != TENSOR_MAGIC:
        raise BadMagic(f"{path}: expected {TENSOR_MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: tensor format version {version}")
    if code not in _CODE_DTYPES:
        raise ParseError(0, f"unknown dtype code {code}")

    dims_end = _TENSOR_HEADER.size + 4 * rank
    if len(blob) < dims_end:
        raise TruncatedFile(f"{path}: dims incomplete")
    dims = struct.unpack_from(f"<{rank}I", blob, _TENSOR_HEADER.size)
    dt = _CODE_DTYPES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * dt.itemsize
    payload = blob[dims_end:]
    if len(payload) < expected:
        raise TruncatedFile(f"{path}: payload is {len(payload)} bytes, need {expected}")
    if len(payload) > expected:
        raise CountMismatch(f"{path}: {len(payload) - expected} trailing bytes")
    return np.frombuffer(payload, dtype=dt).reshape(dims).copy()


# ---------------------------------------------------------------------------
# State checkpoints
# ---------------------------------------------------------------------------

def checkpoint_state(state: SensorState, path: str | Path) -> None:
    """Serialize geometry, config, all slots and last_event_time."""
    geom, cfg = state.geometry, state.config
    if geom.width > 0xFFFF or geom.height > 0xFFFF or cfg.k > 0xFFFF:
        raise ValueError("geometry or K exceeds u16 checkpoint range")
    has_last = state.last_event_time is not None
    header = _STATE_HEADER.pack(
        STATE_MAGIC,
        FORMAT_VERSION,
        geom.width,
        geom.height,
        cfg.k,
        cfg.tau_us,
        cfg.tau_prime_us,
        1 if has_last else 0,
        state.last_event_time if has_last else 0,
    )
    # int64 EMPTY (-1) reinterprets as u64 max, the on-disk sentinel.
    slots = np.ascontiguousarray(state.fifo, dtype="<i8").view("<u8")
    Path(path).write_bytes(header + slots.tobytes())


def restore_state(path: str | Path) -> SensorState:
    """Load a checkpoint; restore-then-render equals rendering the original."""
    blob = Path(path).read_bytes()
    if len(blob) < _STATE_HEADER.size:
        if blob[:4] != STATE_MAGIC:
            raise BadMagic(f"{path}: expected {STATE_MAGIC!r}")
        raise TruncatedFile(f"{path}: header incomplete")
    magic, version, width, height, k, tau, tau_prime, has_last, last = (
        _STATE_HEADER.unpack_from(blob)
    )
    if magic != STATE_MAGIC:
        raise BadMagic(f"{path}: expected {STATE_MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: checkpoint version {version}, expected {FORMAT_VERSION}")

    geometry = SensorGeometry(width, height)
    config = ToreConfig(k=k, tau_us=tau, tau_prime_us=tau_prime)
    expected = 2 * k * height * width * 8
    payload = blob[_STATE_HEADER.size:]
    if len(payload) < expected:
        raise TruncatedFile(f"{path}: slot payload is {len(payload)} bytes, need {expected}")
    if len(payload) > expected:
        raise CountMismatch(f"{path}: {len(payload) - expected} trailing bytes")
    fifo = (
        np.frombuffer(payload, dtype="<u8")
        .view("<i8")
        .reshape(2, k, height, width)
        .astype(np.int64)
    )
    assert EMPTY == -1  # u64 max round-trips to the in-memory sentinel
    return SensorState(geometry, config, fifo, last if has_last else None)
