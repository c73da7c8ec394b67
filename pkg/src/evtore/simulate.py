"""Synthetic event generation from analytic log-intensity signals.

Per pixel, events fire at the earliest times where the signal departs from
the per-pixel reference level by at least the contrast threshold; polarity
is the sign of the departure and the reference then resets to the signal
value at the (quantized) event tick. Crossing times are solved in closed
form per signal kind, never with a generic root finder, so streams are
oracle-grade exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedSignal
from .events import EventStream, SensorGeometry, validate_stream


@dataclass(frozen=True)
class LinearRamp:
    """J(t) = offset + slope * t, slope in log-intensity units per microsecond.

    slope may be a scalar or an (H, W) array for per-pixel ramps. A zero
    slope never crosses the threshold (constant signal, empty stream).
    """

    slope: float | np.ndarray
    offset: float = 0.0


@dataclass(frozen=True)
class Sinusoid:
    """J(t) = offset + amplitude * sin(2*pi*(t - t_start)/period_us + phase).

    amplitude/period_us/phase may be scalars or (H, W) arrays.
    """

    amplitude: float | np.ndarray
    period_us: float | np.ndarray
    phase: float | np.ndarray = 0.0
    offset: float = 0.0


@dataclass(frozen=True)
class StepTrain:
    """Piecewise-constant signal: J jumps by heights[i] at times_us[i].

    Steps are shared across pixels. Times must be strictly increasing.
    """

    times_us: tuple[int, ...]
    heights: tuple[float, ...]
    offset: float = 0.0

    def __post_init__(self) -> None:
        if len(self.times_us) != len(self.heights):
            raise ValueError("times_us and heights must have equal length")
        if any(b <= a for a, b in zip(self.times_us, self.times_us[1:])):
            raise ValueError("step times must be strictly increasing")


IntensitySignal = LinearRamp | Sinusoid | StepTrain


@dataclass(frozen=True)
class SimConfig:
    """Simulation interval, contrast threshold and timestamp grid.

    noise_events > 0 adds that many uniform random events (robustness tests
    only; they are not part of the threshold-crossing model).
    """

    geometry: SensorGeometry
    epsilon: float
    t_start: int = 0
    t_end: int = 1_000_000
    quantization_us: int = 1
    noise_events: int = 0
    noise_seed: int = 0

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if self.t_start >= self.t_end:
            raise ValueError(f"need t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if self.quantization_us < 1:
            raise ValueError("quantization must be >= 1 us per tick")
        if self.noise_events < 0:
            raise ValueError("noise_events must be >= 0")


def _ceil_to_grid(t: float, q: int) -> int:
    return int(math.ceil(t / q)) * q


def _pixel_param(value: float | np.ndarray, x: int, y: int) -> float:
    if isinstance(value, np.ndarray):
        return float(value[y, x])
    return float(value)


def _ramp_pixel(slope: float, cfg: SimConfig) -> list[tuple[int, int]]:
    """Event (tick, polarity) list for one linear-ramp pixel."""
    if slope == 0.0:
        return []
    period = cfg.epsilon / abs(slope)
    pol = 1 if slope > 0 else -1
    out: list[tuple[int, int]] = []
    t_ref = cfg.t_start  # integer tick where the reference was last set
    while True:
        t_c = t_ref + period  # J is linear: next crossing is one period after reset
        if t_c > cfg.t_end:
            break
        t_q = _ceil_to_grid(t_c, cfg.quantization_us)
        if t_q <= t_ref:  # period below one tick (or float-absorbed): advance a tick
            t_q = _ceil_to_grid(t_ref + 1, cfg.quantization_us)
        if t_q > cfg.t_end:
            break
        out.append((t_q, pol))
        t_ref = t_q
    return out


def _sinusoid_pixel(amplitude: float, period: float, phase: float,
                    offset: float, cfg: SimConfig) -> list[tuple[int, int]]:
    """Event list for one sinusoid pixel, walking monotone half-period branches.

    sin is monotone between consecutive extrema th = pi/2 + k*pi; on each
    branch the only reachable threshold is ref+eps (rising) or ref-eps
    (falling), solved with one arcsin.
    """
    if amplitude == 0.0 or period <= 0.0:
        return []
    if amplitude < 0.0:
        # offset + A sin(th) == offset + |A| sin(th + pi)
        amplitude, phase = -amplitude, phase + math.pi
    omega = 2.0 * math.pi / period

    def theta(t: float) -> float:
        return omega * (t - cfg.t_start) + phase

    def time_of(th: float) -> float:
        return cfg.t_start + (th - phase) / omega

    def j(t: float) -> float:
        return offset + amplitude * math.sin(theta(t))

    out: list[tuple[int, int]] = []
    ref = j(float(cfg.t_start))
    cursor = float(cfg.t_start)
    span = cfg.t_end - cfg.t_start
    max_iter = int(2.0 * span / period) + span // cfg.quantization_us + 16
    for _ in range(max_iter):
        if cursor >= cfg.t_end:
            break
        th = theta(cursor)
        k = math.floor((th - math.pi / 2.0) / math.pi)  # branch start extremum index
        th_lo = math.pi / 2.0 + k * math.pi
        th_hi = th_lo + math.pi
        rising = (k % 2) != 0  # sin(th_lo) = (-1)^k: odd k starts at -1 and rises

        if rising:
            v = (ref + cfg.epsilon - offset) / amplitude
            pol = +1
            th_sol = th_lo + (math.asin(min(v, 1.0)) + math.pi / 2.0) if v <= 1.0 else None
        else:
            v = (ref - cfg.epsilon - offset) / amplitude
            pol = -1
            th_sol = th_lo + (math.pi / 2.0 - math.asin(max(v, -1.0))) if v >= -1.0 else None

        if th_sol is None or th_sol < th:
            # Threshold numerically behind the cursor means it is unreachable
            # on the remainder of this branch; move to the next extremum.
            if th_sol is not None and th_sol >= th - 1e-9:
                th_sol = th  # crossing essentially at the cursor
            else:
                # Nudge past the extremum so branch selection cannot stall.
                cursor = time_of(th_hi) + period * 1e-12
                continue

        t_c = time_of(th_sol)
        if t_c > cfg.t_end:
            break
        t_c = max(t_c, math.nextafter(cursor, math.inf))
        t_q = _ceil_to_grid(t_c, cfg.quantization_us)
        if t_q <= int(cursor):
            t_q = _ceil_to_grid(int(cursor) + 1, cfg.quantization_us)
        if t_q > cfg.t_end:
            break
        out.append((t_q, pol))
        ref = j(float(t_q))
        cursor = float(t_q)
    return out


def _step_pixel(signal: StepTrain, cfg: SimConfig) -> list[tuple[int, int]]:
    """Event list for one step-train pixel: at most one event per step."""

    def j_at(t: int) -> float:
        s = signal.offset
        for st, h in zip(signal.times_us, signal.heights):
            if st <= t:
                s += h
        return s

    out: list[tuple[int, int]] = []
    ref = j_at(cfg.t_start)
    cursor = cfg.t_start
    level = ref
    for st, h in zip(signal.times_us, signal.heights):
        if st <= cursor:
            continue
        if st > cfg.t_end:
            break
        level = j_at(st)
        if abs(level - ref) >= cfg.epsilon:
            t_q = _ceil_to_grid(float(st), cfg.quantization_us)
            if t_q > cfg.t_end:
                break
            pol = 1 if level > ref else -1
            out.append((t_q, pol))
            ref = j_at(t_q)  # absorbs any further steps inside the same tick
            cursor = t_q
    return out


def _noise_events(cfg: SimConfig) -> list[tuple[int, int, int, int]]:
    rng = np.random.default_rng(cfg.noise_seed)
    q = cfg.quantization_us
    lo = cfg.t_start // q + 1
    hi = cfg.t_end // q
    if hi < lo:
        return []
    ticks = rng.integers(lo, hi + 1, size=cfg.noise_events) * q
    xs = rng.integers(0, cfg.geometry.width, size=cfg.noise_events)
    ys = rng.integers(0, cfg.geometry.height, size=cfg.noise_events)
    ps = rng.choice(np.array([-1, 1], dtype=np.int8), size=cfg.noise_events)
    return [(int(t), int(x), int(y), int(p)) for t, x, y, p in zip(ticks, xs, ys, ps)]


def simulate(signal: IntensitySignal, config: SimConfig) -> EventStream:
    """Run the threshold-crossing model over the whole sensor.

    Pixels are simulated independently and merged into one stream sorted by
    (t, y, x, p). Raises UnsupportedSignal for unknown signal kinds.
    """
    geom = config.geometry
    ts: list[int] = []
    xs: list[int] = []
    ys: list[int] = []
    ps: list[int] = []

    for y in range(geom.height):
        for x in range(geom.width):
            if isinstance(signal, LinearRamp):
                pix = _ramp_pixel(_pixel_param(signal.slope, x, y), config)
            elif isinstance(signal, Sinusoid):
                pix = _sinusoid_pixel(
                    _pixel_param(signal.amplitude, x, y),
                    _pixel_param(signal.period_us, x, y),
                    _pixel_param(signal.phase, x, y),
                    signal.offset,
                    config,
                )
            elif isinstance(signal, StepTrain):
                pix = _step_pixel(signal, config)
            else:
                raise UnsupportedSignal(f"unknown signal kind {type(signal).__name__}")
            for t, p in pix:
                ts.append(t)
                xs.append(x)
                ys.append(y)
                ps.append(p)

    for t, x, y, p in _noise_events(config) if config.noise_events else []:
        ts.append(t)
        xs.append(x)
        ys.append(y)
        ps.append(p)

    t_arr = np.asarray(ts, dtype=np.int64)
    x_arr = np.asarray(xs, dtype=np.int32)
    y_arr = np.asarray(ys, dtype=np.int32)
    p_arr = np.asarray(ps, dtype=np.int8)
    order = np.lexsort((p_arr, x_arr, y_arr, t_arr))
    stream = EventStream(geom, t_arr[order], x_arr[order], y_arr[order], p_arr[order])
    return validate_stream(stream, geom, policy="reject")


def signal_from_kind(kind: str, **params) -> IntensitySignal:
    """Build a signal from a CLI/service kind string.

    'constant' maps to a zero-slope ramp at the given offset.
    """
    if kind in ("ramp", "linear_ramp"):
        return LinearRamp(slope=params.get("slope", 0.0), offset=params.get("offset", 0.0))
    if kind == "constant":
        return LinearRamp(slope=0.0, offset=params.get("offset", 0.0))
    if kind == "sinusoid":
        return Sinusoid(
            amplitude=params.get("amplitude", 1.0),
            period_us=params.get("period_us", 100_000.0),
            phase=params.get("phase", 0.0),
            offset=params.get("offset", 0.0),
        )
    if kind in ("steps", "step_train"):
        return StepTrain(
            times_us=tuple(params.get("times_us", ())),
            heights=tuple(params.get("heights", ())),
            offset=params.get("offset", 0.0),
        )
    raise UnsupportedSignal(f"unknown signal kind {kind!r}")


__all__ = [
    "IntensitySignal",
    "LinearRamp",
    "Sinusoid",
    "StepTrain",
    "SimConfig",
    "simulate",
    "signal_from_kind",
]
