"""Independent oracle and randomized self-checks.

The oracle deliberately avoids the incremental FIFO state machine: for each
cell it collects the full event history, sorts it, keeps the K most recent
events at or before the query time, and applies the clamped log transform
directly. Volume renders are checked for bitwise equality against it.

cmd_verify drives run_all_checks; the test suite reuses the oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import WindowSpec, event_frame
from .events import EventStream, SensorGeometry, polarity_channel, validate_stream
from .render import ToreVolume, log_tau, render_volume
from .state import ToreConfig, new_state


def reference_volume(stream: EventStream, config: ToreConfig, t: int,
                     geometry: SensorGeometry | None = None) -> np.ndarray:
    """Brute-force [2, K, H, W] volume straight from the event history."""
    geom = geometry or stream.geometry
    k_depth = config.k
    histories: dict[tuple[int, int, int], list[int]] = {}
    for i in range(len(stream)):
        key = (int(polarity_channel(int(stream.p[i]))), int(stream.y[i]), int(stream.x[i]))
        histories.setdefault(key, []).append(int(stream.t[i]))

    diffs = np.zeros((2, k_depth, geom.height, geom.width), dtype=np.float64)
    filled = np.zeros((2, k_depth, geom.height, geom.width), dtype=bool)
    for (c, y, x), times in histories.items():
        recent = [v for v in sorted(times) if v <= t][-k_depth:]
        recent.reverse()  # newest first
        for k, slot_t in enumerate(recent):
            diffs[c, k, y, x] = float(t - slot_t + 1)
            filled[c, k, y, x] = True

    out = np.full(diffs.shape, log_tau(config), dtype=np.float64)
    vals = np.log(diffs[filled])
    np.minimum(vals, float(np.log(np.float64(config.tau_us))), out=vals)
    np.maximum(vals, float(np.log(np.float64(config.tau_prime_us))), out=vals)
    out[filled] = vals
    return out


def random_stream(rng: np.random.Generator, geometry: SensorGeometry, n: int,
                  t_max: int = 1_000_000, t_min: int = 0) -> EventStream:
    """Uniform random validated stream with non-decreasing timestamps."""
    t = np.sort(rng.integers(t_min, t_max + 1, size=n)).astype(np.int64)
    x = rng.integers(0, geometry.width, size=n).astype(np.int32)
    y = rng.integers(0, geometry.height, size=n).astype(np.int32)
    p = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
    return EventStream(geometry, t, x, y, p)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    counterexample: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}{extra}"


def _first_mismatch(got: np.ndarray, want: np.ndarray) -> dict:
    idx = np.argwhere(got != want)
    if idx.size == 0:
        return {}
    c, k, y, x = (int(v) for v in idx[0])
    return {
        "cell": {"channel": c, "k": k, "y": y, "x": x},
        "got": float(got[c, k, y, x]),
        "expected": float(want[c, k, y, x]),
    }


def check_incremental_vs_batch(seed: int, cases: int = 5, n_events: int = 5_000,
                               geometry: SensorGeometry = SensorGeometry(32, 32)) -> CheckResult:
    """ingest + render must be bitwise equal to the sort-based oracle."""
    rng = np.random.default_rng(seed)
    for case in range(cases):
        k = int(rng.choice([1, 4, 7]))
        config = ToreConfig(k=k)
        stream = random_stream(rng, geometry, n_events)
        t_query = int(stream.t[-1]) + int(rng.integers(0, 10_000))
        state = new_state(geometry, config)
        state.ingest(stream)
        got = render_volume(state, t_query).data
        want = reference_volume(stream, config, t_query)
        if not np.array_equal(got, want):
            ce = _first_mismatch(got, want)
            ce.update({"case": case, "k": k, "query_time": t_query, "seed": seed})
            return CheckResult("incremental-vs-batch", False,
                               f"mismatch in case {case}", ce)
    return CheckResult("incremental-vs-batch", True, f"{cases} cases, K sampled from {{1,4,7}}")


def check_shift_invariance(seed: int, cases: int = 5, n_events: int = 2_000,
                           geometry: SensorGeometry = SensorGeometry(32, 32)) -> CheckResult:
    """Shifting all timestamps and the query time must not change the volume."""
    rng = np.random.default_rng(seed)
    for case in range(cases):
        config = ToreConfig(k=int(rng.choice([1, 4, 7])))
        stream = random_stream(rng, geometry, n_events)
        delta = int(rng.integers(1, 10**9))
        t_query = int(stream.t[-1]) + int(rng.integers(0, 5_000))

        state = new_state(geometry, config)
        state.ingest(stream)
        base = render_volume(state, t_query).data

        shifted = EventStream(geometry, stream.t + delta, stream.x, stream.y, stream.p)
        state2 = new_state(geometry, config)
        state2.ingest(shifted)
        moved = render_volume(state2, t_query + delta).data
        if not np.array_equal(base, moved):
            ce = _first_mismatch(moved, base)
            ce.update({"case": case, "delta": delta, "seed": seed})
            return CheckResult("time-shift-invariance", False,
                               f"case {case} differs under shift {delta}", ce)
    return CheckResult("time-shift-invariance", True, f"{cases} shifts up to 1e9 us")


def check_bounds_and_ordering(seed: int, cases: int = 5, n_events: int = 2_000,
                              geometry: SensorGeometry = SensorGeometry(32, 32)) -> CheckResult:
    """Every value in [ln tau', ln tau]; non-decreasing in k and in t."""
    rng = np.random.default_rng(seed)
    for case in range(cases):
        config = ToreConfig(k=int(rng.choice([2, 4, 7])))
        lo, hi = (float(np.log(np.float64(config.tau_prime_us))),
                  float(np.log(np.float64(config.tau_us))))
        stream = random_stream(rng, geometry, n_events)
        state = new_state(geometry, config)
        state.ingest(stream)
        t_query = int(stream.t[-1]) + int(rng.integers(0, 5_000))
        vol = render_volume(state, t_query).data

        if vol.min() < lo or vol.max() > hi:
            return CheckResult("bounds-and-ordering", False,
                               f"case {case}: value outside [{lo}, {hi}]",
                               {"min": float(vol.min()), "max": float(vol.max())})
        if (np.diff(vol, axis=1) < 0).any():
            c, k, y, x = (int(v) for v in np.argwhere(np.diff(vol, axis=1) < 0)[0])
            return CheckResult("bounds-and-ordering", False,
                               f"case {case}: k-ordering violated",
                               {"cell": {"channel": c, "k": k, "y": y, "x": x}})
        later = render_volume(state, t_query + int(rng.integers(1, 100_000))).data
        if (later < vol).any():
            idx = np.argwhere(later < vol)[0]
            c, k, y, x = (int(v) for v in idx)
            return CheckResult("bounds-and-ordering", False,
                               f"case {case}: t-monotonicity violated",
                               {"cell": {"channel": c, "k": k, "y": y, "x": x}})
    return CheckResult("bounds-and-ordering", True, f"{cases} cases, exhaustive cells")


def check_fifo_suffix(seed: int, sequences: int = 200, k: int = 4) -> CheckResult:
    """A cell equals the last min(n, K) inserted timestamps, newest first."""
    from .events import Event

    rng = np.random.default_rng(seed)
    geometry = SensorGeometry(2, 2)
    for case in range(sequences):
        config = ToreConfig(k=k)
        state = new_state(geometry, config)
        n = int(rng.integers(0, 3 * k + 2))
        times = np.sort(rng.integers(0, 10_000, size=n)).astype(np.int64)
        for t in times:
            state.insert(Event(1, 0, int(t), +1))
        expected = [int(v) for v in times[-k:][::-1]] + [None] * max(0, k - n)
        got = state.snapshot_cell(1, 0, +1)
        if got != expected[:k]:
            return CheckResult("fifo-suffix", False, f"case {case}",
                               {"inserted": [int(v) for v in times],
                                "cell": got, "expected": expected[:k]})
    return CheckResult("fifo-suffix", True, f"{sequences} random insert sequences")


def check_window_contrast(seed: int, cases: int = 5,
                          geometry: SensorGeometry = SensorGeometry(16, 16)) -> CheckResult:
    """Windowed frames must differ for some shift (they are not invariant)."""
    rng = np.random.default_rng(seed)
    differed = 0
    for _ in range(cases):
        stream = random_stream(rng, geometry, 500, t_max=100_000)
        window = WindowSpec(t_end=80_000, duration=40_000)
        base = event_frame(stream, geometry, window)
        delta = int(rng.integers(1_000, 30_000))
        shifted_stream = validate_stream(
            EventStream(geometry, stream.t + delta, stream.x, stream.y, stream.p),
            geometry,
        )
        moved = event_frame(shifted_stream, geometry, window)  # same window edge
        if not np.array_equal(base, moved):
            differed += 1
    if differed == 0:
        return CheckResult("window-contrast", False,
                           "no case changed under shift; windowing looks shift-invariant")
    return CheckResult("window-contrast", True, f"{differed}/{cases} cases changed, as expected")


def run_all_checks(seed: int = 0) -> list[CheckResult]:
    return [
        check_incremental_vs_batch(seed),
        check_shift_invariance(seed + 1),
        check_bounds_and_ordering(seed + 2),
        check_fifo_suffix(seed + 3),
        check_window_contrast(seed + 4),
    ]
