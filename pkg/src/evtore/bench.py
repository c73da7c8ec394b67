"""Throughput and latency measurements for ingestion, rendering, baselines.

Rows report the median and 95th percentile over the requested repetitions.
Numbers are wall-clock and machine-dependent; they are a regression signal,
not a correctness gate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .baselines import WindowSpec, event_count, event_frame, sae, voxel_grid
from .events import EventStream, SensorGeometry
from .render import render_volume
from .state import ToreConfig, new_state
from .verify import random_stream

DEFAULT_K_SWEEP = (1, 4, 7, 16)


@dataclass(frozen=True)
class BenchRow:
    case: str
    param: str
    median: float
    p95: float
    unit: str

    def csv(self) -> str:
        return f"{self.case},{self.param},{self.median:.6g},{self.p95:.6g},{self.unit}"


def _stats(samples: list[float]) -> tuple[float, float]:
    arr = np.asarray(samples, dtype=np.float64)
    return float(np.median(arr)), float(np.percentile(arr, 95))


def synthetic_stream(n_events: int, geometry: SensorGeometry, seed: int = 0,
                     t_max: int = 10_000_000) -> EventStream:
    return random_stream(np.random.default_rng(seed), geometry, n_events, t_max=t_max)


def bench_ingest(stream: EventStream, config: ToreConfig, reps: int) -> BenchRow:
    rates = []
    for _ in range(reps):
        state = new_state(stream.geometry, config)
        report = state.ingest(stream)
        rates.append(report.events_per_sec)
    med, p95 = _stats(rates)
    return BenchRow("ingest_throughput", f"K={config.k}", med, p95, "events/sec")


def bench_render(stream: EventStream, k: int, reps: int) -> BenchRow:
    config = ToreConfig(k=k)
    state = new_state(stream.geometry, config)
    state.ingest(stream)
    t_query = int(stream.t[-1])
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        render_volume(state, t_query)
        times.append((time.perf_counter() - t0) * 1e3)
    med, p95 = _stats(times)
    geom = stream.geometry
    return BenchRow("render_latency", f"K={k},H={geom.height},W={geom.width}",
                    med, p95, "ms/volume")


def bench_baselines(stream: EventStream, reps: int) -> list[BenchRow]:
    geom = stream.geometry
    t_end = max(int(stream.t[-1]), 1)
    duration = max(1, min(t_end, t_end - int(stream.t[0])))
    window = WindowSpec(t_end=t_end, duration=duration)
    cases = {
        "frame": lambda: event_frame(stream, geom, window),
        "count": lambda: event_count(stream, geom, window),
        "sae": lambda: sae(stream, geom, t_end),
        "voxel": lambda: voxel_grid(stream, geom, window, bins=5),
    }
    rows = []
    for name, fn in cases.items():
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            fn()
            times.append((time.perf_counter() - t0) * 1e3)
        med, p95 = _stats(times)
        rows.append(BenchRow("baseline_latency", name, med, p95, "ms"))
    return rows


def run_bench(stream: EventStream, reps: int = 3,
              k_sweep: tuple[int, ...] = DEFAULT_K_SWEEP,
              ingest_k: int = 7) -> list[BenchRow]:
    """Full report: ingestion throughput, render latency sweep, baselines."""
    rows = [bench_ingest(stream, ToreConfig(k=ingest_k), reps)]
    for k in k_sweep:
        rows.append(bench_render(stream, k, reps))
    rows.extend(bench_baselines(stream, reps))
    return rows


def format_report(rows: list[BenchRow]) -> str:
    header = "case,param,median,p95,unit"
    return "\n".join([header] + [r.csv() for r in rows])
