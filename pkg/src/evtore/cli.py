"""Command-line front end: reproducible pipelines over the core package.

Subcommands: simulate, render, patch, baseline, bench, verify, serve.
Exit codes: 0 success, 1 verification failure, 2 usage/validation error.
Every file-producing run writes a JSON manifest sidecar with the resolved
parameters; re-running a manifest's parameters reproduces byte-identical
outputs. Existing outputs are never overwritten without --force.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import WindowSpec, event_count, event_frame, sae, voxel_grid
from .bench import DEFAULT_K_SWEEP, format_report, run_bench, synthetic_stream
from .errors import EvtoreError
from .events import EventStream, SensorGeometry
from .fileio import (
    EVENT_MAGIC,
    read_events_binary,
    read_events_csv,
    write_events_binary,
    write_tensor,
)
from .render import render_patch, render_series
from .simulate import SimConfig, signal_from_kind, simulate
from .state import ToreConfig, new_state
from .verify import run_all_checks

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2


class CliError(Exception):
    """Usage/validation problem; maps to exit code 2."""


def _parse_size(text: str) -> SensorGeometry:
    try:
        w, h = text.lower().split("x")
        return SensorGeometry(int(w), int(h))
    except (ValueError, TypeError):
        raise CliError(f"--size must look like 346x260, got {text!r}") from None


def _refuse_overwrite(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise CliError(f"{path} exists; pass --force to overwrite")


def _write_manifest(path: Path, subcommand: str, params: dict, outputs: list[str],
                    force: bool) -> None:
    _refuse_overwrite(path, force)
    manifest = {
        "tool": "evtore",
        "version": __version__,
        "subcommand": subcommand,
        "params": params,
        "outputs": outputs,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_events(path: Path, convention: str, size: str | None,
                 policy: str = "reject") -> EventStream:
    """Read events from EVT1 or CSV, sniffing the binary magic."""
    if not path.exists():
        raise CliError(f"input file {path} does not exist")
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == EVENT_MAGIC:
        return read_events_binary(path)
    geometry = _parse_size(size) if size else None
    return read_events_csv(path, geometry=geometry, convention=convention, policy=policy)


def _tore_config(args: argparse.Namespace) -> ToreConfig:
    return ToreConfig(k=args.k, tau_us=args.tau_us, tau_prime_us=args.tau_prime_us)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_simulate(args: argparse.Namespace) -> int:
    geometry = _parse_size(args.size)
    params: dict = {"offset": args.offset}
    if args.signal in ("ramp", "linear_ramp"):
        params["slope"] = args.slope
    elif args.signal == "sinusoid":
        params.update(amplitude=args.amplitude, period_us=args.period_us, phase=args.phase)
    elif args.signal == "steps":
        params.update(times_us=args.step_at or [], heights=args.step_height or [])
    signal = signal_from_kind(args.signal, **params)
    config = SimConfig(
        geometry=geometry,
        epsilon=args.eps,
        t_start=args.t_start,
        t_end=args.t_start + args.dur,
        quantization_us=args.quant,
        noise_events=args.noise_events,
        noise_seed=args.noise_seed,
    )
    out = Path(args.out)
    _refuse_overwrite(out, args.force)
    stream = simulate(signal, config)
    write_events_binary(stream, out)
    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "simulate",
        {
            "signal": args.signal, **params, "eps": args.eps,
            "t_start": args.t_start, "dur": args.dur, "size": args.size,
            "quant": args.quant, "noise_events": args.noise_events,
            "noise_seed": args.noise_seed,
        },
        [str(out)],
        args.force,
    )
    print(f"wrote {len(stream)} events to {out}")
    return EXIT_OK


def _query_times(args: argparse.Namespace) -> list[int]:
    if args.at:
        return [int(t) for t in args.at]
    if args.rate is None or args.span is None:
        raise CliError("pass --at times or both --rate and --span")
    try:
        t0_s, t1_s = args.span.split(":")
        t0, t1 = int(t0_s), int(t1_s)
    except ValueError:
        raise CliError(f"--span must look like t0:t1, got {args.span!r}") from None
    if args.rate <= 0:
        raise CliError("--rate must be > 0 Hz")
    if t1 < t0:
        raise CliError(f"--span end {t1} precedes start {t0}")
    step = 1e6 / args.rate  # Hz to microseconds
    times = []
    i = 0
    while True:
        t = round(t0 + i * step)
        if t > t1:
            break
        times.append(int(t))
        i += 1
    return times


def cmd_render(args: argparse.Namespace) -> int:
    stream = _load_events(Path(args.input), args.convention, args.size, args.policy)
    config = _tore_config(args)
    times = _query_times(args)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    outputs = []
    volumes = render_series(stream, times, config, unclamped=args.unclamped)
    for volume in volumes:
        path = outdir / f"volume_{volume.query_time:012d}.tor"
        _refuse_overwrite(path, args.force)
        write_tensor(volume, path, dtype=args.dtype)
        outputs.append(str(path))
    _write_manifest(
        outdir / "manifest.json",
        "render",
        {
            "input": args.input, "at": args.at, "rate": args.rate, "span": args.span,
            "k": args.k, "tau_us": args.tau_us, "tau_prime_us": args.tau_prime_us,
            "dtype": args.dtype, "unclamped": args.unclamped,
            "convention": args.convention, "size": args.size, "policy": args.policy,
        },
        outputs,
        args.force,
    )
    print(f"wrote {len(outputs)} volumes to {outdir}")
    return EXIT_OK


def cmd_patch(args: argparse.Namespace) -> int:
    stream = _load_events(Path(args.input), args.convention, args.size, args.policy)
    if len(stream) == 0:
        raise CliError("input stream is empty; no event to patch around")
    config = _tore_config(args)
    indices = sorted(set(args.index)) if args.index else [len(stream) - 1]
    for i in indices:
        if not 0 <= i < len(stream):
            raise CliError(f"--index {i} outside stream of {len(stream)} events")

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    state = new_state(stream.geometry, config)
    pos = 0
    outputs = []
    for i in indices:
        state.ingest(stream.slice(pos, i + 1))
        pos = i + 1
        patch = render_patch(state, stream[i], m=args.m)
        path = outdir / f"patch_{i:08d}.tor"
        _refuse_overwrite(path, args.force)
        write_tensor(patch, path, dtype=args.dtype)
        outputs.append(str(path))
    _write_manifest(
        outdir / "manifest.json",
        "patch",
        {
            "input": args.input, "index": indices, "m": args.m, "k": args.k,
            "tau_us": args.tau_us, "tau_prime_us": args.tau_prime_us,
            "dtype": args.dtype, "convention": args.convention, "size": args.size,
            "policy": args.policy,
        },
        outputs,
        args.force,
    )
    print(f"wrote {len(outputs)} patches to {outdir}")
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    stream = _load_events(Path(args.input), args.convention, args.size, args.policy)
    geometry = stream.geometry
    out = Path(args.out)
    _refuse_overwrite(out, args.force)

    needs_window = args.representation in ("frame", "count", "voxel")
    if needs_window and args.window is None:
        raise CliError(f"{args.representation} needs --window (duration in us)")
    outputs = [str(out)]
    if args.representation == "frame":
        write_tensor(event_frame(stream, geometry, WindowSpec(args.end, args.window)),
                     out, dtype=args.dtype)
    elif args.representation == "count":
        write_tensor(event_count(stream, geometry, WindowSpec(args.end, args.window)),
                     out, dtype=args.dtype)
    elif args.representation == "voxel":
        write_tensor(
            voxel_grid(stream, geometry, WindowSpec(args.end, args.window), args.bins),
            out, dtype=args.dtype,
        )
    else:  # sae: timestamps plus validity mask as a sibling file
        result = sae(stream, geometry, args.end)
        write_tensor(result.timestamps.astype(np.float64), out, dtype=args.dtype)
        mask_path = out.with_name(out.name + ".mask")
        _refuse_overwrite(mask_path, args.force)
        write_tensor(result.valid.astype(np.float64), mask_path, dtype=args.dtype)
        outputs.append(str(mask_path))

    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "baseline",
        {
            "representation": args.representation, "input": args.input,
            "end": args.end, "window": args.window, "bins": args.bins,
            "dtype": args.dtype, "convention": args.convention, "size": args.size,
            "policy": args.policy,
        },
        outputs,
        args.force,
    )
    print(f"wrote {args.representation} baseline to {out}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    if args.input:
        stream = _load_events(Path(args.input), args.convention, args.size)
    else:
        stream = synthetic_stream(args.events, _parse_size(args.size), seed=args.seed)
    k_sweep = tuple(int(v) for v in args.k_sweep.split(","))
    rows = run_bench(stream, reps=args.reps, k_sweep=k_sweep, ingest_k=args.k)
    report = format_report(rows)
    print(report)
    if args.out:
        out = Path(args.out)
        _refuse_overwrite(out, args.force)
        out.write_text(report + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_all_checks(seed=args.seed)
    failed = False
    for result in results:
        print(result.line())
        if not result.passed:
            failed = True
            print(json.dumps({"counterexample": result.counterexample}, indent=2, sort_keys=True))
    if failed:
        return EXIT_VERIFY_FAILED
    print(f"all {len(results)} checks passed (seed={args.seed})")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_events_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="event file (EVT1 binary or t,x,y,p CSV)")
    p.add_argument("--convention", choices=["binary", "signed"], default="binary",
                   help="polarity convention for CSV input")
    p.add_argument("--size", default=None,
                   help="geometry WxH for CSV input (default: inferred)")
    p.add_argument("--policy", choices=["reject", "clamp"], default="reject",
                   help="timestamp policy for CSV validation")


def _add_tore_flags(p: argparse.ArgumentParser, default_k: int) -> None:
    p.add_argument("--k", type=int, default=default_k, help="FIFO depth per pixel per polarity")
    p.add_argument("--tau-us", type=int, default=5_000_000, dest="tau_us",
                   help="max time window in microseconds")
    p.add_argument("--tau-prime-us", type=int, default=150, dest="tau_prime_us",
                   help="min time sensitivity in microseconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evtore",
        description="Event-camera representation engine: simulate, ingest, render, compare.",
    )
    parser.add_argument("--version", action="version", version=f"evtore {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic event file")
    p.add_argument("--signal", required=True, choices=["ramp", "constant", "sinusoid", "steps"])
    p.add_argument("--slope", type=float, default=0.0, help="ramp slope per microsecond")
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--period-us", type=float, default=100_000.0, dest="period_us")
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--step-at", type=int, action="append", dest="step_at",
                   help="step time in microseconds (repeatable)")
    p.add_argument("--step-height", type=float, action="append", dest="step_height",
                   help="step height (repeatable, pairs with --step-at)")
    p.add_argument("--eps", type=float, required=True, help="contrast threshold (> 0)")
    p.add_argument("--t-start", type=int, default=0, dest="t_start")
    p.add_argument("--dur", type=int, required=True, help="duration in microseconds")
    p.add_argument("--size", default="1x1", help="sensor geometry WxH")
    p.add_argument("--quant", type=int, default=1, help="microseconds per timestamp tick")
    p.add_argument("--noise-events", type=int, default=0, dest="noise_events")
    p.add_argument("--noise-seed", type=int, default=0, dest="noise_seed")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("render", help="render volumes at query times")
    _add_events_input(p)
    p.add_argument("--at", type=int, action="append", help="query time in us (repeatable)")
    p.add_argument("--rate", type=float, default=None, help="query rate in Hz")
    p.add_argument("--span", default=None, help="query span t0:t1 in us")
    _add_tore_flags(p, default_k=4)
    p.add_argument("--unclamped", action="store_true", help="render without clamps (ablation)")
    p.add_argument("--dtype", choices=["f64", "f32"], default="f64")
    p.add_argument("--outdir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_render)

    p = sub.add_parser("patch", help="render patches around events of interest")
    _add_events_input(p)
    p.add_argument("--m", type=int, default=9, help="odd patch side length")
    _add_tore_flags(p, default_k=7)
    p.add_argument("--index", type=int, action="append",
                   help="event index to patch (repeatable; default: last event)")
    p.add_argument("--dtype", choices=["f64", "f32"], default="f64")
    p.add_argument("--outdir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_patch)

    p = sub.add_parser("baseline", help="compute a windowed baseline representation")
    p.add_argument("representation", choices=["frame", "count", "sae", "voxel"])
    _add_events_input(p)
    p.add_argument("--end", type=int, required=True, help="window end t_end in us")
    p.add_argument("--window", type=int, default=None, help="window duration in us")
    p.add_argument("--bins", type=int, default=5, help="voxel grid bin count")
    p.add_argument("--dtype", choices=["f64", "f32"], default="f64")
    p.add_argument("--out", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_baseline)

    p = sub.add_parser("bench", help="throughput/latency report (CSV)")
    p.add_argument("--input", default=None, help="event file; default: synthetic stream")
    p.add_argument("--convention", choices=["binary", "signed"], default="binary")
    p.add_argument("--events", type=int, default=1_000_000, help="synthetic stream size")
    p.add_argument("--size", default="346x260", help="synthetic geometry WxH")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--k", type=int, default=7, help="FIFO depth for the ingestion case")
    p.add_argument("--k-sweep", default=",".join(str(k) for k in DEFAULT_K_SWEEP),
                   dest="k_sweep", help="comma-separated K values for render latency")
    p.add_argument("--out", default=None, help="also write the CSV here")
    p.add_argument("--force", action="store_true")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("verify", help="run randomized oracle checks")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(handler=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (CliError, EvtoreError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
