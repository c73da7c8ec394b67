import json
import subprocess
import sys

import numpy as np

from evtore import read_events_binary, read_tensor
from evtore.cli import EXIT_OK, EXIT_USAGE, main


def run(*args) -> int:
    return main(list(args))


def simulate_ramp(tmp_path, name="ramp.evt", dur="1000000"):
    out = tmp_path / name
    code = run("simulate", "--signal", "ramp", "--slope", "0.001", "--eps", "0.1",
               "--dur", dur, "--size", "1x1", "--out", str(out))
    assert code == EXIT_OK
    return out


def test_simulate_ramp_event_count(tmp_path):
    out = simulate_ramp(tmp_path)
    stream = read_events_binary(out)
    assert len(stream) == 10_000
    manifest = json.loads((tmp_path / "ramp.evt.manifest.json").read_text())
    assert manifest["subcommand"] == "simulate"
    assert manifest["params"]["eps"] == 0.1


def test_simulate_constant_writes_empty_file(tmp_path):
    out = tmp_path / "quiet.evt"
    code = run("simulate", "--signal", "constant", "--eps", "0.5", "--dur", "1000",
               "--size", "2x2", "--out", str(out))
    assert code == EXIT_OK
    assert len(read_events_binary(out)) == 0


def test_simulate_zero_eps_is_usage_error(tmp_path, capsys):
    code = run("simulate", "--signal", "ramp", "--slope", "0.001", "--eps", "0",
               "--dur", "1000", "--size", "1x1", "--out", str(tmp_path / "x.evt"))
    assert code == EXIT_USAGE
    assert "epsilon" in capsys.readouterr().err


def test_simulate_is_deterministic(tmp_path):
    a = simulate_ramp(tmp_path, "a.evt")
    b = simulate_ramp(tmp_path, "b.evt")
    assert a.read_bytes() == b.read_bytes()


def test_render_rate_span_grid(tmp_path):
    events = simulate_ramp(tmp_path, dur="20000")
    outdir = tmp_path / "vols"
    code = run("render", "--input", str(events), "--rate", "1000",
               "--span", "0:10000", "--outdir", str(outdir))
    assert code == EXIT_OK
    volumes = sorted(outdir.glob("volume_*.tor"))
    assert len(volumes) == 11  # 0, 1000, ..., 10000
    first = read_tensor(volumes[0])
    assert first.shape == (2, 4, 1, 1)  # default K=4


def test_render_at_times_and_k_flag(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    outdir = tmp_path / "vols"
    code = run("render", "--input", str(events), "--at", "1000", "--at", "2000",
               "--k", "7", "--outdir", str(outdir))
    assert code == EXIT_OK
    assert read_tensor(outdir / "volume_000000001000.tor").shape == (2, 7, 1, 1)


def test_render_unsorted_times_rejected(tmp_path, capsys):
    events = simulate_ramp(tmp_path, dur="5000")
    code = run("render", "--input", str(events), "--at", "500", "--at", "400",
               "--outdir", str(tmp_path / "v"))
    assert code == EXIT_USAGE
    assert "non-decreasing" in capsys.readouterr().err


def test_render_outputs_are_deterministic(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    d1, d2 = tmp_path / "v1", tmp_path / "v2"
    for d in (d1, d2):
        assert run("render", "--input", str(events), "--at", "2500",
                   "--outdir", str(d)) == EXIT_OK
    f1, f2 = d1 / "volume_000000002500.tor", d2 / "volume_000000002500.tor"
    assert f1.read_bytes() == f2.read_bytes()


def test_patch_default_geometry(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    outdir = tmp_path / "patches"
    code = run("patch", "--input", str(events), "--outdir", str(outdir))
    assert code == EXIT_OK
    files = list(outdir.glob("patch_*.tor"))
    assert len(files) == 1
    assert read_tensor(files[0]).shape == (2, 7, 9, 9)  # defaults m=9, K=7


def test_patch_even_m_rejected(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    code = run("patch", "--input", str(events), "--m", "8",
               "--outdir", str(tmp_path / "p"))
    assert code == EXIT_USAGE


def test_patch_corner_event_is_padded(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")  # 1x1 sensor: all events at (0,0)
    outdir = tmp_path / "patches"
    assert run("patch", "--input", str(events), "--m", "3", "--index", "0",
               "--outdir", str(outdir)) == EXIT_OK
    patch = read_tensor(outdir / "patch_00000000.tor")
    ln_tau = float(np.log(np.float64(5_000_000)))
    assert (patch[:, :, :, 0] == ln_tau).all()  # off-sensor column
    assert (patch[:, :, 0, :] == ln_tau).all()  # off-sensor row


def test_baseline_voxel_shape(tmp_path):
    events = simulate_ramp(tmp_path, dur="20000")
    out = tmp_path / "voxel.tor"
    code = run("baseline", "voxel", "--input", str(events), "--bins", "5",
               "--window", "1000", "--end", "5000", "--out", str(out))
    assert code == EXIT_OK
    assert read_tensor(out).shape == (5, 1, 1)


def test_baseline_sae_writes_mask(tmp_path):
    events = simulate_ramp(tmp_path, dur="20000")
    out = tmp_path / "sae.tor"
    code = run("baseline", "sae", "--input", str(events), "--end", "5000",
               "--out", str(out))
    assert code == EXIT_OK
    assert read_tensor(out).shape == (2, 1, 1)
    assert read_tensor(tmp_path / "sae.tor.mask").shape == (2, 1, 1)


def test_baseline_frame_requires_window(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    code = run("baseline", "frame", "--input", str(events), "--end", "5000",
               "--out", str(tmp_path / "f.tor"))
    assert code == EXIT_USAGE


def test_bench_writes_csv_report(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = run("bench", "--events", "20000", "--size", "32x32", "--reps", "2",
               "--k-sweep", "1,4", "--out", str(out))
    assert code == EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "case,param,median,p95,unit"
    cases = {line.split(",")[0] for line in lines[1:]}
    assert cases == {"ingest_throughput", "render_latency", "baseline_latency"}
    assert sum(1 for l in lines if l.startswith("render_latency")) == 2


def test_verify_passes_and_is_deterministic(tmp_path, capsys):
    assert run("verify", "--seed", "5") == EXIT_OK
    first = capsys.readouterr().out
    assert run("verify", "--seed", "5") == EXIT_OK
    assert capsys.readouterr().out == first
    assert first.count("[PASS]") == 5


def test_overwrite_refused_without_force(tmp_path, capsys):
    out = simulate_ramp(tmp_path, dur="1000")
    code = run("simulate", "--signal", "constant", "--eps", "1", "--dur", "1000",
               "--size", "1x1", "--out", str(out))
    assert code == EXIT_USAGE
    assert "force" in capsys.readouterr().err
    code = run("simulate", "--signal", "constant", "--eps", "1", "--dur", "1000",
               "--size", "1x1", "--out", str(out), "--force")
    assert code == EXIT_OK


def test_missing_input_is_usage_error(tmp_path):
    code = run("render", "--input", str(tmp_path / "nope.evt"), "--at", "5",
               "--outdir", str(tmp_path / "v"))
    assert code == EXIT_USAGE


def test_csv_input_with_convention(tmp_path):
    csv = tmp_path / "ev.csv"
    csv.write_text("100,0,0,1\n200,1,1,0\n")
    outdir = tmp_path / "v"
    code = run("render", "--input", str(csv), "--at", "300", "--size", "2x2",
               "--outdir", str(outdir))
    assert code == EXIT_OK
    assert read_tensor(outdir / "volume_000000000300.tor").shape == (2, 4, 2, 2)


def test_csv_clamp_policy_flag(tmp_path):
    csv = tmp_path / "ev.csv"
    csv.write_text("200,0,0,1\n100,0,0,1\n")  # regressing timestamp
    outdir = tmp_path / "v"
    assert run("render", "--input", str(csv), "--at", "300", "--size", "1x1",
               "--outdir", str(outdir)) == EXIT_USAGE  # reject is the default
    assert run("render", "--input", str(csv), "--at", "300", "--size", "1x1",
               "--policy", "clamp", "--outdir", str(outdir)) == EXIT_OK


def test_simulate_steps_signal(tmp_path):
    out = tmp_path / "steps.evt"
    code = run("simulate", "--signal", "steps", "--step-at", "100", "--step-height",
               "0.5", "--step-at", "300", "--step-height", "-0.9", "--eps", "0.3",
               "--dur", "1000", "--size", "1x1", "--out", str(out))
    assert code == EXIT_OK
    stream = read_events_binary(out)
    assert [(e.t, e.p) for e in stream] == [(100, 1), (300, -1)]


def test_render_unclamped_flag(tmp_path):
    events = simulate_ramp(tmp_path, dur="5000")
    outdir = tmp_path / "raw"
    assert run("render", "--input", str(events), "--at", "100", "--unclamped",
               "--outdir", str(outdir)) == EXIT_OK
    vol = read_tensor(outdir / "volume_000000000100.tor")
    assert vol[0, 0, 0, 0] == 0.0  # event at the query instant, no floor clamp


def test_console_entry_point_subprocess(tmp_path):
    """End-to-end through the installed module entry."""
    out = tmp_path / "sub.evt"
    proc = subprocess.run(
        [sys.executable, "-m", "evtore", "simulate", "--signal", "ramp",
         "--slope", "0.001", "--eps", "0.1", "--dur", "1000", "--size", "1x1",
         "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert read_events_binary(out)[0].t == 100

    proc = subprocess.run(
        [sys.executable, "-m", "evtore", "render", "--input", str(out),
         "--at", "9", "--at", "3", "--outdir", str(tmp_path / "v")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
