import numpy as np
import pytest
from fastapi.testclient import TestClient

from evtore import Event, SensorGeometry, ToreConfig, new_state
from evtore.render import render_patch, render_volume
from evtore.service import create_app

LN_TAU = float(np.log(np.float64(5_000_000)))


@pytest.fixture
def client():
    return TestClient(create_app())


def make_session(client, width=4, height=4, k=2):
    r = client.post("/sessions", json={
        "geometry": {"width": width, "height": height},
        "config": {"k": k},
    })
    assert r.status_code == 201
    return r.json()["session_id"]


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json()["status"] == "ok"


def test_session_lifecycle(client):
    sid = make_session(client)
    r = client.get(f"/sessions/{sid}")
    assert r.status_code == 200
    info = r.json()
    assert info["event_count"] == 0
    assert info["last_event_time"] is None

    assert any(s["session_id"] == sid for s in client.get("/sessions").json())

    assert client.delete(f"/sessions/{sid}").status_code == 204
    assert client.get(f"/sessions/{sid}").status_code == 404


def test_unknown_session_is_404(client):
    assert client.post("/sessions/nope/render", json={"t": 5}).status_code == 404


def test_ingest_then_render_matches_library(client):
    sid = make_session(client)
    events = [{"x": 0, "y": 0, "t": 10, "p": 1}, {"x": 1, "y": 2, "t": 30, "p": -1}]
    r = client.post(f"/sessions/{sid}/events", json={"events": events})
    assert r.status_code == 200
    assert r.json()["inserted"] == 2
    assert r.json()["last_event_time"] == 30

    r = client.post(f"/sessions/{sid}/render", json={"t": 30})
    assert r.status_code == 200
    payload = r.json()
    assert payload["shape"] == [2, 2, 4, 4]

    state = new_state(SensorGeometry(4, 4), ToreConfig(k=2))
    state.insert(Event(0, 0, 10, 1))
    state.insert(Event(1, 2, 30, -1))
    expected = render_volume(state, 30).data
    got = np.array(payload["data"]).reshape(payload["shape"])
    assert np.array_equal(got, expected)


def test_render_before_last_event_is_422(client):
    sid = make_session(client)
    client.post(f"/sessions/{sid}/events", json={"events": [{"x": 0, "y": 0, "t": 50, "p": 1}]})
    r = client.post(f"/sessions/{sid}/render", json={"t": 10})
    assert r.status_code == 422
    assert r.json()["error"] == "QueryBeforeLastEvent"


def test_ingest_out_of_bounds_is_422(client):
    sid = make_session(client)
    r = client.post(f"/sessions/{sid}/events",
                    json={"events": [{"x": 99, "y": 0, "t": 5, "p": 1}]})
    assert r.status_code == 422
    assert r.json()["error"] == "OutOfBoundsEvent"


def test_ingest_regression_reject_and_clamp(client):
    sid = make_session(client)
    client.post(f"/sessions/{sid}/events", json={"events": [{"x": 0, "y": 0, "t": 100, "p": 1}]})
    bad = {"events": [{"x": 1, "y": 1, "t": 20, "p": 1}]}
    assert client.post(f"/sessions/{sid}/events", json=bad).status_code == 422
    ok = client.post(f"/sessions/{sid}/events", json={**bad, "policy": "clamp"})
    assert ok.status_code == 200
    assert ok.json()["last_event_time"] == 100


def test_polarity_literal_enforced_by_schema(client):
    sid = make_session(client)
    r = client.post(f"/sessions/{sid}/events",
                    json={"events": [{"x": 0, "y": 0, "t": 5, "p": 0}]})
    assert r.status_code == 422  # pydantic rejects p outside {1, -1}


def test_patch_endpoint_matches_library(client):
    sid = make_session(client, width=16, height=16, k=7)
    event = {"x": 8, "y": 8, "t": 1000, "p": 1}
    client.post(f"/sessions/{sid}/events", json={"events": [event]})
    r = client.post(f"/sessions/{sid}/patch", json={"event": event, "m": 9})
    assert r.status_code == 200
    assert r.json()["shape"] == [2, 7, 9, 9]

    state = new_state(SensorGeometry(16, 16), ToreConfig(k=7))
    state.insert(Event(8, 8, 1000, 1))
    expected = render_patch(state, Event(8, 8, 1000, 1), m=9).data
    got = np.array(r.json()["data"]).reshape(r.json()["shape"])
    assert np.array_equal(got, expected)


def test_patch_even_m_is_422(client):
    sid = make_session(client)
    event = {"x": 1, "y": 1, "t": 10, "p": 1}
    client.post(f"/sessions/{sid}/events", json={"events": [event]})
    r = client.post(f"/sessions/{sid}/patch", json={"event": event, "m": 4})
    assert r.status_code == 422
    assert r.json()["error"] == "EvenPatchSize"


def test_cell_snapshot_endpoint(client):
    sid = make_session(client)
    client.post(f"/sessions/{sid}/events", json={"events": [
        {"x": 2, "y": 3, "t": 7, "p": -1}, {"x": 2, "y": 3, "t": 9, "p": -1}]})
    r = client.get(f"/sessions/{sid}/cells/2/3/-1")
    assert r.status_code == 200
    assert r.json()["slots"] == [9, 7]
    assert client.get(f"/sessions/{sid}/cells/9/9/1").status_code == 422


def test_simulate_endpoint_ramp(client):
    r = client.post("/simulate", json={
        "geometry": {"width": 1, "height": 1},
        "signal": {"kind": "ramp", "slope": 0.001},
        "epsilon": 0.1,
        "t_end": 1000,
    })
    assert r.status_code == 200
    body = r.json()
    assert body["count"] == 10
    assert body["events"][0] == {"x": 0, "y": 0, "t": 100, "p": 1}


def test_simulate_endpoint_steps(client):
    r = client.post("/simulate", json={
        "geometry": {"width": 1, "height": 1},
        "signal": {"kind": "steps", "times_us": [100, 300], "heights": [0.5, -0.9]},
        "epsilon": 0.3,
        "t_end": 1000,
    })
    assert r.status_code == 200
    assert [(e["t"], e["p"]) for e in r.json()["events"]] == [(100, 1), (300, -1)]


def test_baseline_endpoints(client):
    events = [{"x": 0, "y": 0, "t": 500, "p": 1}, {"x": 1, "y": 1, "t": 900, "p": -1}]
    base = {"geometry": {"width": 2, "height": 2}, "events": events, "t_end": 1000}

    r = client.post("/baselines/frame", json={**base, "duration": 1000})
    assert r.status_code == 200
    assert r.json()["shape"] == [2, 2]

    r = client.post("/baselines/count", json={**base, "duration": 1000})
    assert r.json()["shape"] == [2, 2, 2]

    r = client.post("/baselines/voxel", json={**base, "duration": 1000, "bins": 4})
    assert r.json()["shape"] == [4, 2, 2]
    assert sum(r.json()["data"]) == pytest.approx(0.0)  # +1 and -1 masses cancel

    r = client.post("/baselines/sae/timestamps", json=base)
    assert r.status_code == 200
    body = r.json()
    assert body["shape"] == [2, 2, 2]
    assert sum(body["valid"]) == 2

    r = client.post("/baselines/frame", json=base)  # missing duration
    assert r.status_code == 422
    r = client.post("/baselines/nonsense", json={**base, "duration": 10})
    assert r.status_code == 422


def test_rendered_payload_empty_state_is_log_tau(client):
    sid = make_session(client, width=2, height=2, k=1)
    r = client.post(f"/sessions/{sid}/render", json={"t": 0})
    assert r.status_code == 200
    assert all(v == LN_TAU for v in r.json()["data"])
