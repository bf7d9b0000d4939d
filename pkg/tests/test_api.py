import math

import pytest
from fastapi.testclient import TestClient

from app.core.errors import NotHermitian, SimulationError, UnknownFlip
from app.main import _status_for, app

client = TestClient(app)


def test_eigensystem():
    r = client.post("/api/v1/eigensystem", json={"v": 0.3, "r": 1.0, "gamma": 3.5, "k": 0.5 * math.pi})
    assert r.status_code == 200
    payload = r.json()
    assert payload["lambda1"][1] >= payload["lambda2"][1]
    assert len(payload["R1"]) == 2 and len(payload["R1"][0]) == 2
    assert payload["ordering_degenerate"] is False


def test_exceptional_point_maps_to_conflict():
    r = client.post("/api/v1/eigensystem", json={"v": 0.5, "r": 0.0, "k": 0.0})
    assert r.status_code == 409
    assert r.json()["error"] == "ExceptionalPoint"


def test_request_validation():
    r = client.post("/api/v1/eigensystem", json={"v": 0.3, "r": 1.0, "gamma": -1.0})
    assert r.status_code == 422


def test_phase():
    r = client.get("/api/v1/phase", params={"v": 0.3, "r": 1.0})
    assert r.status_code == 200
    assert r.json()["w"] == 1.0
    assert client.get("/api/v1/phase", params={"v": 0.3, "r": 0.2}).status_code == 409


def test_sweep():
    body = {"v": 0.3, "r": 1.0, "gamma": 3.5, "k_grid": {"points": [0.1, 0.5]}}
    r = client.post("/api/v1/sweep", json=body)
    assert r.status_code == 200
    rows = r.json()["rows"]
    assert rows[0]["sx"] == pytest.approx(0.891, abs=1e-3)
    assert rows[1]["sz"] == pytest.approx(0.965, abs=1e-3)
    assert client.post("/api/v1/sweep", json={**body, "out": "/tmp/x.csv"}).status_code == 400


def test_winding():
    r = client.post("/api/v1/winding", json={"data": "s2"})
    assert r.status_code == 200
    assert round(2 * r.json()["w_per_zone"]) == 1
    assert client.post("/api/v1/winding", json={"data": "/etc/passwd"}).status_code == 400
    r = client.post("/api/v1/winding", json={"v": 0.3, "r": 0.18, "n_grid": 200})
    assert r.json()["w"] == pytest.approx(0.0, abs=2e-2)


def test_compile_pulses():
    body = {
        "params": {"v": 0.3, "r": 1.0, "gamma": 3.5, "k": 0.3 * math.pi},
        "dilation": {"step": 1e-3, "horizon": 0.2},
        "stride": 50,
    }
    r = client.post("/api/v1/compile-pulses", json=body)
    assert r.status_code == 200
    payload = r.json()
    assert payload["samples"] == 201
    assert len(payload["rows"]) == 5
    assert payload["omega_up"] < payload["omega_down"]


def test_reproduce():
    r = client.get("/api/v1/reproduce/s3")
    assert r.status_code == 200
    assert r.json()["passed"] is True
    assert client.get("/api/v1/reproduce/s7").status_code == 404


def test_error_status_mapping():
    assert _status_for(UnknownFlip("x")) == 422
    assert _status_for(NotHermitian("x")) == 409
    assert _status_for(SimulationError("x")) == 500
