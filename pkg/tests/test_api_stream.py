"""Server-sent event delivery over a real HTTP server.

The in-process test client buffers streaming responses, so these tests run
uvicorn on an ephemeral port and read the stream with httpx.
"""

import json
import threading

import httpx
import pytest

import branchsim.api.app as api_app
from branchsim.api import create_app


@pytest.fixture(autouse=True)
def fast_heartbeat(monkeypatch):
    """Short keep-alive so abandoned stream generators wind down quickly."""
    monkeypatch.setattr(api_app, "HEARTBEAT_SECONDS", 0.1)


def _parse_frames(chunks):
    """Split raw SSE text into comment strings and (id, event, data) frames."""
    frames, comments = [], []
    for block in "".join(chunks).split("\n\n"):
        if not block:
            continue
        if block.startswith(":"):
            comments.append(block)
            continue
        fields = dict(
            line.split(": ", 1) for line in block.splitlines() if ": " in line
        )
        frames.append(fields)
    return frames, comments


def _read_stream(base_url, path, n_frames, timeout=30):
    frames, comments = [], []
    with httpx.Client(base_url=base_url, timeout=timeout) as client:
        with client.stream("GET", path) as response:
            assert response.status_code == 200
            assert response.headers["content-type"].startswith("text/event-stream")
            buffer = ""
            for chunk in response.iter_text():
                buffer += chunk
                done, _, buffer = buffer.rpartition("\n\n")
                new_frames, new_comments = _parse_frames([done + "\n\n"] if done else [])
                frames.extend(new_frames)
                comments.extend(new_comments)
                if len(frames) >= n_frames:
                    break
    return frames, comments


@pytest.fixture()
def served(tmp_path, live_server):
    app = create_app(tmp_path / "data")
    server = live_server(app)
    with httpx.Client(base_url=server.base_url, timeout=30) as client:
        resp = client.post("/simulations", json={"simulation_id": "sim-sse", "seed": 42})
        assert resp.status_code == 201
        yield server.base_url, resp.json()["root_branch_id"]


def test_backlog_then_live_ticks(served):
    base_url, root = served
    with httpx.Client(base_url=base_url, timeout=30) as client:
        client.post(f"/branches/{root}/advance", json={"n_ticks": 3})

    def advance_soon():
        with httpx.Client(base_url=base_url, timeout=60) as client:
            client.post(f"/branches/{root}/advance", json={"n_ticks": 10})

    worker = threading.Thread(target=advance_soon)
    worker.start()
    try:
        frames, _ = _read_stream(base_url, f"/branches/{root}/stream?from=0", 14)
    finally:
        worker.join()

    assert [f["id"] for f in frames] == [str(t) for t in range(14)]
    assert {f["event"] for f in frames} == {"tick"}
    payloads = [json.loads(f["data"]) for f in frames]
    assert [p["tick"] for p in payloads] == list(range(14))
    assert all("state_hash" in p and "prices" in p for p in payloads)


def test_resume_from_a_later_tick(served):
    base_url, root = served
    with httpx.Client(base_url=base_url, timeout=30) as client:
        client.post(f"/branches/{root}/advance", json={"n_ticks": 8})
    frames, _ = _read_stream(base_url, f"/branches/{root}/stream?from=5", 4)
    assert [f["id"] for f in frames] == ["5", "6", "7", "8"]


def test_live_only_subscription_sees_exactly_new_ticks(served):
    base_url, root = served
    with httpx.Client(base_url=base_url, timeout=30) as client:
        client.post(f"/branches/{root}/advance", json={"n_ticks": 5})

    started = threading.Event()

    def advance_after_connect():
        started.wait(timeout=10)
        with httpx.Client(base_url=base_url, timeout=60) as client:
            client.post(f"/branches/{root}/advance", json={"n_ticks": 4})

    worker = threading.Thread(target=advance_after_connect)
    worker.start()
    frames = []
    try:
        with httpx.Client(base_url=base_url, timeout=30) as client:
            with client.stream("GET", f"/branches/{root}/stream") as response:
                assert response.status_code == 200
                started.set()
                buffer = ""
                for chunk in response.iter_text():
                    buffer += chunk
                    done, _, buffer = buffer.rpartition("\n\n")
                    if done:
                        new, _ = _parse_frames([done + "\n\n"])
                        frames.extend(new)
                    if len(frames) >= 4:
                        break
    finally:
        worker.join()
    assert [f["id"] for f in frames] == ["6", "7", "8", "9"]


def test_heartbeats_between_ticks(tmp_path, live_server, monkeypatch):
    monkeypatch.setattr(api_app, "HEARTBEAT_SECONDS", 0.05)
    app = create_app(tmp_path / "data")
    server = live_server(app)
    with httpx.Client(base_url=server.base_url, timeout=30) as client:
        resp = client.post("/simulations", json={"simulation_id": "s", "seed": 1})
        root = resp.json()["root_branch_id"]
        comments = []
        with client.stream("GET", f"/branches/{root}/stream") as response:
            buffer = ""
            for chunk in response.iter_text():
                buffer += chunk
                if buffer.count(": keep-alive") >= 2:
                    comments = buffer.split("\n\n")
                    break
    assert sum(1 for c in comments if c.startswith(": keep-alive")) >= 2


def test_bad_resume_tick_rejected(served):
    base_url, root = served
    with httpx.Client(base_url=base_url, timeout=30) as client:
        resp = client.get(f"/branches/{root}/stream?from=99")
        assert resp.status_code == 400
        assert resp.json()["code"] == "RangeOutOfBounds"
