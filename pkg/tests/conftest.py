import threading
import time

import pytest

from branchsim.branchstore.store import BranchStore
from branchsim.scenario import default_scenario


@pytest.fixture
def store(tmp_path):
    return BranchStore(tmp_path / "data")


@pytest.fixture
def rooted(store):
    """(store, root branch id) of a fresh default simulation at seed 42."""
    root = store.create_simulation(default_scenario("sim-test", seed=42))
    return store, root.branch_id


class LiveServer:
    """uvicorn on an ephemeral port in a daemon thread."""

    def __init__(self, app):
        import uvicorn

        self._server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        )
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.base_url = ""

    def start(self) -> "LiveServer":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start in time")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.base_url = f"http://127.0.0.1:{port}"
        return self

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)


@pytest.fixture
def live_server():
    """Factory fixture: serve(app) -> LiveServer; all stopped on teardown."""
    servers = []

    def serve(app) -> LiveServer:
        server = LiveServer(app).start()
        servers.append(server)
        return server

    yield serve
    for server in servers:
        server.stop()
