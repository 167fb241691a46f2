import pytest
from fastapi.testclient import TestClient

from branchsim.api import create_app

EVENT_30 = {
    "title": "Pipeline sabotage",
    "body": "Exports halted.",
    "impacts": {"OIL": "0.5"},
    "start_tick": 30,
    "duration_ticks": 20,
    "half_life_ticks": 10,
}


@pytest.fixture()
def client(tmp_path):
    app = create_app(tmp_path / "data")
    with TestClient(app) as c:
        yield c


def _create(client, sim_id="sim-api", seed=42, **extra):
    body = {"simulation_id": sim_id, "seed": seed, **extra}
    resp = client.post("/simulations", json=body)
    assert resp.status_code == 201, resp.text
    return resp.json()


class TestSimulations:
    def test_create_returns_root_and_scenario(self, client):
        payload = _create(client, name="oil study")
        assert payload["simulation_id"] == "sim-api"
        assert payload["root_branch_id"].startswith("b-")
        scenario = payload["scenario"]
        assert scenario["name"] == "oil study"
        assert scenario["seed"] == 42
        assert len(scenario["profiles"]) == 14
        assert scenario["initial_prices"] == {
            "GOLD": "1900.0000", "OIL": "80.0000", "WHEAT": "6.5000",
        }

    def test_create_with_custom_market(self, client):
        payload = _create(
            client,
            sim_id="sim-custom",
            initial_prices={"COPPER": "4.25"},
            config={"lambda": "0.1", "feed_window": 3},
            roster=[{
                "agent_id": "solo", "display_name": "Solo",
                "strategy": "NOISE", "aggressiveness": "0.5",
                "post_propensity": "0", "lookback": 1, "threshold": "1",
            }],
        )
        scenario = payload["scenario"]
        assert scenario["initial_prices"] == {"COPPER": "4.2500"}
        assert scenario["config"]["lambda"] == "0.1"
        assert scenario["config"]["feed_window"] == 3
        assert [p["agent_id"] for p in scenario["profiles"]] == ["solo"]

    def test_create_can_preschedule_events(self, client):
        payload = _create(client, events=[dict(EVENT_30, start_tick=2)])
        root = payload["root_branch_id"]
        events = client.get(f"/branches/{root}/events").json()["events"]
        assert len(events) == 1
        assert events[0]["injected_at_tick"] == 0
        assert events[0]["event"]["start_tick"] == 2

    def test_listing_and_lookup(self, client):
        _create(client, sim_id="sim-1")
        _create(client, sim_id="sim-2")
        assert client.get("/simulations").json()["simulations"] == ["sim-1", "sim-2"]
        scenario = client.get("/simulations/sim-2").json()["scenario"]
        assert scenario["sim_id"] == "sim-2"
        missing = client.get("/simulations/sim-3")
        assert missing.status_code == 404
        assert missing.json()["code"] == "UnknownSimulation"

    def test_duplicate_simulation_id(self, client):
        _create(client, sim_id="sim-dup")
        resp = client.post("/simulations", json={"simulation_id": "sim-dup", "seed": 1})
        assert resp.status_code == 400
        assert resp.json()["code"] == "InvalidRequest"

    def test_malformed_body_maps_to_invalid_request(self, client):
        resp = client.post("/simulations", json={"seed": "not a number"})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "InvalidRequest"
        assert "seed" in body["message"]

    def test_unknown_field_rejected(self, client):
        resp = client.post("/simulations", json={"seed": 1, "surprise": True})
        assert resp.status_code == 400

    def test_invalid_config_reports_problems(self, client):
        resp = client.post(
            "/simulations",
            json={"seed": 1, "config": {"contagion": "2"}},
        )
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "InvalidConfig"
        assert ["config.contagion", "must be in [0, 1]"] in body["problems"]

    def test_branch_tree(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 5})
        fork = client.post(f"/branches/{root}/fork", json={"tick": 3}).json()
        tree = client.get("/simulations/sim-api/branches").json()
        ids = {node["branch_id"]: node for node in tree["branches"]}
        assert set(ids) == {root, fork["branch_id"]}
        assert ids[fork["branch_id"]]["parent_id"] == root
        assert ids[fork["branch_id"]]["fork_tick"] == 3


class TestBranches:
    def test_advance_and_get(self, client):
        root = _create(client)["root_branch_id"]
        resp = client.post(f"/branches/{root}/advance", json={"n_ticks": 6})
        assert resp.status_code == 200
        body = resp.json()
        assert body["head_tick"] == 6
        assert [r["tick"] for r in body["records"]] == [1, 2, 3, 4, 5, 6]

        branch = client.get(f"/branches/{root}").json()
        assert branch["head_tick"] == 6
        assert branch["status"] == "IDLE"
        assert branch["simulation_id"] == "sim-api"
        assert client.get("/branches/b-missing").status_code == 404

    def test_advance_zero_rejected(self, client):
        root = _create(client)["root_branch_id"]
        resp = client.post(f"/branches/{root}/advance", json={"n_ticks": 0})
        assert resp.status_code == 400

    def test_pause_idle_branch(self, client):
        root = _create(client)["root_branch_id"]
        resp = client.post(f"/branches/{root}/pause")
        assert resp.status_code == 200
        assert resp.json()["status"] == "PAUSED"

    def test_inject_future_event_is_scheduled(self, client):
        root = _create(client)["root_branch_id"]
        resp = client.post(f"/branches/{root}/inject", json={"event": EVENT_30})
        assert resp.status_code == 200
        body = resp.json()
        assert body["outcome"] == "SCHEDULED"
        assert body["branch_id"] == root
        assert body["event_id"].startswith("evt-")

    def test_retroactive_inject_requires_fork(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 40})
        refused = client.post(f"/branches/{root}/inject", json={"event": EVENT_30})
        assert refused.status_code == 409
        assert refused.json()["code"] == "RetroactiveRequiresFork"

        forked = client.post(
            f"/branches/{root}/inject",
            json={"event": EVENT_30, "auto_fork": True, "label": "shock"},
        )
        assert forked.status_code == 201
        body = forked.json()
        assert body["outcome"] == "FORKED_INTO"
        assert body["branch_id"] != root
        child = client.get(f"/branches/{body['branch_id']}").json()
        assert child["fork_tick"] == 30
        assert child["label"] == "shock"

    def test_duplicate_event_conflicts(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/inject", json={"event": EVENT_30})
        dup = client.post(f"/branches/{root}/inject", json={"event": EVENT_30})
        assert dup.status_code == 409
        assert dup.json()["code"] == "DuplicateEventId"

    def test_bad_events_are_client_errors(self, client):
        root = _create(client)["root_branch_id"]
        unknown = client.post(
            f"/branches/{root}/inject",
            json={"event": dict(EVENT_30, impacts={"COCOA": "0.5"})},
        )
        assert unknown.status_code == 400
        assert unknown.json()["code"] == "UnknownCommodity"

        oversized = client.post(
            f"/branches/{root}/inject",
            json={"event": dict(EVENT_30, impacts={"OIL": "1.5"})},
        )
        assert oversized.status_code == 400
        assert "invalid event" in oversized.json()["message"]

    def test_fork_and_bounds(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 5})
        resp = client.post(f"/branches/{root}/fork", json={"tick": 4, "label": "probe"})
        assert resp.status_code == 201
        assert resp.json()["parent_id"] == root

        beyond = client.post(f"/branches/{root}/fork", json={"tick": 9})
        assert beyond.status_code == 400
        assert beyond.json()["code"] == "TickBeyondHead"

    def test_timeline_slicing(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 8})
        full = client.get(f"/branches/{root}/timeline").json()
        assert [r["tick"] for r in full["records"]] == list(range(9))

        window = client.get(f"/branches/{root}/timeline?from=3&to=5").json()
        assert [r["tick"] for r in window["records"]] == [3, 4, 5]
        assert (window["from_tick"], window["to_tick"]) == (3, 5)

        out = client.get(f"/branches/{root}/timeline?from=3&to=99")
        assert out.status_code == 400
        assert out.json()["code"] == "RangeOutOfBounds"

    def test_replay_returns_head_hash(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 10})
        head = client.get(f"/branches/{root}/timeline?from=10").json()["records"][0]
        resp = client.post(f"/branches/{root}/replay")
        assert resp.status_code == 200
        assert resp.json()["final_state_hash"] == head["state_hash"]

    def test_delete_rules(self, client):
        root = _create(client)["root_branch_id"]
        client.post(f"/branches/{root}/advance", json={"n_ticks": 3})
        child = client.post(f"/branches/{root}/fork", json={"tick": 2}).json()

        blocked = client.delete(f"/branches/{root}")
        assert blocked.status_code == 409
        assert blocked.json()["code"] == "BranchHasChildren"

        gone = client.delete(f"/branches/{child['branch_id']}")
        assert gone.status_code == 200
        assert client.get(f"/branches/{child['branch_id']}").status_code == 404


@pytest.fixture()
def ab_session(client):
    root = _create(client)["root_branch_id"]
    client.post(f"/branches/{root}/advance", json={"n_ticks": 40})
    up = client.post(
        f"/branches/{root}/inject", json={"event": EVENT_30, "auto_fork": True}
    ).json()["branch_id"]
    down_event = dict(EVENT_30, title="Quota hike", impacts={"OIL": "-0.5"})
    down = client.post(
        f"/branches/{root}/inject", json={"event": down_event, "auto_fork": True}
    ).json()["branch_id"]
    resp = client.post("/sessions", json={"left": up, "right": down})
    assert resp.status_code == 201
    return client, resp.json()["session"], up, down


class TestSessions:
    def test_open_finds_ancestor(self, ab_session):
        _, session, up, down = ab_session
        assert session["common_ancestor_tick"] == 30
        assert session["left"] == up
        assert session["right"] == down
        assert session["control_state"] == {"LEFT": "PAUSED", "RIGHT": "PAUSED"}

    def test_get_and_control(self, ab_session):
        client, session, up, down = ab_session
        sid = session["session_id"]
        assert client.get(f"/sessions/{sid}").json()["session"] == session

        resp = client.post(
            f"/sessions/{sid}/control",
            json={"side": "LEFT", "action": "RUN", "n_ticks": 5},
        )
        assert resp.status_code == 200
        assert client.get(f"/branches/{up}").json()["head_tick"] == 35
        assert client.get(f"/branches/{down}").json()["head_tick"] == 30

        bad = client.post(
            f"/sessions/{sid}/control", json={"side": "TOP", "action": "RUN"}
        )
        assert bad.status_code == 400

    def test_report_and_divergence(self, ab_session):
        client, session, up, down = ab_session
        sid = session["session_id"]
        for branch, ticks in ((up, 10), (down, 10)):
            client.post(f"/branches/{branch}/advance", json={"n_ticks": ticks})

        report = client.get(f"/sessions/{sid}/report").json()["report"]
        assert report["first_divergence_tick"] == 31
        assert report["compared_from"] == 30
        assert report["compared_to"] == 40
        oil = next(c for c in report["commodities"] if c["commodity"] == "OIL")
        assert oil["mean_left"] > oil["mean_right"]

        series = client.get(f"/sessions/{sid}/divergence?commodity=OIL").json()
        assert series["first_divergence_tick"] == 31
        assert series["series"][0] == [30, "0.000000"]

        junk = client.get(f"/sessions/{sid}/divergence?commodity=OIL&epsilon=wide")
        assert junk.status_code == 400
        missing = client.get(f"/sessions/{sid}/divergence?commodity=COCOA")
        assert missing.status_code == 400
        assert missing.json()["code"] == "UnknownCommodity"

    def test_unknown_session_and_self_compare(self, ab_session):
        client, _, up, _ = ab_session
        assert client.get("/sessions/s-missing").status_code == 404
        resp = client.post("/sessions", json={"left": up, "right": up})
        assert resp.status_code == 400
