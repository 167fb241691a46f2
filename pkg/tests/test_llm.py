from decimal import Decimal

import pytest

from branchsim.agents.llm import (
    MODE_RECORD,
    MODE_REPLAY,
    PROMPT_VERSION,
    LlmRuntime,
    build_prompt,
    consult,
    llm_decide,
    parse_action,
    prompt_hash,
)
from branchsim.agents.policies import Observation
from branchsim.agents.profiles import AgentProfile, Strategy
from branchsim.engine.types import EventInstance, Portfolio, Side, WorldEvent
from branchsim.errors import ParseFailure, TranscriptMissing

COMMODITIES = ["GOLD", "OIL", "WHEAT"]


def _profile():
    profile = AgentProfile(
        agent_id="trader-llm", display_name="Quill", strategy=Strategy.LLM,
        aggressiveness=Decimal("0.5"), post_propensity=Decimal(0), lookback=1,
        threshold=Decimal("0.05"), anchors={}, initial_cash=Decimal("5000"),
        initial_holdings={},
    )
    return profile


def _obs(tick=3, with_event=False):
    prices = {c: Decimal("10.0000") for c in COMMODITIES}
    events = []
    if with_event:
        events = [EventInstance(
            WorldEvent("evt-1", "Strike", "Dock workers walk out.",
                       {"OIL": Decimal("0.5")}, 0, 8, 4),
            1,
        )]
    return Observation(
        tick=tick,
        prices=prices,
        price_history={c: [Decimal("10.0000")] for c in COMMODITIES},
        portfolio=Portfolio("trader-llm", Decimal("5000.0000"), {"OIL": 4}),
        sentiments={c: Decimal(0) for c in COMMODITIES},
        active_events=events,
        feed=[],
    )


class DictStore:
    def __init__(self):
        self.entries = {}
        self.puts = 0

    def get(self, tick, agent_id):
        return self.entries.get((tick, agent_id))

    def put(self, tick, agent_id, entry):
        self.entries[(tick, agent_id)] = entry
        self.puts += 1


class ScriptedClient:
    def __init__(self, reply):
        self.reply = reply
        self.calls = 0

    def complete(self, prompt, params):
        self.calls += 1
        if isinstance(self.reply, Exception):
            raise self.reply
        return self.reply


def _runtime(mode, client=None, store=None, version=PROMPT_VERSION):
    store = store or DictStore()
    return LlmRuntime(
        mode=mode, client=client, get=store.get, put=store.put,
        prompt_version=version,
    ), store


class TestParse:
    def test_plain_json(self):
        order, title, body = parse_action(
            '{"action": "BUY", "commodity": "OIL", "quantity": 3, '
            '"reasoning": "supply squeeze"}',
            "a", COMMODITIES,
        )
        assert (order.side, order.commodity, order.quantity) == (Side.BUY, "OIL", 3)
        assert order.reasoning == "supply squeeze"
        assert title == "" and body == ""

    def test_fenced_json_with_post(self):
        text = (
            "```json\n"
            '{"action": "SELL", "commodity": "GOLD", "quantity": 2,\n'
            ' "reasoning": "toppy", "post_title": "Gold is done",'
            ' "post_body": "Taking profits."}\n'
            "```"
        )
        order, title, body = parse_action(text, "a", COMMODITIES)
        assert (order.side, order.commodity, order.quantity) == (Side.SELL, "GOLD", 2)
        assert title == "Gold is done"
        assert body == "Taking profits."

    def test_plain_text(self):
        order, _, _ = parse_action(
            "BUY OIL 3 because pipeline disruption", "a", COMMODITIES
        )
        assert (order.side, order.commodity, order.quantity) == (Side.BUY, "OIL", 3)
        assert order.reasoning == "pipeline disruption"

    def test_plain_text_case_insensitive(self):
        order, _, _ = parse_action("I would sell WHEAT 12 now", "a", COMMODITIES)
        assert (order.side, order.commodity, order.quantity) == (Side.SELL, "WHEAT", 12)

    def test_bare_hold(self):
        order, _, _ = parse_action("HOLD", "a", COMMODITIES)
        assert order.side == Side.HOLD
        assert order.quantity == 0

    def test_json_hold_without_commodity(self):
        order, _, _ = parse_action('{"action": "HOLD"}', "a", COMMODITIES)
        assert order.side == Side.HOLD

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "let me think about it",
            '{"action": "SHORT", "commodity": "OIL", "quantity": 1}',
            '{"action": "BUY", "commodity": "COCOA", "quantity": 1}',
            '{"action": "BUY", "commodity": "OIL", "quantity": 0}',
            '{"action": "BUY", "commodity": "OIL", "quantity": 2000000}',
            "BUY OIL because reasons",
        ],
    )
    def test_junk_raises(self, text):
        with pytest.raises(ParseFailure):
            parse_action(text, "a", COMMODITIES)

    def test_raw_text_preserved(self):
        with pytest.raises(ParseFailure) as exc_info:
            parse_action("gibberish", "a", COMMODITIES)
        assert exc_info.value.raw_text == "gibberish"


class TestPrompt:
    def test_deterministic(self):
        assert build_prompt(_profile(), _obs()) == build_prompt(_profile(), _obs())
        assert prompt_hash("x") == prompt_hash("x")

    def test_includes_event_body_and_holdings(self):
        prompt = build_prompt(_profile(), _obs(with_event=True))
        assert "Dock workers walk out." in prompt
        assert "OIL: 4" in prompt

    def test_sensitive_to_observation(self):
        a = build_prompt(_profile(), _obs(tick=3))
        b = build_prompt(_profile(), _obs(tick=4))
        assert prompt_hash(a) != prompt_hash(b)


class TestConsult:
    def test_record_writes_ok_entry(self):
        client = ScriptedClient('{"action": "HOLD"}')
        runtime, store = _runtime(MODE_RECORD, client)
        entry = consult(runtime, _profile(), 3, "prompt text")
        assert entry["status"] == "ok"
        assert entry["response"] == '{"action": "HOLD"}'
        assert store.puts == 1
        assert entry["prompt_hash"] == prompt_hash("prompt text")
        assert entry["prompt_version"] == PROMPT_VERSION

    def test_record_reuses_matching_entry(self):
        client = ScriptedClient('{"action": "HOLD"}')
        runtime, store = _runtime(MODE_RECORD, client)
        first = consult(runtime, _profile(), 3, "prompt text")
        second = consult(runtime, _profile(), 3, "prompt text")
        assert first == second
        assert client.calls == 1

    def test_stale_hash_forces_reask(self):
        client = ScriptedClient('{"action": "HOLD"}')
        runtime, store = _runtime(MODE_RECORD, client)
        consult(runtime, _profile(), 3, "old prompt")
        consult(runtime, _profile(), 3, "new prompt")
        assert client.calls == 2
        assert store.entries[(3, "trader-llm")]["prompt_hash"] == prompt_hash("new prompt")

    def test_stale_version_forces_reask(self):
        client = ScriptedClient('{"action": "HOLD"}')
        runtime, store = _runtime(MODE_RECORD, client)
        consult(runtime, _profile(), 3, "prompt")
        runtime2, _ = _runtime(MODE_RECORD, client, version="v2")
        runtime2 = LlmRuntime(
            mode=MODE_RECORD, client=client, get=store.get, put=store.put,
            prompt_version="v2",
        )
        consult(runtime2, _profile(), 3, "prompt")
        assert client.calls == 2

    def test_record_without_client_records_unavailable(self):
        runtime, store = _runtime(MODE_RECORD, client=None)
        entry = consult(runtime, _profile(), 3, "prompt")
        assert entry["status"] == "unavailable"
        assert entry["response"] is None
        assert "no completion client" in entry["detail"]
        assert store.puts == 1

    def test_client_exception_recorded_as_unavailable(self):
        runtime, _ = _runtime(MODE_RECORD, ScriptedClient(RuntimeError("boom")))
        entry = consult(runtime, _profile(), 3, "prompt")
        assert entry["status"] == "unavailable"
        assert entry["detail"] == "boom"

    def test_replay_missing_raises(self):
        runtime, _ = _runtime(MODE_REPLAY)
        with pytest.raises(TranscriptMissing):
            consult(runtime, _profile(), 3, "prompt")

    def test_replay_stale_raises(self):
        client = ScriptedClient('{"action": "HOLD"}')
        record_runtime, store = _runtime(MODE_RECORD, client)
        consult(record_runtime, _profile(), 3, "original prompt")
        replay_runtime = LlmRuntime(
            mode=MODE_REPLAY, get=store.get, put=store.put,
            prompt_version=PROMPT_VERSION,
        )
        with pytest.raises(TranscriptMissing):
            consult(replay_runtime, _profile(), 3, "different prompt")


class TestDecide:
    def test_round_trip_record_then_replay(self):
        client = ScriptedClient(
            '{"action": "BUY", "commodity": "OIL", "quantity": 2, '
            '"reasoning": "dip", "post_title": "Buying oil"}'
        )
        record_runtime, store = _runtime(MODE_RECORD, client)
        recorded, note = llm_decide(record_runtime, _profile(), _obs())
        assert note is None
        assert recorded.order.side == Side.BUY
        assert recorded.post is not None and recorded.post.title == "Buying oil"

        replay_runtime = LlmRuntime(
            mode=MODE_REPLAY, get=store.get, put=store.put,
            prompt_version=PROMPT_VERSION,
        )
        replayed, note = llm_decide(replay_runtime, _profile(), _obs())
        assert note is None
        assert replayed == recorded
        assert client.calls == 1

    def test_unavailable_falls_back_to_hold(self):
        runtime, store = _runtime(MODE_RECORD, client=None)
        decision, note = llm_decide(runtime, _profile(), _obs())
        assert decision.order.side == Side.HOLD
        assert decision.order.reasoning == "adapter unavailable"
        assert note is not None and note.code == "adapter_unavailable"
        # The fallback itself was recorded, so replay reproduces it offline.
        replay_runtime = LlmRuntime(
            mode=MODE_REPLAY, get=store.get, put=store.put,
            prompt_version=PROMPT_VERSION,
        )
        replayed, note = llm_decide(replay_runtime, _profile(), _obs())
        assert replayed == decision
        assert note is not None and note.code == "adapter_unavailable"

    def test_parse_failure_falls_back_to_hold(self):
        runtime, _ = _runtime(MODE_RECORD, ScriptedClient("word salad"))
        decision, note = llm_decide(runtime, _profile(), _obs())
        assert decision.order.side == Side.HOLD
        assert decision.order.reasoning == "adapter unavailable"
        assert note is not None
        assert note.code == "parse_failure"
        assert note.detail == "word salad"

    def test_post_references_events_hitting_the_traded_commodity(self):
        client = ScriptedClient(
            '{"action": "BUY", "commodity": "OIL", "quantity": 1, '
            '"post_title": "Oil up"}'
        )
        runtime, _ = _runtime(MODE_RECORD, client)
        decision, _ = llm_decide(runtime, _profile(), _obs(with_event=True))
        assert decision.post is not None
        assert decision.post.referenced_event_ids == ("evt-1",)
        assert decision.post.sentiment == 1
