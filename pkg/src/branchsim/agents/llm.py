"""LLM-backed agents: prompt building, transcript record/replay, lenient parsing.

Completions are never trusted for determinism. In record mode every
consultation, including failed ones, is written to the branch transcript
keyed by (tick, agent_id), so a later replay reproduces the same decisions
and the same fallbacks without a live model. A transcript entry only counts
if both the prompt version and the hash of the freshly rebuilt prompt match;
anything else is missing, which in record mode means ask the client again
and in replay mode raises TranscriptMissing. Unavailable clients and
unparseable replies degrade to HOLD and are noted on the TickRecord rather
than aborting the branch.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Callable, Protocol

from ..errors import ParseFailure, TranscriptMissing
from ..engine.types import FORMAT_VERSION, Order, Side
from .policies import Decision, Observation, PostDraft
from .profiles import AgentProfile

PROMPT_VERSION = "v1"

MAX_ORDER_QUANTITY = 1_000_000

MODE_REPLAY = "replay"
MODE_RECORD = "record"

ONE = Decimal(1)
NEG_ONE = Decimal(-1)
ZERO = Decimal(0)


class CompletionClient(Protocol):
    def complete(self, prompt: str, params: dict) -> str: ...


@dataclass
class HttpCompletionClient:
    """Client for a remote completion endpoint.

    POSTs {"prompt", "params"} as JSON and expects {"text": "..."} back.
    Transport errors propagate; the consult loop records them as
    unavailable and falls back to HOLD.
    """

    url: str
    api_key: str | None = None
    timeout_seconds: float = 30.0

    def complete(self, prompt: str, params: dict) -> str:
        import httpx

        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        response = httpx.post(
            self.url,
            json={"prompt": prompt, "params": params},
            headers=headers,
            timeout=self.timeout_seconds,
        )
        response.raise_for_status()
        return response.json()["text"]


@dataclass
class LlmRuntime:
    """What the tick loop needs to run LLM agents on one branch."""

    mode: str = MODE_REPLAY
    client: CompletionClient | None = None
    get: Callable[[int, str], dict | None] = lambda tick, agent_id: None
    put: Callable[[int, str, dict], None] = lambda tick, agent_id, entry: None
    prompt_version: str = PROMPT_VERSION
    params: dict = field(default_factory=dict)


def build_prompt(profile: AgentProfile, obs: Observation) -> str:
    lines = [
        f"You are {profile.display_name}, a commodity trader.",
        f"Tick {obs.tick}.",
        "Prices:",
    ]
    for c in obs.commodities():
        lines.append(f"  {c}: {obs.prices[c]} (sentiment {obs.sentiments.get(c, ZERO)})")
    lines.append(f"Your cash: {obs.portfolio.cash}")
    lines.append("Your holdings:")
    for c in sorted(obs.portfolio.holdings):
        lines.append(f"  {c}: {obs.portfolio.holdings[c]}")
    lines.append("Active events:")
    if obs.active_events:
        for inst in sorted(obs.active_events, key=lambda i: i.event.event_id):
            ev = inst.event
            impacts = ", ".join(f"{c}:{ev.impacts[c]}" for c in sorted(ev.impacts))
            lines.append(f"  [{ev.event_id}] {ev.title} (age {inst.elapsed}, impacts {impacts})")
            if ev.body:
                lines.append(f"    {ev.body}")
    else:
        lines.append("  none")
    lines.append("Recent posts:")
    if obs.feed:
        for post in obs.feed:
            lines.append(f"  {post.author_id} ({post.sentiment}): {post.title}")
    else:
        lines.append("  none")
    lines.append(
        "Reply with one action as JSON: "
        '{"action": "BUY|SELL|HOLD", "commodity": "...", "quantity": N, '
        '"reasoning": "...", "post_title": "...", "post_body": "..."} '
        "(post fields optional), or as plain text like 'BUY OIL 3 because ...'."
    )
    return "\n".join(lines)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


_FENCE_RE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n?```\s*$", re.DOTALL)
_ACTION_RE = re.compile(r"\b(BUY|SELL|HOLD)\b", re.IGNORECASE)
_INT_RE = re.compile(r"\b(\d+)\b")
_BECAUSE_RE = re.compile(r"\bbecause\b\s*(.*)", re.IGNORECASE | re.DOTALL)


def parse_action(
    text: str, agent_id: str, commodities: list[str]
) -> tuple[Order, str, str]:
    """Turn a model reply into (order, post_title, post_body).

    Accepts a JSON object (possibly fenced) or free text containing an action
    word, a known commodity and a quantity. Raises ParseFailure on junk.
    Feasibility is not checked here; the market validates orders against the
    portfolio and logs rejections.
    """
    raw = text.strip()
    if not raw:
        raise ParseFailure("empty completion", raw_text=text)
    fenced = _FENCE_RE.match(raw)
    candidate = fenced.group(1).strip() if fenced else raw

    side: str
    commodity = ""
    quantity = 0
    reasoning = ""
    post_title = ""
    post_body = ""

    parsed_json: dict | None = None
    if candidate.startswith("{"):
        try:
            loaded = json.loads(candidate)
            if isinstance(loaded, dict):
                parsed_json = loaded
        except json.JSONDecodeError:
            parsed_json = None

    if parsed_json is not None:
        action = str(parsed_json.get("action", "")).upper()
        if action not in ("BUY", "SELL", "HOLD"):
            raise ParseFailure(f"unknown action {action!r}", raw_text=text)
        side = action
        commodity = str(parsed_json.get("commodity", "") or "").upper()
        try:
            quantity = int(parsed_json.get("quantity", 0) or 0)
        except (TypeError, ValueError):
            raise ParseFailure("quantity is not an integer", raw_text=text)
        reasoning = str(parsed_json.get("reasoning", "") or "")
        post_title = str(parsed_json.get("post_title", "") or "")
        post_body = str(parsed_json.get("post_body", "") or "")
    else:
        action_match = _ACTION_RE.search(candidate)
        if not action_match:
            raise ParseFailure("no BUY/SELL/HOLD found", raw_text=text)
        side = action_match.group(1).upper()
        upper = candidate.upper()
        for c in sorted(commodities):
            if re.search(rf"\b{re.escape(c)}\b", upper):
                commodity = c
                break
        int_match = _INT_RE.search(candidate[action_match.end():])
        if int_match:
            quantity = int(int_match.group(1))
        because = _BECAUSE_RE.search(candidate)
        reasoning = because.group(1).strip() if because else candidate

    if side == "HOLD":
        order = Order(agent_id, "-", Side.HOLD, 0, reasoning or "holding")
        return order, post_title, post_body
    if commodity not in commodities:
        raise ParseFailure(f"unknown commodity {commodity!r}", raw_text=text)
    if quantity < 1:
        raise ParseFailure("trade quantity must be >= 1", raw_text=text)
    if quantity > MAX_ORDER_QUANTITY:
        raise ParseFailure("trade quantity is absurdly large", raw_text=text)
    order = Order(agent_id, commodity, Side(side), quantity, reasoning or f"{side} {commodity}")
    return order, post_title, post_body


def _entry(
    tick: int,
    agent_id: str,
    ph: str,
    prompt_version: str,
    status: str,
    response: str | None,
    detail: str = "",
) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "tick": tick,
        "agent_id": agent_id,
        "prompt_version": prompt_version,
        "prompt_hash": ph,
        "status": status,
        "response": response,
        "detail": detail,
    }


def consult(runtime: LlmRuntime, profile: AgentProfile, tick: int, prompt: str) -> dict:
    """Fetch or create the transcript entry for (tick, agent)."""
    ph = prompt_hash(prompt)
    entry = runtime.get(tick, profile.agent_id)
    if entry is not None:
        if (
            entry.get("prompt_version") == runtime.prompt_version
            and entry.get("prompt_hash") == ph
        ):
            return entry
        entry = None  # stale transcript counts as missing

    if runtime.mode == MODE_REPLAY:
        raise TranscriptMissing(
            f"no usable transcript for tick {tick} agent {profile.agent_id}"
        )
    if runtime.client is None:
        entry = _entry(tick, profile.agent_id, ph, runtime.prompt_version,
                       "unavailable", None, detail="no completion client configured")
    else:
        try:
            response = runtime.client.complete(prompt, dict(runtime.params))
            entry = _entry(tick, profile.agent_id, ph, runtime.prompt_version, "ok", response)
        except Exception as exc:  # client failure becomes a recorded fallback
            entry = _entry(tick, profile.agent_id, ph, runtime.prompt_version,
                           "unavailable", None, detail=str(exc))
    runtime.put(tick, profile.agent_id, entry)
    return entry


@dataclass(frozen=True)
class AdapterNote:
    """Fallback taken while deciding; surfaces on the TickRecord."""

    code: str   # adapter_unavailable | parse_failure
    detail: str


def llm_decide(
    runtime: LlmRuntime, profile: AgentProfile, obs: Observation
) -> tuple[Decision, AdapterNote | None]:
    """Decide via transcript or client, degrading to HOLD on any failure."""
    prompt = build_prompt(profile, obs)
    entry = consult(runtime, profile, obs.tick, prompt)
    agent_id = profile.agent_id

    note: AdapterNote | None = None
    post_title = post_body = ""
    if entry["status"] != "ok" or entry["response"] is None:
        note = AdapterNote("adapter_unavailable", entry.get("detail", ""))
        order = Order(agent_id, "-", Side.HOLD, 0, "adapter unavailable")
    else:
        try:
            order, post_title, post_body = parse_action(
                entry["response"], agent_id, obs.commodities()
            )
        except ParseFailure as exc:
            note = AdapterNote("parse_failure", exc.raw_text)
            order = Order(agent_id, "-", Side.HOLD, 0, "adapter unavailable")

    if order.side == Side.BUY:
        view = ONE
    elif order.side == Side.SELL:
        view = NEG_ONE
    else:
        view = ZERO

    post: PostDraft | None = None
    if post_title:
        if order.side != Side.HOLD:
            referenced = tuple(sorted(
                inst.event.event_id for inst in obs.active_events
                if order.commodity in inst.event.impacts
            ))
        else:
            referenced = tuple(sorted(
                inst.event.event_id for inst in obs.active_events
            ))
        post = PostDraft(
            title=post_title,
            body=post_body,
            sentiment=view,
            referenced_event_ids=referenced,
        )

    commodity = order.commodity if order.side != Side.HOLD else ""
    return Decision(order=order, post=post, view=view, commodity=commodity), note
