"""Scripted trading policies.

Each agent produces one Decision per tick from an Observation (what it is
allowed to see at the start of the tick) plus its own RNG substream. A
decision is an order and an optional post draft. The draw order within a
substream is fixed (strategy draws first, then the post draw) so replays are
exact. Quantized decimals in, exact decimal arithmetic throughout, so the
same inputs always yield the same decision.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from ..engine.market import max_affordable
from ..engine.types import EventInstance, Order, Portfolio, Post, Side
from ..fixed import CTX, ceil_int, clamp
from ..rng import Substream
from .profiles import AgentProfile, Strategy

ONE = Decimal(1)
NEG_ONE = Decimal(-1)
ZERO = Decimal(0)


@dataclass(frozen=True)
class Observation:
    """Start-of-tick view handed to one agent. No lookahead, no peeking at
    other portfolios: decisions are a pure function of this plus the profile
    and substream."""

    tick: int
    prices: dict[str, Decimal]
    price_history: dict[str, list[Decimal]]   # trailing window, current last
    portfolio: Portfolio                      # the agent's own
    sentiments: dict[str, Decimal]
    active_events: list[EventInstance]
    feed: list[Post]                          # last feed_window ticks

    def commodities(self) -> list[str]:
        return sorted(self.prices)


@dataclass(frozen=True)
class PostDraft:
    title: str
    body: str
    sentiment: Decimal
    referenced_event_ids: tuple[str, ...]


@dataclass(frozen=True)
class Decision:
    order: Order
    post: PostDraft | None
    view: Decimal      # signed conviction; 0 when the agent has no opinion
    commodity: str     # what the view is about; "" when none


def _return_signal(obs: Observation, commodity: str, lookback: int) -> Decimal | None:
    history = obs.price_history.get(commodity, [])
    if len(history) < lookback + 1:
        return None
    past = history[-(lookback + 1)]
    if past == 0:
        return None
    return CTX.divide(CTX.subtract(history[-1], past), past)


def _strongest(signals: dict[str, Decimal]) -> tuple[str, Decimal]:
    return sorted(signals.items(), key=lambda kv: (-abs(kv[1]), kv[0]))[0]


def _view_from(signal: Decimal, threshold: Decimal) -> Decimal:
    if threshold == 0:
        return ONE if signal > 0 else NEG_ONE if signal < 0 else ZERO
    return clamp(CTX.divide(signal, threshold), NEG_ONE, ONE)


def _event_titles(commodity: str, active: list[EventInstance]) -> str:
    titles = sorted(inst.event.title for inst in active if commodity in inst.event.impacts)
    return "; ".join(titles)


@dataclass
class _Call:
    side: Side | None = None
    commodity: str = ""
    view: Decimal = ZERO
    reasoning: str = ""


def _policy_call(profile: AgentProfile, obs: Observation, stream: Substream) -> _Call:
    commodities = obs.commodities()

    if profile.strategy in (Strategy.MOMENTUM, Strategy.CONTRARIAN):
        signals = {}
        for c in commodities:
            sig = _return_signal(obs, c, profile.lookback)
            if sig is not None:
                signals[c] = sig
        if not signals:
            return _Call(reasoning=f"fewer than {profile.lookback + 1} ticks of history")
        c, sig = _strongest(signals)
        view = _view_from(sig, profile.threshold)
        if profile.strategy == Strategy.CONTRARIAN:
            view = -view
        if abs(sig) <= profile.threshold:
            return _Call(None, c, view,
                         f"{profile.lookback}-tick move on {c} is inside the threshold")
        if profile.strategy == Strategy.MOMENTUM:
            return _Call(Side.BUY if sig > 0 else Side.SELL, c, view,
                         f"riding the {profile.lookback}-tick move on {c}")
        return _Call(Side.SELL if sig > 0 else Side.BUY, c, view,
                     f"fading the {profile.lookback}-tick move on {c}")

    if profile.strategy == Strategy.FUNDAMENTALIST:
        signals = {}
        for c in commodities:
            anchor = profile.anchors.get(c)
            if anchor is None or anchor <= 0:
                continue
            # Positive when priced below anchor, i.e. a buy signal.
            signals[c] = CTX.divide(CTX.subtract(anchor, obs.prices[c]), anchor)
        if not signals:
            return _Call(reasoning="no anchored commodities")
        c, sig = _strongest(signals)
        view = _view_from(sig, profile.threshold)
        if abs(sig) <= profile.threshold:
            return _Call(None, c, view,
                         f"{c} at {obs.prices[c]} sits near anchor {profile.anchors[c]}")
        side = Side.BUY if sig > 0 else Side.SELL
        return _Call(side, c, view,
                     f"{c} trades at {obs.prices[c]} against anchor {profile.anchors[c]}")

    if profile.strategy == Strategy.EVENT_FOLLOWER:
        c, sig = _strongest({c: obs.sentiments.get(c, ZERO) for c in commodities})
        view = _view_from(sig, profile.threshold)
        if abs(sig) <= profile.threshold:
            return _Call(None, c, view, f"sentiment on {c} is too weak to act on")
        why = f"sentiment on {c} is strong"
        titles = _event_titles(c, obs.active_events)
        if titles:
            why += f", driven by: {titles}"
        return _Call(Side.BUY if sig > 0 else Side.SELL, c, view, why)

    if profile.strategy == Strategy.NOISE:
        if not stream.below(profile.threshold):
            return _Call(reasoning="sitting this tick out")
        c = stream.choice(commodities)
        side = stream.choice([Side.BUY, Side.SELL])
        return _Call(side, c, ONE if side == Side.BUY else NEG_ONE,
                     f"trading {c} on a whim")

    raise ValueError(f"no scripted policy for strategy {profile.strategy.value}")


def _sized_order(profile: AgentProfile, obs: Observation, call: _Call) -> Order:
    agent_id = profile.agent_id
    if call.side is None:
        return Order(agent_id, "-", Side.HOLD, 0, call.reasoning)
    if call.side == Side.BUY:
        base = max_affordable(obs.portfolio.cash, obs.prices[call.commodity])
    else:
        base = obs.portfolio.holdings.get(call.commodity, 0)
    quantity = ceil_int(CTX.multiply(profile.aggressiveness, Decimal(base)))
    if quantity < 1:
        return Order(agent_id, "-", Side.HOLD, 0,
                     f"wanted to {call.side.value} {call.commodity} but lacks capacity")
    return Order(agent_id, call.commodity, call.side, quantity, call.reasoning)


def draft_post(
    profile: AgentProfile,
    obs: Observation,
    view: Decimal,
    commodity: str,
    body: str,
    stream: Substream,
) -> PostDraft | None:
    """Post about the view with probability propensity * |sentiment(commodity)|.

    Must be drawn from the same substream as the decision, after it, so the
    draw sequence is stable. The draft's sentiment is the view's sign.
    """
    if not commodity or view == 0:
        return None
    weight = abs(obs.sentiments.get(commodity, ZERO))
    if weight == 0:
        return None
    if not stream.below(CTX.multiply(profile.post_propensity, weight)):
        return None
    referenced = tuple(sorted(
        inst.event.event_id for inst in obs.active_events
        if commodity in inst.event.impacts
    ))
    return PostDraft(
        title=f"{profile.display_name} on {commodity}",
        body=body,
        sentiment=ONE if view > 0 else NEG_ONE,
        referenced_event_ids=referenced,
    )


def decide(profile: AgentProfile, obs: Observation, stream: Substream) -> Decision:
    """Run one scripted agent. LLM agents are decided by the adapter, not here."""
    call = _policy_call(profile, obs, stream)
    order = _sized_order(profile, obs, call)
    post = draft_post(profile, obs, call.view, call.commodity, call.reasoning, stream)
    return Decision(order=order, post=post, view=call.view, commodity=call.commodity)
