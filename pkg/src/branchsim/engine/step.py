"""The tick transition.

State at tick t plus the branch event log, roster and seed produce the state
at t+1 and a TickRecord describing the transition. The pipeline order is
fixed: activate events, compute sentiment, collect decisions, clear the
market, update prices, append posts, hash. Events drive a transition when
they are in-window at the departed tick; the record's active_event_ids lists
exactly that driving set, and the genesis record at tick 0 lists none.
Agents decide in agent-id order from isolated RNG substreams, so the whole
transition is a pure function of (state, events, roster, seed, config) and
replays byte-for-byte.
"""

from __future__ import annotations

from decimal import Decimal

from ..agents.llm import LlmRuntime, llm_decide
from ..agents.policies import Decision, Observation, decide
from ..agents.profiles import AgentProfile, Strategy
from ..errors import InvariantViolation
from ..fixed import rate
from ..rng import SeededStream
from .hashing import state_hash
from .market import (
    clear_market,
    compute_sentiment,
    event_drift,
    next_price,
    settle,
    validate_orders,
)
from .types import (
    AdapterEvent,
    EventInstance,
    MarketConfig,
    Portfolio,
    Post,
    Side,
    TickRecord,
    WorldEvent,
    WorldState,
)


def active_instances(events: list[WorldEvent], tick: int) -> list[EventInstance]:
    return [
        EventInstance(ev, tick - ev.start_tick)
        for ev in sorted(events, key=lambda e: e.event_id)
        if ev.active_at(tick)
    ]


def genesis_state(
    profiles: list[AgentProfile],
    initial_prices: dict[str, Decimal],
    events: list[WorldEvent],
) -> WorldState:
    portfolios = {
        p.agent_id: Portfolio(
            agent_id=p.agent_id,
            cash=p.initial_cash,
            holdings={c: q for c, q in sorted(p.initial_holdings.items()) if c in initial_prices},
        )
        for p in profiles
    }
    return WorldState(
        tick=0,
        prices=dict(initial_prices),
        portfolios=portfolios,
        feed=[],
        pending_orders=[],
        active_events=active_instances(events, 0),
        price_history={c: [p] for c, p in initial_prices.items()},
    )


def genesis_record(state: WorldState) -> TickRecord:
    if state.tick != 0:
        raise InvariantViolation("genesis record requires a tick-0 state")
    return TickRecord(
        tick=0,
        prices=dict(state.prices),
        trades=(),
        posts=(),
        active_event_ids=(),
        rejected_orders=(),
        adapter_events=(),
        state_hash=state_hash(state),
    )


def advance_state(
    state: WorldState,
    events: list[WorldEvent],
    profiles: list[AgentProfile],
    config: MarketConfig,
    stream: SeededStream,
    llm_runtime: LlmRuntime | None = None,
) -> tuple[WorldState, TickRecord]:
    """Advance one tick; returns the new state and the record of the move."""
    t = state.tick
    record_tick = t + 1
    driving = active_instances(events, t)
    events_by_id = {e.event_id: e for e in events}
    recent = state.recent_posts(config.feed_window)
    sentiments = {
        c: compute_sentiment(c, driving, recent, events_by_id, config.contagion)
        for c in state.commodities()
    }

    decisions: list[Decision] = []
    posts: list[Post] = []
    adapter_events: list[AdapterEvent] = []
    for profile in sorted(profiles, key=lambda p: p.agent_id):
        obs = Observation(
            tick=t,
            prices=state.prices,
            price_history=state.price_history,
            portfolio=state.portfolios[profile.agent_id],
            sentiments=sentiments,
            active_events=driving,
            feed=recent,
        )
        if profile.strategy == Strategy.LLM:
            decision, note = llm_decide(llm_runtime or LlmRuntime(), profile, obs)
            if note is not None:
                adapter_events.append(AdapterEvent(profile.agent_id, note.code, note.detail))
        else:
            sub = stream.substream(t, profile.agent_id)
            decision = decide(profile, obs, sub)
        decisions.append(decision)
        if decision.post is not None:
            posts.append(Post(
                post_id=f"post-{record_tick:06d}-{profile.agent_id}",
                tick=record_tick,
                author_id=profile.agent_id,
                title=decision.post.title,
                body=decision.post.body,
                sentiment=rate(decision.post.sentiment),
                referenced_event_ids=decision.post.referenced_event_ids,
            ))

    orders = [d.order for d in decisions if d.order.side != Side.HOLD]
    accepted, rejected = validate_orders(orders, state.portfolios, state.prices)
    trades, net_demand = clear_market(accepted, state.prices, record_tick)
    portfolios = settle(state.portfolios, trades)
    for agent_id, pf in portfolios.items():
        if pf.cash < 0 or any(q < 0 for q in pf.holdings.values()):
            raise InvariantViolation(f"settlement drove {agent_id} negative")

    new_prices = {
        c: next_price(
            state.prices[c],
            event_drift(c, driving, config.event_gain),
            net_demand.get(c, 0),
            config.liquidity_for(c),
            config.lambda_,
            config.min_price,
        )
        for c in state.commodities()
    }

    feed = [p for p in state.feed if p.tick > record_tick - config.feed_window]
    feed.extend(posts)

    history = {}
    for c in state.commodities():
        series = state.price_history.get(c, [])[:]
        series.append(new_prices[c])
        history[c] = series[-config.history_window:]

    new_state = WorldState(
        tick=record_tick,
        prices=new_prices,
        portfolios=portfolios,
        feed=feed,
        pending_orders=[],
        active_events=active_instances(events, record_tick),
        price_history=history,
    )
    record = TickRecord(
        tick=record_tick,
        prices=dict(new_prices),
        trades=tuple(trades),
        posts=tuple(posts),
        active_event_ids=tuple(inst.event.event_id for inst in driving),
        rejected_orders=tuple(rejected),
        adapter_events=tuple(adapter_events),
        state_hash=state_hash(new_state),
    )
    return new_state, record
