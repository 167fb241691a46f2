"""Domain types for the market engine.

Ticks are discrete; all money is fixed-point Decimal (4 digits) and every
decimal stored on these types is already quantized, so ``str()`` of a field
is canonical. ``to_dict``/``from_dict`` round-trip each type through the
plain-JSON form used for hashing, persistence and the wire.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from ..fixed import money, rate

FORMAT_VERSION = 1

MARKET_MAKER = "MARKET_MAKER"

MAX_COMMODITY_LEN = 12


class Side(str, Enum):
    BUY = "BUY"
    SELL = "SELL"
    HOLD = "HOLD"


@dataclass(frozen=True)
class MarketConfig:
    """Engine knobs. Defaults are artifact choices, not observed facts."""

    lambda_: Decimal = Decimal("0.05")          # demand price impact
    liquidity: dict[str, int] = field(default_factory=dict)  # per commodity, default 100
    event_gain: Decimal = Decimal("0.02")
    contagion: Decimal = Decimal("0.3")         # feed weight in sentiment blend
    feed_window: int = 5
    checkpoint_interval: int = 10
    min_price: Decimal = Decimal("0.0001")
    history_window: int = 12                    # ticks of price history kept in state

    def liquidity_for(self, commodity: str) -> int:
        return self.liquidity.get(commodity, 100)

    def to_dict(self) -> dict:
        return {
            "lambda": str(self.lambda_),
            "liquidity": {c: self.liquidity[c] for c in sorted(self.liquidity)},
            "event_gain": str(self.event_gain),
            "contagion": str(self.contagion),
            "feed_window": self.feed_window,
            "checkpoint_interval": self.checkpoint_interval,
            "min_price": str(self.min_price),
            "history_window": self.history_window,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarketConfig":
        return cls(
            lambda_=Decimal(d["lambda"]),
            liquidity={c: int(v) for c, v in d.get("liquidity", {}).items()},
            event_gain=Decimal(d["event_gain"]),
            contagion=Decimal(d["contagion"]),
            feed_window=int(d["feed_window"]),
            checkpoint_interval=int(d["checkpoint_interval"]),
            min_price=Decimal(d["min_price"]),
            history_window=int(d.get("history_window", 12)),
        )


@dataclass(frozen=True)
class WorldEvent:
    """An injectable external event with per-commodity impact in [-1, +1]."""

    event_id: str
    title: str
    body: str
    impacts: dict[str, Decimal]
    start_tick: int
    duration_ticks: int
    half_life_ticks: int

    def validate(self) -> None:
        if not self.event_id:
            raise ValueError("event_id must be nonempty")
        if not self.impacts:
            raise ValueError("impacts must be nonempty")
        for sym, imp in self.impacts.items():
            if abs(imp) > 1:
                raise ValueError(f"impact magnitude for {sym} exceeds 1")
        if self.start_tick < 0:
            raise ValueError("start_tick must be >= 0")
        if self.duration_ticks < 1:
            raise ValueError("duration_ticks must be >= 1")
        if self.half_life_ticks < 1:
            raise ValueError("half_life_ticks must be >= 1")

    def active_at(self, tick: int) -> bool:
        return self.start_tick <= tick < self.start_tick + self.duration_ticks

    def to_dict(self) -> dict:
        return {
            "event_id": self.event_id,
            "title": self.title,
            "body": self.body,
            "impacts": {c: str(rate(v)) for c, v in sorted(self.impacts.items())},
            "start_tick": self.start_tick,
            "duration_ticks": self.duration_ticks,
            "half_life_ticks": self.half_life_ticks,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldEvent":
        return cls(
            event_id=d["event_id"],
            title=d["title"],
            body=d["body"],
            impacts={c: Decimal(v) for c, v in d["impacts"].items()},
            start_tick=int(d["start_tick"]),
            duration_ticks=int(d["duration_ticks"]),
            half_life_ticks=int(d["half_life_ticks"]),
        )


@dataclass(frozen=True)
class EventInstance:
    """A WorldEvent together with its age at the current tick."""

    event: WorldEvent
    elapsed: int


@dataclass(frozen=True)
class Order:
    agent_id: str
    commodity: str
    side: Side
    quantity: int
    reasoning: str

    def __post_init__(self):
        if (self.quantity == 0) != (self.side == Side.HOLD):
            raise ValueError("quantity is 0 iff side is HOLD")
        if self.quantity < 0:
            raise ValueError("quantity must be >= 0")


@dataclass(frozen=True)
class RejectedOrder:
    """An order that failed portfolio validation; kept in the tick ledger."""

    agent_id: str
    commodity: str
    side: str
    quantity: int
    reason: str

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "commodity": self.commodity,
            "side": self.side,
            "quantity": self.quantity,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RejectedOrder":
        return cls(d["agent_id"], d["commodity"], d["side"], int(d["quantity"]), d["reason"])


@dataclass(frozen=True)
class Trade:
    trade_id: str
    tick: int
    commodity: str
    buyer_id: str
    seller_id: str
    price: Decimal
    quantity: int
    buyer_reasoning: str
    seller_reasoning: str

    def to_dict(self) -> dict:
        return {
            "trade_id": self.trade_id,
            "tick": self.tick,
            "commodity": self.commodity,
            "buyer_id": self.buyer_id,
            "seller_id": self.seller_id,
            "price": str(self.price),
            "quantity": self.quantity,
            "buyer_reasoning": self.buyer_reasoning,
            "seller_reasoning": self.seller_reasoning,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trade":
        return cls(
            trade_id=d["trade_id"],
            tick=int(d["tick"]),
            commodity=d["commodity"],
            buyer_id=d["buyer_id"],
            seller_id=d["seller_id"],
            price=Decimal(d["price"]),
            quantity=int(d["quantity"]),
            buyer_reasoning=d["buyer_reasoning"],
            seller_reasoning=d["seller_reasoning"],
        )


@dataclass(frozen=True)
class Post:
    post_id: str
    tick: int
    author_id: str
    title: str
    body: str
    sentiment: Decimal
    referenced_event_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "tick": self.tick,
            "author_id": self.author_id,
            "title": self.title,
            "body": self.body,
            "sentiment": str(self.sentiment),
            "referenced_event_ids": list(self.referenced_event_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Post":
        return cls(
            post_id=d["post_id"],
            tick=int(d["tick"]),
            author_id=d["author_id"],
            title=d["title"],
            body=d["body"],
            sentiment=Decimal(d["sentiment"]),
            referenced_event_ids=tuple(d["referenced_event_ids"]),
        )


@dataclass
class Portfolio:
    agent_id: str
    cash: Decimal
    holdings: dict[str, int]

    def copy(self) -> "Portfolio":
        return Portfolio(self.agent_id, self.cash, dict(self.holdings))

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "cash": str(self.cash),
            "holdings": {c: self.holdings[c] for c in sorted(self.holdings)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Portfolio":
        return cls(
            agent_id=d["agent_id"],
            cash=Decimal(d["cash"]),
            holdings={c: int(v) for c, v in d["holdings"].items()},
        )


@dataclass
class WorldState:
    """Full simulation state at a tick.

    ``active_events`` is derived from the branch event log and the tick; it is
    carried for observers but excluded from the canonical hash so that a fork
    point and its freshly-injected sibling hash identically at the fork tick.
    ``price_history`` holds the last ``history_window`` ticks of prices
    (current tick last) so momentum lookbacks stay a pure function of state.
    """

    tick: int
    prices: dict[str, Decimal]
    portfolios: dict[str, Portfolio]
    feed: list[Post]
    pending_orders: list[Order]
    active_events: list[EventInstance]
    price_history: dict[str, list[Decimal]]

    def commodities(self) -> list[str]:
        return sorted(self.prices)

    def copy(self) -> "WorldState":
        return WorldState(
            tick=self.tick,
            prices=dict(self.prices),
            portfolios={a: p.copy() for a, p in self.portfolios.items()},
            feed=list(self.feed),
            pending_orders=list(self.pending_orders),
            active_events=list(self.active_events),
            price_history={c: list(h) for c, h in self.price_history.items()},
        )

    def recent_posts(self, window: int) -> list[Post]:
        cutoff = self.tick - window
        return [p for p in self.feed if p.tick > cutoff]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "tick": self.tick,
            "prices": {c: str(self.prices[c]) for c in sorted(self.prices)},
            "portfolios": {
                a: self.portfolios[a].to_dict() for a in sorted(self.portfolios)
            },
            "feed": [p.to_dict() for p in self.feed],
            "pending_orders": [
                {
                    "agent_id": o.agent_id,
                    "commodity": o.commodity,
                    "side": o.side.value,
                    "quantity": o.quantity,
                    "reasoning": o.reasoning,
                }
                for o in self.pending_orders
            ],
            "active_events": [
                {"event": inst.event.to_dict(), "elapsed": inst.elapsed}
                for inst in self.active_events
            ],
            "price_history": {
                c: [str(p) for p in self.price_history[c]]
                for c in sorted(self.price_history)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "WorldState":
        return cls(
            tick=int(d["tick"]),
            prices={c: Decimal(v) for c, v in d["prices"].items()},
            portfolios={a: Portfolio.from_dict(p) for a, p in d["portfolios"].items()},
            feed=[Post.from_dict(p) for p in d["feed"]],
            pending_orders=[
                Order(
                    agent_id=o["agent_id"],
                    commodity=o["commodity"],
                    side=Side(o["side"]),
                    quantity=int(o["quantity"]),
                    reasoning=o["reasoning"],
                )
                for o in d["pending_orders"]
            ],
            active_events=[
                EventInstance(WorldEvent.from_dict(e["event"]), int(e["elapsed"]))
                for e in d["active_events"]
            ],
            price_history={
                c: [Decimal(p) for p in hist]
                for c, hist in d["price_history"].items()
            },
        )


@dataclass(frozen=True)
class AdapterEvent:
    """LLM adapter fallback noted in the tick ledger."""

    agent_id: str
    code: str  # adapter_unavailable | parse_failure
    detail: str

    def to_dict(self) -> dict:
        return {"agent_id": self.agent_id, "code": self.code, "detail": self.detail}

    @classmethod
    def from_dict(cls, d: dict) -> "AdapterEvent":
        return cls(d["agent_id"], d["code"], d["detail"])


@dataclass(frozen=True)
class TickRecord:
    """Per-tick ledger for timelines and comparison.

    ``active_event_ids`` lists the events that drove the transition into this
    tick (those in-window at the departed tick); the genesis record at tick 0
    has none. ``state_hash`` digests the post-tick WorldState.
    """

    tick: int
    prices: dict[str, Decimal]
    trades: tuple[Trade, ...]
    posts: tuple[Post, ...]
    active_event_ids: tuple[str, ...]
    rejected_orders: tuple[RejectedOrder, ...]
    adapter_events: tuple[AdapterEvent, ...]
    state_hash: str

    @property
    def post_count(self) -> int:
        return len(self.posts)

    @property
    def trade_count(self) -> int:
        return len(self.trades)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "tick": self.tick,
            "prices": {c: str(self.prices[c]) for c in sorted(self.prices)},
            "trades": [t.to_dict() for t in self.trades],
            "posts": [p.to_dict() for p in self.posts],
            "active_event_ids": list(self.active_event_ids),
            "rejected_orders": [r.to_dict() for r in self.rejected_orders],
            "adapter_events": [a.to_dict() for a in self.adapter_events],
            "post_count": self.post_count,
            "trade_count": self.trade_count,
            "state_hash": self.state_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TickRecord":
        rec = cls(
            tick=int(d["tick"]),
            prices={c: Decimal(v) for c, v in d["prices"].items()},
            trades=tuple(Trade.from_dict(t) for t in d["trades"]),
            posts=tuple(Post.from_dict(p) for p in d["posts"]),
            active_event_ids=tuple(d["active_event_ids"]),
            rejected_orders=tuple(RejectedOrder.from_dict(r) for r in d["rejected_orders"]),
            adapter_events=tuple(AdapterEvent.from_dict(a) for a in d.get("adapter_events", [])),
            state_hash=d["state_hash"],
        )
        return rec


def validate_commodity(symbol: str) -> None:
    if not symbol or len(symbol) > MAX_COMMODITY_LEN:
        raise ValueError(f"commodity symbol must be 1..{MAX_COMMODITY_LEN} chars")
    if not symbol.isupper() or not symbol.isalnum():
        raise ValueError("commodity symbol must be uppercase alphanumeric")


def initial_price(value: Decimal | int | str) -> Decimal:
    p = money(value)
    if p <= 0:
        raise ValueError("price must be positive")
    return p
