"""Pure market mechanics: event pressure, sentiment, clearing, settlement.

Everything here is a function of explicit arguments; no RNG, no IO. Prices
move by event drift plus a demand-imbalance term, orders clear at the
pre-update price with a market maker absorbing any one-sided residual, and
settlement is derived from the trade list alone so inventory and cash audits
can replay it.
"""

from __future__ import annotations

from decimal import Decimal

from ..fixed import CTX, clamp, decay_factor, money
from .types import (
    MARKET_MAKER,
    EventInstance,
    MarketConfig,
    Order,
    Portfolio,
    Post,
    RejectedOrder,
    Side,
    Trade,
    WorldEvent,
)

ONE = Decimal(1)


def event_drift(commodity: str, active: list[EventInstance], event_gain: Decimal) -> Decimal:
    """Sum of decayed, gain-scaled impacts on a commodity.

    Not quantized: tiny decayed tails must stay strictly nonzero until the
    event window closes; rounding happens once, in the price update.
    """
    total = Decimal(0)
    for inst in active:
        impact = inst.event.impacts.get(commodity)
        if impact is None:
            continue
        factor = decay_factor(inst.elapsed, inst.event.half_life_ticks)
        total = CTX.add(total, CTX.multiply(CTX.multiply(impact, event_gain), factor))
    return total


def event_sentiment_term(commodity: str, active: list[EventInstance]) -> Decimal:
    """Decayed impact sum without gain; raw per-commodity event mood."""
    total = Decimal(0)
    for inst in active:
        impact = inst.event.impacts.get(commodity)
        if impact is None:
            continue
        total = CTX.add(total, CTX.multiply(impact, decay_factor(inst.elapsed, inst.event.half_life_ticks)))
    return total


def feed_sentiment_term(
    commodity: str,
    posts: list[Post],
    events_by_id: dict[str, WorldEvent],
) -> Decimal:
    """Mean sentiment of recent posts referencing events that touch the commodity."""
    relevant: list[Decimal] = []
    for post in posts:
        for eid in post.referenced_event_ids:
            ev = events_by_id.get(eid)
            if ev is not None and commodity in ev.impacts:
                relevant.append(post.sentiment)
                break
    if not relevant:
        return Decimal(0)
    total = Decimal(0)
    for s in relevant:
        total = CTX.add(total, s)
    return CTX.divide(total, Decimal(len(relevant)))


def compute_sentiment(
    commodity: str,
    active: list[EventInstance],
    posts: list[Post],
    events_by_id: dict[str, WorldEvent],
    contagion: Decimal,
) -> Decimal:
    """Blend event mood with feed mood, clamped to [-1, +1]."""
    event_term = event_sentiment_term(commodity, active)
    feed_term = feed_sentiment_term(commodity, posts, events_by_id)
    blended = CTX.add(
        CTX.multiply(CTX.subtract(ONE, contagion), event_term),
        CTX.multiply(contagion, feed_term),
    )
    return clamp(blended, Decimal(-1), Decimal(1))


def next_price(
    price: Decimal,
    drift: Decimal,
    net_demand: int,
    liquidity: int,
    lambda_: Decimal,
    min_price: Decimal,
) -> Decimal:
    demand_term = CTX.multiply(lambda_, CTX.divide(Decimal(net_demand), Decimal(liquidity)))
    factor = CTX.add(ONE, CTX.add(drift, demand_term))
    updated = money(CTX.multiply(price, factor))
    if updated < min_price:
        return money(min_price)
    return updated


def max_affordable(cash: Decimal, price: Decimal) -> int:
    if price <= 0:
        return 0
    return int(CTX.divide_int(cash, price))


def validate_orders(
    orders: list[Order],
    portfolios: dict[str, Portfolio],
    prices: dict[str, Decimal],
) -> tuple[list[Order], list[RejectedOrder]]:
    """Screen orders against start-of-tick portfolios; one order per agent."""
    accepted: list[Order] = []
    rejected: list[RejectedOrder] = []
    for order in orders:
        if order.side == Side.HOLD:
            continue
        reason = None
        pf = portfolios.get(order.agent_id)
        price = prices.get(order.commodity)
        if pf is None:
            reason = "unknown agent"
        elif price is None:
            reason = "unknown commodity"
        elif order.side == Side.BUY and CTX.multiply(Decimal(order.quantity), price) > pf.cash:
            reason = "insufficient cash"
        elif order.side == Side.SELL and order.quantity > pf.holdings.get(order.commodity, 0):
            reason = "insufficient holdings"
        if reason is None:
            accepted.append(order)
        else:
            rejected.append(
                RejectedOrder(order.agent_id, order.commodity, order.side.value, order.quantity, reason)
            )
    return accepted, rejected


def clear_market(
    orders: list[Order],
    prices: dict[str, Decimal],
    record_tick: int,
) -> tuple[list[Trade], dict[str, int]]:
    """Match validated orders per commodity at the pre-update price.

    Buys and sells pair off in agent-id order; whatever volume is left on
    either side fills against the market maker. Returns the trades plus net
    demand per commodity (buys minus sells, market maker excluded).
    """
    trades: list[Trade] = []
    net_demand: dict[str, int] = {}
    seq = 0
    by_commodity: dict[str, list[Order]] = {}
    for order in orders:
        by_commodity.setdefault(order.commodity, []).append(order)

    for commodity in sorted(by_commodity):
        price = prices[commodity]
        buys = sorted(
            (o for o in by_commodity[commodity] if o.side == Side.BUY),
            key=lambda o: o.agent_id,
        )
        sells = sorted(
            (o for o in by_commodity[commodity] if o.side == Side.SELL),
            key=lambda o: o.agent_id,
        )
        net_demand[commodity] = sum(o.quantity for o in buys) - sum(o.quantity for o in sells)

        def emit(buyer: Order | None, seller: Order | None, qty: int) -> None:
            nonlocal seq
            trades.append(
                Trade(
                    trade_id=f"trade-{record_tick:06d}-{seq:04d}",
                    tick=record_tick,
                    commodity=commodity,
                    buyer_id=buyer.agent_id if buyer else MARKET_MAKER,
                    seller_id=seller.agent_id if seller else MARKET_MAKER,
                    price=price,
                    quantity=qty,
                    buyer_reasoning=buyer.reasoning if buyer else "",
                    seller_reasoning=seller.reasoning if seller else "",
                )
            )
            seq += 1

        bi = si = 0
        brem = buys[0].quantity if buys else 0
        srem = sells[0].quantity if sells else 0
        while bi < len(buys) and si < len(sells):
            qty = min(brem, srem)
            emit(buys[bi], sells[si], qty)
            brem -= qty
            srem -= qty
            if brem == 0:
                bi += 1
                brem = buys[bi].quantity if bi < len(buys) else 0
            if srem == 0:
                si += 1
                srem = sells[si].quantity if si < len(sells) else 0
        while bi < len(buys):
            emit(buys[bi], None, brem)
            bi += 1
            brem = buys[bi].quantity if bi < len(buys) else 0
        while si < len(sells):
            emit(None, sells[si], srem)
            si += 1
            srem = sells[si].quantity if si < len(sells) else 0

    return trades, net_demand


def settle(portfolios: dict[str, Portfolio], trades: list[Trade]) -> dict[str, Portfolio]:
    """Apply trades to copies of the portfolios; the market maker is unbooked."""
    settled = {a: p.copy() for a, p in portfolios.items()}
    for t in trades:
        cost = money(CTX.multiply(t.price, Decimal(t.quantity)))
        if t.buyer_id != MARKET_MAKER:
            pf = settled[t.buyer_id]
            pf.cash = money(CTX.subtract(pf.cash, cost))
            pf.holdings[t.commodity] = pf.holdings.get(t.commodity, 0) + t.quantity
        if t.seller_id != MARKET_MAKER:
            pf = settled[t.seller_id]
            pf.cash = money(CTX.add(pf.cash, cost))
            pf.holdings[t.commodity] = pf.holdings.get(t.commodity, 0) - t.quantity
    return settled


def audit_settlement(
    before: dict[str, Portfolio],
    after: dict[str, Portfolio],
    trades: list[Trade],
) -> list[str]:
    """Cross-check that portfolio deltas equal the trade ledger. Returns problems."""
    problems: list[str] = []
    expected = settle(before, trades)
    for agent_id in sorted(before):
        exp, got = expected[agent_id], after[agent_id]
        if exp.cash != got.cash:
            problems.append(f"{agent_id}: cash {got.cash} != ledger {exp.cash}")
        for sym in sorted(set(exp.holdings) | set(got.holdings)):
            if exp.holdings.get(sym, 0) != got.holdings.get(sym, 0):
                problems.append(f"{agent_id}: {sym} holdings mismatch")
    for agent_id, pf in after.items():
        if pf.cash < 0:
            problems.append(f"{agent_id}: negative cash")
        for sym, qty in pf.holdings.items():
            if qty < 0:
                problems.append(f"{agent_id}: negative {sym} holdings")
    return problems
