import random
from decimal import Decimal

from hypothesis import given, settings
from hypothesis import strategies as st

from branchsim.engine.market import (
    audit_settlement,
    clear_market,
    compute_sentiment,
    event_drift,
    event_sentiment_term,
    feed_sentiment_term,
    max_affordable,
    next_price,
    settle,
    validate_orders,
)
from branchsim.engine.types import (
    MARKET_MAKER,
    EventInstance,
    Order,
    Portfolio,
    Post,
    Side,
    WorldEvent,
)
from branchsim.fixed import CTX, money

GAIN = Decimal("0.02")
LAMBDA = Decimal("0.05")
MIN_PRICE = Decimal("0.0001")


def _event(impacts, start=0, duration=8, half_life=4, eid="evt-a"):
    return WorldEvent(
        event_id=eid, title="t", body="", impacts=impacts,
        start_tick=start, duration_ticks=duration, half_life_ticks=half_life,
    )


class TestDrift:
    def test_fresh_event_oracle(self):
        # impact 0.5 * gain 0.02 * 2^0 = 0.01
        inst = EventInstance(_event({"OIL": Decimal("0.5")}), elapsed=0)
        assert event_drift("OIL", [inst], GAIN) == Decimal("0.01")

    def test_one_half_life_halves(self):
        inst = EventInstance(_event({"OIL": Decimal("0.5")}), elapsed=4)
        assert event_drift("OIL", [inst], GAIN) == Decimal("0.005")

    def test_two_events_add(self):
        a = EventInstance(_event({"OIL": Decimal("0.5")}, eid="evt-a"), 0)
        b = EventInstance(_event({"OIL": Decimal("-0.25")}, eid="evt-b"), 0)
        assert event_drift("OIL", [a, b], GAIN) == Decimal("0.005")

    def test_unrelated_commodity_untouched(self):
        inst = EventInstance(_event({"OIL": Decimal("0.5")}), 0)
        assert event_drift("GOLD", [inst], GAIN) == 0

    def test_positive_under_deep_decay(self):
        # The drift sum is not re-quantized, so a tiny impact times a deeply
        # decayed factor stays strictly positive as long as the 12-digit
        # decay factor itself is nonzero (elapsed/half_life < ~41).
        inst = EventInstance(
            _event({"OIL": Decimal("0.000001")}, duration=40, half_life=1), elapsed=39
        )
        assert event_drift("OIL", [inst], GAIN) > 0

    def test_decay_saturates_to_zero_past_quantum(self):
        inst = EventInstance(
            _event({"OIL": Decimal("1")}, duration=60, half_life=1), elapsed=59
        )
        assert event_drift("OIL", [inst], GAIN) == 0


class TestPriceUpdate:
    def test_drift_only_oracle(self):
        # 80 * (1 + 0.005) = 80.4 exactly
        got = next_price(Decimal("80.0000"), Decimal("0.005"), 0, 100, LAMBDA, MIN_PRICE)
        assert got == Decimal("80.4000")

    def test_demand_only_oracle(self):
        # 80 * (1 + 0.05 * 10/100) = 80.4 exactly
        got = next_price(Decimal("80.0000"), Decimal(0), 10, 100, LAMBDA, MIN_PRICE)
        assert got == Decimal("80.4000")

    def test_negative_demand_pushes_down(self):
        got = next_price(Decimal("80.0000"), Decimal(0), -10, 100, LAMBDA, MIN_PRICE)
        assert got == Decimal("79.6000")

    def test_floor_clamp(self):
        got = next_price(Decimal("0.0100"), Decimal("-0.999"), -50, 100, LAMBDA, MIN_PRICE)
        assert got == money(MIN_PRICE)

    def test_result_is_money_quantized(self):
        got = next_price(Decimal("6.5000"), Decimal("0.0123456"), 3, 1538, LAMBDA, MIN_PRICE)
        assert got.as_tuple().exponent == -4


class TestSentiment:
    def test_event_term_has_no_gain(self):
        inst = EventInstance(_event({"OIL": Decimal("0.5")}), elapsed=4)
        assert event_sentiment_term("OIL", [inst]) == Decimal("0.25")

    def test_feed_term_is_mean_of_referencing_posts(self):
        event = _event({"OIL": Decimal("0.5")})
        posts = [
            Post("p1", 1, "a", "", "", Decimal("1.000000"), ("evt-a",)),
            Post("p2", 1, "b", "", "", Decimal("-0.500000"), ("evt-a",)),
            Post("p3", 1, "c", "", "", Decimal("1.000000"), ("evt-other",)),
        ]
        got = feed_sentiment_term("OIL", posts, {"evt-a": event})
        assert got == Decimal("0.25")

    def test_blend_oracle(self):
        # (1 - 0.3)*0.5 + 0.3*1.0 = 0.65
        event = _event({"OIL": Decimal("0.5")})
        inst = EventInstance(event, 0)
        posts = [Post("p1", 1, "a", "", "", Decimal("1.000000"), ("evt-a",))]
        got = compute_sentiment("OIL", [inst], posts, {"evt-a": event}, Decimal("0.3"))
        assert got == Decimal("0.65")

    def test_clamped_to_unit_interval(self):
        insts = [
            EventInstance(_event({"OIL": Decimal("1")}, eid=f"evt-{i}"), 0)
            for i in range(3)
        ]
        got = compute_sentiment("OIL", insts, [], {}, Decimal("0.3"))
        assert got == Decimal(1)

    def test_no_events_no_sentiment(self):
        assert compute_sentiment("OIL", [], [], {}, Decimal("0.3")) == 0


class TestValidation:
    def test_affordability_floor(self):
        assert max_affordable(Decimal("100.0000"), Decimal("33.3333")) == 3
        assert max_affordable(Decimal("99.9999"), Decimal("100.0000")) == 0
        assert max_affordable(Decimal("10.0000"), Decimal(0)) == 0

    def test_rejections(self):
        portfolios = {"a": Portfolio("a", Decimal("100.0000"), {"OIL": 2})}
        prices = {"OIL": Decimal("80.0000")}
        orders = [
            Order("a", "OIL", Side.BUY, 2, "too big"),
            Order("a", "OIL", Side.SELL, 3, "not held"),
            Order("ghost", "OIL", Side.BUY, 1, "who"),
            Order("a", "COCOA", Side.BUY, 1, "what"),
            Order("a", "-", Side.HOLD, 0, "sit"),
            Order("a", "OIL", Side.BUY, 1, "fine"),
        ]
        accepted, rejected = validate_orders(orders, portfolios, prices)
        assert [o.reasoning for o in accepted] == ["fine"]
        assert [r.reason for r in rejected] == [
            "insufficient cash",
            "insufficient holdings",
            "unknown agent",
            "unknown commodity",
        ]


class TestClearing:
    def test_two_pointer_matching(self):
        prices = {"OIL": Decimal("80.0000")}
        orders = [
            Order("buyer-b", "OIL", Side.BUY, 2, "b2"),
            Order("buyer-a", "OIL", Side.BUY, 3, "b1"),
            Order("seller-z", "OIL", Side.SELL, 4, "s1"),
        ]
        trades, net_demand = clear_market(orders, prices, record_tick=5)
        assert net_demand == {"OIL": 1}
        assert [t.trade_id for t in trades] == [
            "trade-000005-0000", "trade-000005-0001", "trade-000005-0002",
        ]
        # agent-id order: buyer-a fills first, then buyer-b; residual buy
        # volume goes to the maker.
        assert [(t.buyer_id, t.seller_id, t.quantity) for t in trades] == [
            ("buyer-a", "seller-z", 3),
            ("buyer-b", "seller-z", 1),
            ("buyer-b", MARKET_MAKER, 1),
        ]
        assert all(t.price == Decimal("80.0000") for t in trades)
        assert all(t.tick == 5 for t in trades)

    def test_all_hold_clears_nothing(self):
        trades, net_demand = clear_market([], {"OIL": Decimal("80.0000")}, 1)
        assert trades == [] and net_demand == {}

    def test_settle_books_both_legs(self):
        portfolios = {
            "buyer-a": Portfolio("buyer-a", Decimal("1000.0000"), {}),
            "seller-z": Portfolio("seller-z", Decimal("0.0000"), {"OIL": 5}),
        }
        orders = [
            Order("buyer-a", "OIL", Side.BUY, 3, ""),
            Order("seller-z", "OIL", Side.SELL, 5, ""),
        ]
        trades, _ = clear_market(orders, {"OIL": Decimal("80.0000")}, 1)
        after = settle(portfolios, trades)
        assert after["buyer-a"].cash == Decimal("760.0000")
        assert after["buyer-a"].holdings["OIL"] == 3
        # seller moved 5 units total: 3 to the buyer, 2 to the maker
        assert after["seller-z"].cash == Decimal("400.0000")
        assert after["seller-z"].holdings["OIL"] == 0
        assert portfolios["buyer-a"].cash == Decimal("1000.0000")
        assert audit_settlement(portfolios, after, trades) == []


def _conservation_round(rng: random.Random) -> None:
    commodities = ["OIL", "GOLD", "WHEAT"][: rng.randint(1, 3)]
    prices = {c: money(Decimal(rng.randint(1, 2000))) for c in commodities}
    portfolios = {}
    orders = []
    for i in range(rng.randint(2, 14)):
        agent = f"agent-{i:02d}"
        portfolios[agent] = Portfolio(
            agent,
            money(Decimal(rng.randint(0, 20000))),
            {c: rng.randint(0, 50) for c in commodities},
        )
        roll = rng.random()
        commodity = rng.choice(commodities)
        if roll < 0.4:
            orders.append(Order(agent, commodity, Side.BUY, rng.randint(1, 60), "b"))
        elif roll < 0.8:
            orders.append(Order(agent, commodity, Side.SELL, rng.randint(1, 60), "s"))

    accepted, rejected = validate_orders(orders, portfolios, prices)
    assert len(accepted) + len(rejected) == len(
        [o for o in orders if o.side != Side.HOLD]
    )
    trades, _ = clear_market(accepted, prices, record_tick=1)
    after = settle(portfolios, trades)
    assert audit_settlement(portfolios, after, trades) == []

    # Conservation: trader deltas mirror the maker's net flow exactly.
    maker_cash = Decimal(0)
    maker_units = {c: 0 for c in commodities}
    for t in trades:
        cost = money(CTX.multiply(t.price, Decimal(t.quantity)))
        if t.buyer_id == MARKET_MAKER:
            maker_cash -= cost
            maker_units[t.commodity] += t.quantity
        if t.seller_id == MARKET_MAKER:
            maker_cash += cost
            maker_units[t.commodity] -= t.quantity
    cash_delta = sum(after[a].cash - portfolios[a].cash for a in portfolios)
    assert cash_delta == -maker_cash
    for c in commodities:
        unit_delta = sum(
            after[a].holdings.get(c, 0) - portfolios[a].holdings.get(c, 0)
            for a in portfolios
        )
        assert unit_delta == -maker_units[c]


def test_conservation_randomized_books():
    rng = random.Random(20260814)
    for _ in range(300):
        _conservation_round(rng)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32))
def test_conservation_property(seed):
    _conservation_round(random.Random(seed))
