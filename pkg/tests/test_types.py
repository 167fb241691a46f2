from decimal import Decimal

import pytest

from branchsim.engine.step import genesis_record, genesis_state
from branchsim.engine.types import (
    MarketConfig,
    Order,
    Portfolio,
    Post,
    RejectedOrder,
    Side,
    TickRecord,
    Trade,
    WorldEvent,
    WorldState,
    initial_price,
    validate_commodity,
)
from branchsim.scenario import default_scenario


def _event(**overrides):
    base = dict(
        event_id="evt-abc", title="Storm", body="", impacts={"OIL": Decimal("0.5")},
        start_tick=3, duration_ticks=4, half_life_ticks=2,
    )
    base.update(overrides)
    return WorldEvent(**base)


class TestWorldEvent:
    def test_round_trip(self):
        event = _event(impacts={"OIL": Decimal("0.5"), "GOLD": Decimal("-0.25")})
        assert WorldEvent.from_dict(event.to_dict()).to_dict() == event.to_dict()

    def test_active_window_is_half_open(self):
        event = _event(start_tick=3, duration_ticks=4)
        assert not event.active_at(2)
        assert event.active_at(3)
        assert event.active_at(6)
        assert not event.active_at(7)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"event_id": ""},
            {"impacts": {}},
            {"impacts": {"OIL": Decimal("1.5")}},
            {"start_tick": -1},
            {"duration_ticks": 0},
            {"half_life_ticks": 0},
        ],
    )
    def test_validate_rejects(self, overrides):
        with pytest.raises(ValueError):
            _event(**overrides).validate()

    def test_validate_accepts_boundary_impact(self):
        _event(impacts={"OIL": Decimal("-1")}).validate()


class TestOrder:
    def test_hold_means_zero_quantity(self):
        Order("a", "-", Side.HOLD, 0, "waiting")
        with pytest.raises(ValueError):
            Order("a", "OIL", Side.BUY, 0, "zero buy")
        with pytest.raises(ValueError):
            Order("a", "OIL", Side.HOLD, 3, "holding three")
        with pytest.raises(ValueError):
            Order("a", "OIL", Side.SELL, -1, "negative")


class TestRoundTrips:
    def test_trade(self):
        trade = Trade("trade-000004-0001", 4, "OIL", "a", "b",
                      Decimal("80.0000"), 3, "buying", "selling")
        assert Trade.from_dict(trade.to_dict()) == trade

    def test_post(self):
        post = Post("post-000004-a", 4, "a", "a on OIL", "up", Decimal("1.000000"),
                    ("evt-1", "evt-2"))
        assert Post.from_dict(post.to_dict()) == post

    def test_portfolio(self):
        pf = Portfolio("a", Decimal("100.0000"), {"OIL": 5})
        assert Portfolio.from_dict(pf.to_dict()).to_dict() == pf.to_dict()
        clone = pf.copy()
        clone.holdings["OIL"] = 9
        assert pf.holdings["OIL"] == 5

    def test_rejected_order(self):
        r = RejectedOrder("a", "OIL", "BUY", 4, "insufficient cash")
        assert RejectedOrder.from_dict(r.to_dict()) == r

    def test_market_config(self):
        config = MarketConfig(liquidity={"OIL": 125})
        assert MarketConfig.from_dict(config.to_dict()) == config
        assert config.liquidity_for("OIL") == 125
        assert config.liquidity_for("GOLD") == 100

    def test_world_state_and_record(self):
        scenario = default_scenario("t", seed=3)
        state = genesis_state(list(scenario.profiles), scenario.initial_prices, [])
        again = WorldState.from_dict(state.to_dict())
        assert again.to_dict() == state.to_dict()

        record = genesis_record(state)
        assert TickRecord.from_dict(record.to_dict()).to_dict() == record.to_dict()
        assert record.to_dict()["post_count"] == 0
        assert record.to_dict()["trade_count"] == 0


class TestWorldState:
    def test_recent_posts_window(self):
        scenario = default_scenario("t", seed=3)
        state = genesis_state(list(scenario.profiles), scenario.initial_prices, [])
        state.tick = 10
        state.feed = [
            Post(f"post-{t:06d}-x", t, "x", "", "", Decimal("1.000000"), ())
            for t in (4, 5, 6, 10)
        ]
        recent = state.recent_posts(5)
        assert [p.tick for p in recent] == [6, 10]

    def test_copy_is_deep_enough(self):
        scenario = default_scenario("t", seed=3)
        state = genesis_state(list(scenario.profiles), scenario.initial_prices, [])
        clone = state.copy()
        clone.prices["OIL"] = Decimal("1.0000")
        clone.portfolios["trader-01"].cash = Decimal("0.0000")
        clone.price_history["OIL"].append(Decimal("2.0000"))
        assert state.prices["OIL"] == Decimal("80.0000")
        assert state.portfolios["trader-01"].cash > 0
        assert len(state.price_history["OIL"]) == 1


class TestValidators:
    def test_commodity_rules(self):
        validate_commodity("OIL")
        validate_commodity("X2")
        for bad in ("", "oil", "CRUDE-OIL", "A" * 13, "WTI CRUDE"):
            with pytest.raises(ValueError):
                validate_commodity(bad)

    def test_initial_price(self):
        assert str(initial_price("80")) == "80.0000"
        for bad in ("0", "-5"):
            with pytest.raises(ValueError):
                initial_price(bad)
