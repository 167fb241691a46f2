"""Agent profiles and the default roster.

A profile is static configuration: it never changes during a run and is part
of the scenario, so two branches of one simulation always share rosters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from ..fixed import money, rate


class Strategy(str, Enum):
    MOMENTUM = "MOMENTUM"
    CONTRARIAN = "CONTRARIAN"
    FUNDAMENTALIST = "FUNDAMENTALIST"
    EVENT_FOLLOWER = "EVENT_FOLLOWER"
    NOISE = "NOISE"
    LLM = "LLM"


@dataclass(frozen=True)
class AgentProfile:
    """Static trader configuration.

    ``threshold`` is the strategy's signal cutoff; for NOISE it is the
    per-tick probability of trading at all. ``anchors`` only matters to
    FUNDAMENTALIST profiles and maps commodity to perceived fair value.
    """

    agent_id: str
    display_name: str
    strategy: Strategy
    aggressiveness: Decimal        # fraction of capacity committed per trade
    post_propensity: Decimal       # chance of posting, scaled by conviction
    lookback: int                  # ticks of history behind return signals
    threshold: Decimal
    anchors: dict[str, Decimal] = field(default_factory=dict)
    initial_cash: Decimal = Decimal("10000.0000")
    initial_holdings: dict[str, int] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.agent_id:
            raise ValueError("agent_id must be nonempty")
        if not (0 < self.aggressiveness <= 1):
            raise ValueError("aggressiveness must be in (0, 1]")
        if not (0 <= self.post_propensity <= 1):
            raise ValueError("post_propensity must be in [0, 1]")
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if self.initial_cash < 0:
            raise ValueError("initial_cash must be >= 0")
        for sym, qty in self.initial_holdings.items():
            if qty < 0:
                raise ValueError(f"initial holdings for {sym} must be >= 0")

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "display_name": self.display_name,
            "strategy": self.strategy.value,
            "aggressiveness": str(self.aggressiveness),
            "post_propensity": str(self.post_propensity),
            "lookback": self.lookback,
            "threshold": str(self.threshold),
            "anchors": {c: str(self.anchors[c]) for c in sorted(self.anchors)},
            "initial_cash": str(self.initial_cash),
            "initial_holdings": {
                c: self.initial_holdings[c] for c in sorted(self.initial_holdings)
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AgentProfile":
        return cls(
            agent_id=d["agent_id"],
            display_name=d["display_name"],
            strategy=Strategy(d["strategy"]),
            aggressiveness=Decimal(d["aggressiveness"]),
            post_propensity=Decimal(d["post_propensity"]),
            lookback=int(d["lookback"]),
            threshold=Decimal(d["threshold"]),
            anchors={c: Decimal(v) for c, v in d.get("anchors", {}).items()},
            initial_cash=Decimal(d["initial_cash"]),
            initial_holdings={c: int(v) for c, v in d.get("initial_holdings", {}).items()},
        )


def _holdings(initial_prices: dict[str, Decimal], budget: str) -> dict[str, int]:
    # Spend roughly `budget` of value on each commodity at its starting price.
    return {
        c: int(Decimal(budget) // initial_prices[c])
        for c in sorted(initial_prices)
        if Decimal(budget) >= initial_prices[c]
    }


def _profile(
    idx: int,
    name: str,
    strategy: Strategy,
    aggressiveness: str,
    post_propensity: str,
    lookback: int,
    threshold: str,
    cash: str,
    holdings: dict[str, int],
    anchors: dict[str, Decimal] | None = None,
) -> AgentProfile:
    return AgentProfile(
        agent_id=f"trader-{idx:02d}",
        display_name=name,
        strategy=strategy,
        aggressiveness=rate(aggressiveness),
        post_propensity=rate(post_propensity),
        lookback=lookback,
        threshold=rate(threshold),
        anchors=anchors or {},
        initial_cash=money(cash),
        initial_holdings=holdings,
    )


def default_roster(initial_prices: dict[str, Decimal]) -> list[AgentProfile]:
    """Fourteen traders with mixed styles, sized to the scenario's commodities.

    Fundamentalists anchor on the scenario's initial prices, so a calm market
    with no events stays near its starting levels.
    """
    anchors = {c: money(p) for c, p in initial_prices.items()}
    h = lambda budget: _holdings(initial_prices, budget)  # noqa: E731
    return [
        _profile(1, "Mara Voss", Strategy.MOMENTUM, "0.20", "0.60", 3, "0.02",
                 "12000.00", h("3200")),
        _profile(2, "Deniz Acar", Strategy.MOMENTUM, "0.15", "0.40", 5, "0.025",
                 "9000.00", h("2000")),
        _profile(3, "Priya Nair", Strategy.MOMENTUM, "0.25", "0.50", 2, "0.018",
                 "15000.00", h("4800")),
        _profile(4, "Jonas Lindqvist", Strategy.CONTRARIAN, "0.12", "0.50", 3, "0.03",
                 "11000.00", h("2400")),
        _profile(5, "Amara Diallo", Strategy.CONTRARIAN, "0.15", "0.30", 4, "0.035",
                 "8000.00", h("3600")),
        _profile(6, "Tomasz Zielinski", Strategy.CONTRARIAN, "0.08", "0.70", 6, "0.04",
                 "13000.00", h("1600")),
        _profile(7, "Ines Moreau", Strategy.FUNDAMENTALIST, "0.12", "0.40", 1, "0.05",
                 "14000.00", h("4000"), anchors),
        _profile(8, "Hiroshi Tanaka", Strategy.FUNDAMENTALIST, "0.10", "0.60", 1, "0.06",
                 "10000.00", h("2800"), anchors),
        _profile(9, "Lucia Ferraro", Strategy.FUNDAMENTALIST, "0.15", "0.20", 1, "0.04",
                 "16000.00", h("4400"), anchors),
        _profile(10, "Sam Okafor", Strategy.EVENT_FOLLOWER, "0.50", "0.80", 1, "0.05",
                 "9500.00", h("2400")),
        _profile(11, "Greta Husaby", Strategy.EVENT_FOLLOWER, "0.35", "0.75", 1, "0.10",
                 "12500.00", h("3400")),
        _profile(12, "Omar Haddad", Strategy.EVENT_FOLLOWER, "0.25", "0.65", 1, "0.08",
                 "7000.00", h("1200")),
        _profile(13, "Nina Petrova", Strategy.NOISE, "0.15", "0.25", 1, "0.30",
                 "8500.00", h("1800")),
        _profile(14, "Felix Braun", Strategy.NOISE, "0.08", "0.50", 1, "0.50",
                 "10500.00", h("1400")),
    ]
