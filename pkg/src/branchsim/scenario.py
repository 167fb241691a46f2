"""Scenario definitions: commodities, roster, market knobs, seed.

A scenario is immutable once a simulation is created; every branch of the
simulation shares it. Events are not part of the scenario, they live in each
branch's event log.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .agents.llm import PROMPT_VERSION
from .agents.profiles import AgentProfile, default_roster
from .engine.types import FORMAT_VERSION, MarketConfig, WorldEvent, initial_price, validate_commodity
from .errors import InvalidConfig
from .fixed import rate

MAX_SEED = 2**64 - 1

DEFAULT_PRICES = {"OIL": "80.0000", "GOLD": "1900.0000", "WHEAT": "6.5000"}


@dataclass(frozen=True)
class Scenario:
    sim_id: str
    name: str
    seed: int
    initial_prices: dict[str, Decimal]
    profiles: tuple[AgentProfile, ...]
    config: MarketConfig = field(default_factory=MarketConfig)
    prompt_version: str = PROMPT_VERSION

    def validate(self) -> None:
        problems: list[tuple[str, str]] = []
        if not self.sim_id:
            problems.append(("sim_id", "must be nonempty"))
        if not (0 <= self.seed <= MAX_SEED):
            problems.append(("seed", f"must be in [0, {MAX_SEED}]"))
        if not self.initial_prices:
            problems.append(("initial_prices", "at least one commodity required"))
        for sym, price in self.initial_prices.items():
            try:
                validate_commodity(sym)
                initial_price(price)
            except (ValueError, InvalidOperation) as exc:
                problems.append((f"initial_prices.{sym}", str(exc)))
        if not self.profiles:
            problems.append(("profiles", "at least one agent required"))
        seen: set[str] = set()
        for p in self.profiles:
            if p.agent_id in seen:
                problems.append((f"profiles.{p.agent_id}", "duplicate agent_id"))
            seen.add(p.agent_id)
            try:
                p.validate()
            except ValueError as exc:
                problems.append((f"profiles.{p.agent_id}", str(exc)))
            if p.lookback + 1 > self.config.history_window:
                problems.append(
                    (f"profiles.{p.agent_id}",
                     f"lookback {p.lookback} needs more history than window {self.config.history_window}")
                )
        if self.config.feed_window < 1:
            problems.append(("config.feed_window", "must be >= 1"))
        if self.config.checkpoint_interval < 1:
            problems.append(("config.checkpoint_interval", "must be >= 1"))
        if self.config.history_window < 2:
            problems.append(("config.history_window", "must be >= 2"))
        if not (0 <= self.config.contagion <= 1):
            problems.append(("config.contagion", "must be in [0, 1]"))
        if self.config.min_price <= 0:
            problems.append(("config.min_price", "must be positive"))
        if problems:
            raise InvalidConfig("invalid scenario", problems=problems)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "sim_id": self.sim_id,
            "name": self.name,
            "seed": self.seed,
            "initial_prices": {
                c: str(initial_price(p)) for c, p in sorted(self.initial_prices.items())
            },
            "profiles": [p.to_dict() for p in self.profiles],
            "config": self.config.to_dict(),
            "prompt_version": self.prompt_version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(
            sim_id=d["sim_id"],
            name=d["name"],
            seed=int(d["seed"]),
            initial_prices={c: Decimal(p) for c, p in d["initial_prices"].items()},
            profiles=tuple(AgentProfile.from_dict(p) for p in d["profiles"]),
            config=MarketConfig.from_dict(d["config"]),
            prompt_version=d.get("prompt_version", PROMPT_VERSION),
        )


def default_liquidity(initial_prices: dict[str, Decimal]) -> dict[str, int]:
    """Depth per commodity balanced by value, floored at the generic 100.

    Cheap commodities trade in large unit quantities; flat unit depth would
    let one order move such a market violently, so depth scales inversely
    with price toward roughly equal notional depth.
    """
    return {
        c: max(100, int(Decimal(10000) // initial_price(p)))
        for c, p in initial_prices.items()
    }


def default_scenario(sim_id: str, seed: int, name: str = "default market") -> Scenario:
    prices = {c: initial_price(p) for c, p in DEFAULT_PRICES.items()}
    scenario = Scenario(
        sim_id=sim_id,
        name=name,
        seed=seed,
        initial_prices=prices,
        profiles=tuple(default_roster(prices)),
        config=MarketConfig(liquidity=default_liquidity(prices)),
    )
    scenario.validate()
    return scenario


def make_event_id(
    title: str,
    body: str,
    start_tick: int,
    duration_ticks: int,
    half_life_ticks: int,
    impacts: dict[str, Decimal],
) -> str:
    """Content-derived id so identical injections on two branches share ids."""
    parts = [title, body, str(start_tick), str(duration_ticks), str(half_life_ticks)]
    for c in sorted(impacts):
        parts.append(f"{c}={rate(impacts[c])}")
    digest = hashlib.blake2b("|".join(parts).encode("utf-8"), digest_size=6).hexdigest()
    return f"evt-{digest}"


def build_event(
    title: str,
    impacts: dict[str, Decimal | str],
    start_tick: int,
    duration_ticks: int,
    half_life_ticks: int,
    body: str = "",
    event_id: str | None = None,
) -> WorldEvent:
    """Validated WorldEvent with a content-derived id unless one is given."""
    quantized = {c: rate(v) for c, v in impacts.items()}
    eid = event_id or make_event_id(
        title, body, start_tick, duration_ticks, half_life_ticks, quantized
    )
    event = WorldEvent(
        event_id=eid,
        title=title,
        body=body,
        impacts=quantized,
        start_tick=start_tick,
        duration_ticks=duration_ticks,
        half_life_ticks=half_life_ticks,
    )
    event.validate()
    return event
