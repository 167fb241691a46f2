"""Request and response shapes for the HTTP service.

Requests are validated pydantic models that convert themselves into core
objects. Responses are thin envelopes: every one carries ``format_version``,
and records, events, scenarios and reports travel as their canonical dict
forms so the wire payload is byte-compatible with what the store logs.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation
from typing import Union

from pydantic import BaseModel, ConfigDict, Field

from ..agents.llm import PROMPT_VERSION
from ..agents.profiles import AgentProfile, default_roster
from ..engine.types import FORMAT_VERSION, MarketConfig, WorldEvent, initial_price
from ..errors import InvalidRequest
from ..scenario import DEFAULT_PRICES, Scenario, build_event, default_liquidity

# Money-like values may arrive as JSON numbers or strings; both are routed
# through str() so floats never touch Decimal construction directly.
Num = Union[int, float, str]

_CONFIG_DECIMAL_KEYS = ("lambda", "event_gain", "contagion", "min_price")
_CONFIG_INT_KEYS = ("feed_window", "checkpoint_interval", "history_window")


def _parse_decimal(value: Num, label: str) -> Decimal:
    try:
        return Decimal(str(value))
    except InvalidOperation:
        raise InvalidRequest(f"{label} is not a number: {value!r}") from None


class MarketConfigIn(BaseModel):
    """Partial market config; omitted knobs keep their defaults."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    lambda_: Num | None = Field(default=None, alias="lambda")
    liquidity: dict[str, int] | None = None
    event_gain: Num | None = None
    contagion: Num | None = None
    feed_window: int | None = None
    checkpoint_interval: int | None = None
    min_price: Num | None = None
    history_window: int | None = None

    def to_config(self, prices: dict[str, Decimal]) -> MarketConfig:
        merged = MarketConfig(liquidity=default_liquidity(prices)).to_dict()
        given = self.model_dump(by_alias=True, exclude_none=True)
        for key in _CONFIG_DECIMAL_KEYS:
            if key in given:
                merged[key] = str(_parse_decimal(given[key], f"config.{key}"))
        for key in _CONFIG_INT_KEYS:
            if key in given:
                merged[key] = given[key]
        if self.liquidity is not None:
            merged["liquidity"] = dict(self.liquidity)
        return MarketConfig.from_dict(merged)


class AgentProfileIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    agent_id: str
    display_name: str
    strategy: str
    aggressiveness: Num
    post_propensity: Num = 0
    lookback: int = 1
    threshold: Num = "0.05"
    anchors: dict[str, Num] = Field(default_factory=dict)
    initial_cash: Num = "10000.0000"
    initial_holdings: dict[str, int] = Field(default_factory=dict)

    def to_profile(self) -> AgentProfile:
        d = self.model_dump()
        for key in ("aggressiveness", "post_propensity", "threshold", "initial_cash"):
            d[key] = str(_parse_decimal(d[key], f"{self.agent_id}.{key}"))
        d["anchors"] = {
            c: str(_parse_decimal(v, f"{self.agent_id}.anchors.{c}"))
            for c, v in d["anchors"].items()
        }
        try:
            return AgentProfile.from_dict(d)
        except ValueError as exc:
            raise InvalidRequest(f"profile {self.agent_id}: {exc}") from None


class EventIn(BaseModel):
    model_config = ConfigDict(extra="forbid")

    event_id: str | None = None
    title: str
    body: str = ""
    impacts: dict[str, Num]
    start_tick: int
    duration_ticks: int
    half_life_ticks: int

    def to_event(self) -> WorldEvent:
        impacts = {
            c: _parse_decimal(v, f"impacts.{c}") for c, v in self.impacts.items()
        }
        try:
            return build_event(
                title=self.title,
                impacts=impacts,
                start_tick=self.start_tick,
                duration_ticks=self.duration_ticks,
                half_life_ticks=self.half_life_ticks,
                body=self.body,
                event_id=self.event_id,
            )
        except ValueError as exc:
            raise InvalidRequest(f"invalid event: {exc}") from None


class CreateSimulationRequest(BaseModel):
    """Scenario plus optional pre-scheduled events.

    Omitting ``roster`` selects the built-in fourteen-trader roster; omitting
    ``initial_prices`` selects the stock three-commodity market.
    """

    model_config = ConfigDict(extra="forbid")

    simulation_id: str | None = None
    name: str = "default market"
    seed: int = Field(default=0, ge=0, lt=2**64)
    initial_prices: dict[str, Num] | None = None
    config: MarketConfigIn | None = None
    roster: list[AgentProfileIn] | None = None
    prompt_version: str | None = None
    events: list[EventIn] = Field(default_factory=list)

    def to_scenario(self, sim_id: str) -> Scenario:
        raw = self.initial_prices if self.initial_prices is not None else DEFAULT_PRICES
        try:
            prices = {
                c: initial_price(_parse_decimal(p, f"initial_prices.{c}"))
                for c, p in raw.items()
            }
        except ValueError as exc:
            raise InvalidRequest(f"invalid initial price: {exc}") from None
        config = (self.config or MarketConfigIn()).to_config(prices)
        if self.roster is None:
            profiles = tuple(default_roster(prices))
        else:
            profiles = tuple(p.to_profile() for p in self.roster)
        scenario = Scenario(
            sim_id=sim_id,
            name=self.name,
            seed=self.seed,
            initial_prices=prices,
            profiles=profiles,
            config=config,
            prompt_version=self.prompt_version or PROMPT_VERSION,
        )
        scenario.validate()
        return scenario


class AdvanceRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_ticks: int = 1


class ForkRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    tick: int
    label: str = ""


class InjectRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    event: EventIn
    auto_fork: bool = False
    label: str | None = None


class SessionOpenRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    left: str
    right: str


class SessionControlRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    side: str
    action: str
    n_ticks: int = 1


class ApiError(BaseModel):
    format_version: int = FORMAT_VERSION
    code: str
    message: str
    problems: list[list[str]] | None = None


class SimulationCreated(BaseModel):
    format_version: int = FORMAT_VERSION
    simulation_id: str
    root_branch_id: str
    scenario: dict


class SimulationList(BaseModel):
    format_version: int = FORMAT_VERSION
    simulations: list[str]


class ScenarioOut(BaseModel):
    format_version: int = FORMAT_VERSION
    scenario: dict


class BranchOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    simulation_id: str
    parent_id: str | None
    fork_tick: int | None
    seed: int
    label: str
    status: str
    head_tick: int
    event_count: int


class BranchTreeOut(BaseModel):
    format_version: int = FORMAT_VERSION
    simulation_id: str
    branches: list[dict]


class AdvanceOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    head_tick: int
    status: str
    records: list[dict]


class PauseOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    status: str


class InjectOut(BaseModel):
    format_version: int = FORMAT_VERSION
    outcome: str
    branch_id: str
    event_id: str


class EventLogOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    events: list[dict]


class TimelineOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    from_tick: int
    to_tick: int
    records: list[dict]


class ReplayOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    head_tick: int
    final_state_hash: str


class DeleteOut(BaseModel):
    format_version: int = FORMAT_VERSION
    branch_id: str
    deleted: bool = True


class SessionOut(BaseModel):
    format_version: int = FORMAT_VERSION
    session: dict


class ReportOut(BaseModel):
    format_version: int = FORMAT_VERSION
    session_id: str
    report: dict


class DivergenceSeriesOut(BaseModel):
    format_version: int = FORMAT_VERSION
    session_id: str
    commodity: str
    series: list[list]
    first_divergence_tick: int | None
