from .types import (
    FORMAT_VERSION,
    MARKET_MAKER,
    AdapterEvent,
    EventInstance,
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
)
from .hashing import canonical_json, record_bytes, state_hash
from .step import active_instances, advance_state, genesis_record, genesis_state

__all__ = [
    "FORMAT_VERSION",
    "MARKET_MAKER",
    "AdapterEvent",
    "EventInstance",
    "MarketConfig",
    "Order",
    "Portfolio",
    "Post",
    "RejectedOrder",
    "Side",
    "TickRecord",
    "Trade",
    "WorldEvent",
    "WorldState",
    "canonical_json",
    "record_bytes",
    "state_hash",
    "active_instances",
    "advance_state",
    "genesis_record",
    "genesis_state",
]
