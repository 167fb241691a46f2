"""Canonical serialization and state hashing.

Two branches agree at a tick iff their canonical state digests agree, so the
byte form must be unique: keys sorted, no whitespace, ASCII only, decimals as
their quantized string form. Anything derived from the event log (the
``active_events`` carried on WorldState) is stripped before hashing so a fork
point and a sibling that just received an injection hash identically.
"""

from __future__ import annotations

import hashlib
import json

from .types import TickRecord, WorldState

_HASHED_STATE_KEYS = (
    "format_version",
    "tick",
    "prices",
    "portfolios",
    "feed",
    "pending_orders",
    "price_history",
)


def canonical_json(payload: dict | list) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def state_hash(state: WorldState) -> str:
    full = state.to_dict()
    hashed = {k: full[k] for k in _HASHED_STATE_KEYS}
    return hashlib.sha256(canonical_json(hashed).encode("ascii")).hexdigest()


def record_bytes(record: TickRecord) -> bytes:
    return canonical_json(record.to_dict()).encode("ascii")
