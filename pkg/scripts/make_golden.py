"""Regenerates the frozen fixtures under tests/fixtures.

The golden trajectory is produced by a straight-line loop over advance_state,
bypassing the store entirely, so the store tests that replay it exercise the
persistence layer against an independently produced sequence. Rerun after any
intentional engine change and review the diff:

    python3 scripts/make_golden.py
"""

from __future__ import annotations

import json
from pathlib import Path

from branchsim.engine.step import advance_state, genesis_record, genesis_state
from branchsim.rng import SeededStream
from branchsim.scenario import default_scenario

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

GOLDEN_SEED = 42
GOLDEN_TICKS = 30


def golden_trajectory() -> dict:
    scenario = default_scenario("golden", seed=GOLDEN_SEED)
    profiles = list(scenario.profiles)
    state = genesis_state(profiles, scenario.initial_prices, [])
    hashes = [genesis_record(state).state_hash]
    stream = SeededStream(scenario.seed)
    trade_count = 0
    for _ in range(GOLDEN_TICKS):
        state, record = advance_state(state, [], profiles, scenario.config, stream)
        hashes.append(record.state_hash)
        trade_count += len(record.trades)
    return {
        "seed": GOLDEN_SEED,
        "ticks": GOLDEN_TICKS,
        "state_hashes": hashes,
        "final_prices": {c: str(p) for c, p in sorted(state.prices.items())},
        "trade_count": trade_count,
    }


def roster() -> list[dict]:
    scenario = default_scenario("golden", seed=GOLDEN_SEED)
    return [p.to_dict() for p in scenario.profiles]


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / "golden_hashes_seed42.json").write_text(
        json.dumps(golden_trajectory(), indent=2, sort_keys=True) + "\n"
    )
    (FIXTURES / "default_roster.json").write_text(
        json.dumps(roster(), indent=2, sort_keys=True) + "\n"
    )
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
