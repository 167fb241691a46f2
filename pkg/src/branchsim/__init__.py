"""branchsim: a branchable, replayable multi-agent commodity-market simulator.

Core surface:

- ``engine``: deterministic tick transition and state hashing.
- ``agents``: scripted strategy roster plus an LLM adapter with
  record/replay transcripts.
- ``branchstore``: the persistent branch tree with fork, inject and replay.
- ``compare``: paired-branch sessions and divergence reports.
- ``api``: HTTP control service over the store.
- ``cli``: headless script runner (console entry point ``branchsim``).
"""

from .engine.types import FORMAT_VERSION
from .scenario import Scenario, build_event, default_scenario, make_event_id

__all__ = [
    "FORMAT_VERSION",
    "Scenario",
    "build_event",
    "default_scenario",
    "make_event_id",
]

__version__ = "0.1.0"
