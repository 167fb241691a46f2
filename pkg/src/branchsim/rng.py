"""Counter-based deterministic randomness.

One seeded stream per branch; substreams are derived by hashing
(seed, tick, agent_id, counter) with BLAKE2b, so a draw depends only on its
coordinates and never on the order in which agents are evaluated. Replaying
a branch, or evaluating agents in parallel, consumes identical values.
"""

from __future__ import annotations

import hashlib
from decimal import Decimal

_U64 = 1 << 64


class Substream:
    """Draw sequence for one (tick, agent_id) cell of a branch stream."""

    def __init__(self, seed: int, tick: int, agent_id: str):
        self._prefix = b"%d|%d|%s|" % (seed, tick, agent_id.encode("utf-8"))
        self._counter = 0

    def _next_u64(self) -> int:
        digest = hashlib.blake2b(
            self._prefix + str(self._counter).encode("ascii"), digest_size=8
        ).digest()
        self._counter += 1
        return int.from_bytes(digest, "big")

    def below(self, probability: Decimal) -> bool:
        """True with the given probability. Exact integer comparison, no floats."""
        threshold = int(probability * _U64)
        return self._next_u64() < threshold

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi] via rejection sampling."""
        if hi < lo:
            raise ValueError("empty range")
        span = hi - lo + 1
        limit = _U64 - (_U64 % span)
        while True:
            u = self._next_u64()
            if u < limit:
                return lo + (u % span)

    def choice(self, seq):
        if not seq:
            raise ValueError("empty sequence")
        return seq[self.randint(0, len(seq) - 1)]


class SeededStream:
    """Per-branch stream; stateless besides its 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & (_U64 - 1)

    def substream(self, tick: int, agent_id: str) -> Substream:
        return Substream(self.seed, tick, agent_id)
