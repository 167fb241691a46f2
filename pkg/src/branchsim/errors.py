"""Error taxonomy shared by the engine, store, compare, API and CLI layers.

Every exception carries a stable machine ``code`` so the HTTP layer can map
errors one-to-one onto wire payloads and the CLI onto exit diagnostics.
"""

from __future__ import annotations


class BranchSimError(Exception):
    """Base class; ``code`` is the stable machine-readable error name."""

    code = "BranchSimError"

    def __init__(self, message: str, *, branch_id: str | None = None,
                 session_id: str | None = None):
        super().__init__(message)
        self.message = message
        self.branch_id = branch_id
        self.session_id = session_id


class InvariantViolation(BranchSimError):
    """A post-step invariant failed. Engine bug, not user error."""

    code = "InvariantViolation"


class InvalidConfig(BranchSimError):
    code = "InvalidConfig"

    def __init__(self, message: str, problems: list[tuple[str, str]] | None = None):
        super().__init__(message)
        # (field, problem) pairs for field-level diagnostics
        self.problems = problems or []


class InvalidRequest(BranchSimError):
    code = "InvalidRequest"


class UnknownBranch(BranchSimError):
    code = "UnknownBranch"


class UnknownSession(BranchSimError):
    code = "UnknownSession"


class UnknownSimulation(BranchSimError):
    code = "UnknownSimulation"


class UnknownCommodity(BranchSimError):
    code = "UnknownCommodity"


class TickBeyondHead(BranchSimError):
    code = "TickBeyondHead"


class BranchBusy(BranchSimError):
    code = "BranchBusy"


class BranchHasChildren(BranchSimError):
    code = "BranchHasChildren"


class RetroactiveRequiresFork(BranchSimError):
    code = "RetroactiveRequiresFork"


class DuplicateEventId(BranchSimError):
    code = "DuplicateEventId"


class RangeOutOfBounds(BranchSimError):
    code = "RangeOutOfBounds"


class NoCommonAncestor(BranchSimError):
    code = "NoCommonAncestor"


class TranscriptMissing(BranchSimError):
    code = "TranscriptMissing"


class HashMismatch(BranchSimError):
    """Persisted records disagree with a faithful replay. Store corruption."""

    code = "HashMismatch"


class AdapterUnavailable(BranchSimError):
    code = "AdapterUnavailable"


class ParseFailure(BranchSimError):
    code = "ParseFailure"

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class ScriptParseError(BranchSimError):
    code = "ScriptParseError"

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IoFailure(BranchSimError):
    code = "IoFailure"
