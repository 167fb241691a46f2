from .store import (
    FORKED_INTO,
    SCHEDULED,
    STATUS_IDLE,
    STATUS_PAUSED,
    STATUS_RUNNING,
    Branch,
    BranchStore,
    InjectionOutcome,
    Subscription,
    new_id,
)

__all__ = [
    "FORKED_INTO",
    "SCHEDULED",
    "STATUS_IDLE",
    "STATUS_PAUSED",
    "STATUS_RUNNING",
    "Branch",
    "BranchStore",
    "InjectionOutcome",
    "Subscription",
    "new_id",
]
