"""Paired-branch comparison: sessions, divergence metrics, reports.

A session is a view over two branches that share an ancestor; it never owns
them, it only delegates run/pause to the store. Divergence is measured per
commodity as |price_left - price_right| normalized by the price at the
common ancestor tick, so gaps are comparable across commodities of very
different scale.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from decimal import Decimal

from .branchstore.store import Branch, BranchStore, new_id
from .engine.hashing import canonical_json
from .engine.types import FORMAT_VERSION, TickRecord
from .errors import (
    InvalidRequest,
    NoCommonAncestor,
    UnknownCommodity,
    UnknownSession,
)
from .fixed import CTX, money, rate

SIDE_LEFT = "LEFT"
SIDE_RIGHT = "RIGHT"

RUNNING = "RUNNING"
PAUSED = "PAUSED"


@dataclass
class ComparisonSession:
    session_id: str
    sim_id: str
    left: str
    right: str
    common_ancestor_tick: int
    control_state: dict[str, str] = field(
        default_factory=lambda: {SIDE_LEFT: PAUSED, SIDE_RIGHT: PAUSED}
    )

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "session_id": self.session_id,
            "sim_id": self.sim_id,
            "left": self.left,
            "right": self.right,
            "common_ancestor_tick": self.common_ancestor_tick,
            "control_state": dict(self.control_state),
        }


def _ancestor_path(store: BranchStore, branch_id: str) -> list[Branch]:
    path = []
    current: str | None = branch_id
    while current is not None:
        branch = store.branch(current)
        path.append(branch)
        current = branch.parent_id
    return path


def find_common_ancestor(store: BranchStore, left_id: str, right_id: str) -> int:
    """Tick up to which the two branches provably share history.

    The lowest common ancestor is found by path intersection. Every hop
    below it copied a prefix ending at its fork tick, so the shared prefix
    is capped by the smallest fork tick on either descending path; a side
    that is itself the ancestor constrains nothing.
    """
    left_path = _ancestor_path(store, left_id)
    right_path = _ancestor_path(store, right_id)
    right_ids = {b.branch_id: i for i, b in enumerate(right_path)}
    lca_left_idx = None
    for i, b in enumerate(left_path):
        if b.branch_id in right_ids:
            lca_left_idx = i
            break
    if lca_left_idx is None:
        raise NoCommonAncestor(f"{left_id} and {right_id} do not share a root")
    lca_right_idx = right_ids[left_path[lca_left_idx].branch_id]
    cuts = [b.fork_tick for b in left_path[:lca_left_idx]]
    cuts += [b.fork_tick for b in right_path[:lca_right_idx]]
    if not cuts:
        raise InvalidRequest("cannot compare a branch with itself")
    return min(cuts)


class SessionRegistry:
    def __init__(self, store: BranchStore):
        self.store = store
        self._sessions: dict[str, ComparisonSession] = {}
        self._lock = threading.Lock()

    def open(self, left_id: str, right_id: str) -> ComparisonSession:
        if left_id == right_id:
            raise InvalidRequest("left and right must be different branches")
        left = self.store.branch(left_id)
        right = self.store.branch(right_id)
        if left.sim_id != right.sim_id:
            raise NoCommonAncestor("branches belong to different simulations")
        ancestor_tick = find_common_ancestor(self.store, left_id, right_id)
        session = ComparisonSession(
            session_id=new_id("s"),
            sim_id=left.sim_id,
            left=left_id,
            right=right_id,
            common_ancestor_tick=ancestor_tick,
        )
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get(self, session_id: str) -> ComparisonSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id}", session_id=session_id)
        return session

    def control(
        self, session_id: str, side: str, action: str, n_ticks: int = 1
    ) -> ComparisonSession:
        """RUN advances one side; PAUSE stops it. The other side is untouched."""
        session = self.get(session_id)
        side = side.upper()
        if side not in (SIDE_LEFT, SIDE_RIGHT):
            raise InvalidRequest(f"side must be LEFT or RIGHT, got {side!r}")
        branch_id = session.left if side == SIDE_LEFT else session.right
        action = action.upper()
        if action == "RUN":
            session.control_state[side] = RUNNING
            try:
                self.store.advance(branch_id, n_ticks)
            finally:
                session.control_state[side] = PAUSED
        elif action == "PAUSE":
            self.store.pause(branch_id)
            session.control_state[side] = PAUSED
        else:
            raise InvalidRequest(f"action must be RUN or PAUSE, got {action!r}")
        return session


def _compared_records(
    store: BranchStore, session: ComparisonSession
) -> tuple[list[TickRecord], list[TickRecord], int, int]:
    left = store.branch(session.left)
    right = store.branch(session.right)
    start = session.common_ancestor_tick
    end = min(left.head_tick, right.head_tick)
    return (
        store.prefix_history(session.left, start, end),
        store.prefix_history(session.right, start, end),
        start,
        end,
    )


def divergence_series(
    store: BranchStore, session: ComparisonSession, commodity: str
) -> list[tuple[int, Decimal]]:
    """(tick, gap) from the ancestor tick to the shorter head.

    gap(t) = |p_L(t) - p_R(t)| / p(ancestor tick); zero on the shared prefix
    by construction.
    """
    left_recs, right_recs, start, _ = _compared_records(store, session)
    if not left_recs:
        return []
    if commodity not in left_recs[0].prices:
        raise UnknownCommodity(f"no commodity {commodity} in this simulation")
    anchor = left_recs[0].prices[commodity]
    series = []
    for lrec, rrec in zip(left_recs, right_recs):
        diff = abs(CTX.subtract(lrec.prices[commodity], rrec.prices[commodity]))
        series.append((lrec.tick, rate(CTX.divide(diff, anchor))))
    return series


def first_divergence_tick(
    store: BranchStore, session: ComparisonSession, epsilon: Decimal = Decimal(0)
) -> int | None:
    """First tick the branches measurably differ, or None.

    epsilon 0 compares state hashes; a positive epsilon asks for the first
    tick where any commodity's gap exceeds it.
    """
    left = store.branch(session.left)
    right = store.branch(session.right)
    end = min(left.head_tick, right.head_tick)
    if epsilon == 0:
        for t in range(0, end + 1):
            if left.records[t].state_hash != right.records[t].state_hash:
                return t
        return None
    commodities = sorted(left.records[0].prices)
    gap_by_commodity = {
        c: divergence_series(store, session, c) for c in commodities
    }
    start = session.common_ancestor_tick
    for i in range(end - start + 1):
        for c in commodities:
            if gap_by_commodity[c][i][1] > epsilon:
                return start + i
    return None


@dataclass(frozen=True)
class CommodityDivergence:
    commodity: str
    series: tuple[tuple[int, Decimal], ...]
    first_divergence_tick: int | None
    mean_left: Decimal
    mean_right: Decimal

    def to_dict(self) -> dict:
        return {
            "commodity": self.commodity,
            "series": [{"tick": t, "gap": str(g)} for t, g in self.series],
            "first_divergence_tick": self.first_divergence_tick,
            "mean_left": str(self.mean_left),
            "mean_right": str(self.mean_right),
        }


@dataclass(frozen=True)
class DivergenceReport:
    session_id: str
    left: str
    right: str
    common_ancestor_tick: int
    compared_from: int
    compared_to: int
    first_divergence_tick: int | None
    commodities: tuple[CommodityDivergence, ...]
    cumulative_trade_delta: int
    cumulative_post_delta: int
    summary: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "session_id": self.session_id,
            "left": self.left,
            "right": self.right,
            "common_ancestor_tick": self.common_ancestor_tick,
            "compared_from": self.compared_from,
            "compared_to": self.compared_to,
            "first_divergence_tick": self.first_divergence_tick,
            "commodities": [c.to_dict() for c in self.commodities],
            "cumulative_trade_delta": self.cumulative_trade_delta,
            "cumulative_post_delta": self.cumulative_post_delta,
            "summary": list(self.summary),
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def _mean(values: list[Decimal]) -> Decimal:
    total = Decimal(0)
    for v in values:
        total = CTX.add(total, v)
    return money(CTX.divide(total, Decimal(len(values))))


def report(store: BranchStore, session: ComparisonSession) -> DivergenceReport:
    left_recs, right_recs, start, end = _compared_records(store, session)
    commodities = sorted(left_recs[0].prices) if left_recs else []

    per_commodity = []
    for c in commodities:
        series = divergence_series(store, session, c)
        first = next((t for t, gap in series if gap > 0), None)
        mean_left = _mean([r.prices[c] for r in left_recs])
        mean_right = _mean([r.prices[c] for r in right_recs])
        per_commodity.append(CommodityDivergence(
            commodity=c,
            series=tuple(series),
            first_divergence_tick=first,
            mean_left=mean_left,
            mean_right=mean_right,
        ))

    trade_delta = sum(
        abs(l.trade_count - r.trade_count) for l, r in zip(left_recs, right_recs)
    )
    post_delta = sum(
        abs(l.post_count - r.post_count) for l, r in zip(left_recs, right_recs)
    )
    first_global = first_divergence_tick(store, session, Decimal(0))

    summary = []
    if first_global is None:
        summary.append(
            f"no divergence between {session.left} and {session.right} "
            f"over ticks [{start}, {end}]"
        )
    else:
        summary.append(
            f"{session.left} and {session.right} first diverge at tick {first_global}"
        )
    for cd in per_commodity:
        if cd.first_divergence_tick is None:
            summary.append(f"{cd.commodity}: prices identical on both branches")
            continue
        if cd.mean_left > cd.mean_right:
            direction = "left runs higher"
        elif cd.mean_left < cd.mean_right:
            direction = "right runs higher"
        else:
            direction = "means are equal"
        summary.append(
            f"{cd.commodity}: prices split at tick {cd.first_divergence_tick}, "
            f"mean {cd.mean_left} vs {cd.mean_right} ({direction})"
        )

    return DivergenceReport(
        session_id=session.session_id,
        left=session.left,
        right=session.right,
        common_ancestor_tick=session.common_ancestor_tick,
        compared_from=start,
        compared_to=end,
        first_divergence_tick=first_global,
        commodities=tuple(per_commodity),
        cumulative_trade_delta=trade_delta,
        cumulative_post_delta=post_delta,
        summary=tuple(summary),
    )
