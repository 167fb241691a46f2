"""The branch store: branch tree, event logs, trajectories, snapshots, replay.

One store owns one data directory. Branches are append-only: advancing adds
TickRecords, injection adds events, and anything retroactive forks instead of
rewriting, so a parent's persisted bytes never change after a fork. Every
mutation of a single branch is serialized through a non-blocking lock;
contention surfaces as BranchBusy rather than waiting.
"""

from __future__ import annotations

import queue
import shutil
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

from ..agents.llm import MODE_RECORD, MODE_REPLAY, CompletionClient, LlmRuntime
from ..engine.hashing import canonical_json, state_hash
from ..engine.step import active_instances, advance_state, genesis_record, genesis_state
from ..engine.types import FORMAT_VERSION, TickRecord, WorldEvent, WorldState
from ..errors import (
    BranchBusy,
    BranchHasChildren,
    DuplicateEventId,
    HashMismatch,
    InvalidRequest,
    InvariantViolation,
    IoFailure,
    RangeOutOfBounds,
    RetroactiveRequiresFork,
    TickBeyondHead,
    UnknownBranch,
    UnknownCommodity,
    UnknownSimulation,
)
from ..rng import SeededStream
from ..scenario import Scenario
from .persistence import (
    BranchPaths,
    SimPaths,
    append_log_line,
    atomic_write_text,
    read_json,
    read_log,
)

STATUS_IDLE = "IDLE"
STATUS_RUNNING = "RUNNING"
STATUS_PAUSED = "PAUSED"

SCHEDULED = "SCHEDULED"
FORKED_INTO = "FORKED_INTO"

SUBSCRIBER_BUFFER = 256


def new_id(prefix: str) -> str:
    return f"{prefix}-{uuid.uuid4().hex[:12]}"


@dataclass(frozen=True)
class InjectionOutcome:
    kind: str            # SCHEDULED | FORKED_INTO
    branch_id: str       # the branch that carries the event
    event_id: str


class Subscription:
    """A live feed of TickRecords for one branch."""

    def __init__(self, branch_id: str, last_seen: int):
        self.branch_id = branch_id
        self.last_seen = last_seen
        self.q: queue.Queue = queue.Queue(maxsize=SUBSCRIBER_BUFFER)
        self.closed = False


class _Transcripts:
    """Per-branch transcript files with a read-through cache."""

    def __init__(self, paths: BranchPaths):
        self._paths = paths
        self._cache: dict[tuple[int, str], dict] = {}

    def get(self, tick: int, agent_id: str) -> dict | None:
        key = (tick, agent_id)
        if key in self._cache:
            return self._cache[key]
        path = self._paths.transcript(tick, agent_id)
        if not path.exists():
            return None
        entry = read_json(path)
        self._cache[key] = entry
        return entry

    def put(self, tick: int, agent_id: str, entry: dict) -> None:
        atomic_write_text(
            self._paths.transcript(tick, agent_id),
            canonical_json(entry),
        )
        self._cache[(tick, agent_id)] = entry


class Branch:
    def __init__(
        self,
        branch_id: str,
        sim_id: str,
        parent_id: str | None,
        fork_tick: int,
        seed: int,
        label: str,
        prompt_version: str,
        paths: BranchPaths,
    ):
        self.branch_id = branch_id
        self.sim_id = sim_id
        self.parent_id = parent_id
        self.fork_tick = fork_tick
        self.seed = seed
        self.label = label
        self.prompt_version = prompt_version
        self.paths = paths
        self.records: list[TickRecord] = []
        self.events: list[tuple[WorldEvent, int]] = []   # injection order
        self.state: WorldState | None = None             # head state, lazy
        self.status = STATUS_IDLE
        self.pause_requested = False
        self.lock = threading.Lock()
        self.sub_lock = threading.Lock()
        self.subscribers: list[Subscription] = []
        self.transcripts = _Transcripts(paths)

    @property
    def head_tick(self) -> int:
        return len(self.records) - 1

    def event_objs(self) -> list[WorldEvent]:
        return [e for e, _ in self.events]

    def event_log_view(self) -> list[tuple[WorldEvent, int]]:
        return sorted(self.events, key=lambda item: (item[0].start_tick, item[0].event_id))

    def manifest_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "branch_id": self.branch_id,
            "sim_id": self.sim_id,
            "parent_id": self.parent_id,
            "fork_tick": self.fork_tick,
            "seed": self.seed,
            "label": self.label,
            "prompt_version": self.prompt_version,
        }

    def tree_node(self) -> dict:
        return {
            "branch_id": self.branch_id,
            "parent_id": self.parent_id,
            "fork_tick": self.fork_tick,
            "head_tick": self.head_tick,
            "seed": self.seed,
            "label": self.label,
            "status": self.status,
            "event_count": len(self.events),
        }


class _Guard:
    """Non-blocking per-branch mutation lock; busy branches fail fast."""

    def __init__(self, branch: Branch, action: str):
        self._branch = branch
        self._action = action

    def __enter__(self) -> Branch:
        if not self._branch.lock.acquire(blocking=False):
            raise BranchBusy(
                f"branch is busy, cannot {self._action}", branch_id=self._branch.branch_id
            )
        return self._branch

    def __exit__(self, *exc) -> None:
        self._branch.lock.release()


class _Sim:
    def __init__(self, scenario: Scenario, paths: SimPaths):
        self.scenario = scenario
        self.paths = paths
        self.branches: dict[str, Branch] = {}


class BranchStore:
    def __init__(
        self,
        root: Path | str,
        client: CompletionClient | None = None,
        llm_mode: str = MODE_RECORD,
    ):
        if llm_mode not in (MODE_RECORD, MODE_REPLAY):
            raise InvalidRequest(f"llm_mode must be record or replay, got {llm_mode!r}")
        self.root = Path(root)
        self.client = client
        self.llm_mode = llm_mode
        self._sims: dict[str, _Sim] = {}
        self._index: dict[str, str] = {}  # branch_id -> sim_id
        self._registry_lock = threading.Lock()
        self._load()

    # ---------- loading ----------

    def _load(self) -> None:
        sims_dir = self.root / "simulations"
        if not sims_dir.exists():
            return
        for sim_dir in sorted(sims_dir.iterdir()):
            if not sim_dir.is_dir():
                continue
            paths = SimPaths(self.root, sim_dir.name)
            if not paths.scenario.exists():
                continue
            scenario = Scenario.from_dict(read_json(paths.scenario))
            sim = _Sim(scenario, paths)
            self._sims[scenario.sim_id] = sim
            if not paths.branches_dir.exists():
                continue
            for branch_dir in sorted(paths.branches_dir.iterdir()):
                bp = BranchPaths(branch_dir)
                if not bp.manifest.exists():
                    continue  # partially created branch, never committed
                manifest = read_json(bp.manifest)
                branch = Branch(
                    branch_id=manifest["branch_id"],
                    sim_id=scenario.sim_id,
                    parent_id=manifest.get("parent_id"),
                    fork_tick=int(manifest["fork_tick"]),
                    seed=int(manifest["seed"]),
                    label=manifest.get("label", ""),
                    prompt_version=manifest.get("prompt_version", scenario.prompt_version),
                    paths=bp,
                )
                for line in read_log(bp.events_log):
                    branch.events.append(
                        (WorldEvent.from_dict(line["event"]), int(line["injected_at_tick"]))
                    )
                branch.records = [TickRecord.from_dict(d) for d in read_log(bp.trajectory_log)]
                for i, rec in enumerate(branch.records):
                    if rec.tick != i:
                        raise IoFailure(
                            f"trajectory of {branch.branch_id} is not contiguous at index {i}"
                        )
                if not branch.records:
                    continue  # no committed genesis, unusable remnant
                sim.branches[branch.branch_id] = branch
                self._index[branch.branch_id] = scenario.sim_id

    # ---------- lookup ----------

    def simulation_ids(self) -> list[str]:
        return sorted(self._sims)

    def scenario(self, sim_id: str) -> Scenario:
        return self._sim(sim_id).scenario

    def _sim(self, sim_id: str) -> _Sim:
        sim = self._sims.get(sim_id)
        if sim is None:
            raise UnknownSimulation(f"no simulation {sim_id}")
        return sim

    def branch(self, branch_id: str) -> Branch:
        sim_id = self._index.get(branch_id)
        if sim_id is None:
            raise UnknownBranch(f"no branch {branch_id}", branch_id=branch_id)
        return self._sims[sim_id].branches[branch_id]

    def branch_tree(self, sim_id: str) -> list[dict]:
        sim = self._sim(sim_id)
        return [sim.branches[b].tree_node() for b in sorted(sim.branches)]

    def scenario_for_branch(self, branch_id: str) -> Scenario:
        return self._sims[self._index_of(branch_id)].scenario

    def _index_of(self, branch_id: str) -> str:
        sim_id = self._index.get(branch_id)
        if sim_id is None:
            raise UnknownBranch(f"no branch {branch_id}", branch_id=branch_id)
        return sim_id

    # ---------- creation ----------

    def create_simulation(
        self,
        scenario: Scenario,
        label: str = "main",
        events: list[WorldEvent] | None = None,
    ) -> Branch:
        scenario.validate()
        with self._registry_lock:
            if scenario.sim_id in self._sims:
                raise InvalidRequest(f"simulation {scenario.sim_id} already exists")
            paths = SimPaths(self.root, scenario.sim_id)
            paths.dir.mkdir(parents=True, exist_ok=True)
            atomic_write_text(paths.scenario, canonical_json(scenario.to_dict()))
            sim = _Sim(scenario, paths)
            self._sims[scenario.sim_id] = sim

        branch = self._new_branch_dir(
            sim, parent_id=None, fork_tick=0, seed=scenario.seed, label=label
        )
        for event in events or []:
            self._check_event(branch, sim.scenario, event)
            self._append_event(branch, event, injected_at=0)

        state = genesis_state(list(sim.scenario.profiles), sim.scenario.initial_prices,
                              branch.event_objs())
        record = genesis_record(state)
        append_log_line(branch.paths.trajectory_log, canonical_json(record.to_dict()))
        branch.records.append(record)
        branch.state = state
        self._write_snapshot(branch, state, created_from="CHECKPOINT")
        self._commit_branch(sim, branch)
        return branch

    def _new_branch_dir(
        self, sim: _Sim, parent_id: str | None, fork_tick: int, seed: int, label: str
    ) -> Branch:
        branch_id = new_id("b")
        bp = sim.paths.branch(branch_id)
        bp.dir.mkdir(parents=True, exist_ok=True)
        bp.snapshots_dir.mkdir(exist_ok=True)
        bp.transcripts_dir.mkdir(exist_ok=True)
        return Branch(
            branch_id=branch_id,
            sim_id=sim.scenario.sim_id,
            parent_id=parent_id,
            fork_tick=fork_tick,
            seed=seed,
            label=label,
            prompt_version=sim.scenario.prompt_version,
            paths=bp,
        )

    def _commit_branch(self, sim: _Sim, branch: Branch) -> None:
        # The manifest is written last: its presence marks the branch usable.
        atomic_write_text(branch.paths.manifest, canonical_json(branch.manifest_dict()))
        with self._registry_lock:
            sim.branches[branch.branch_id] = branch
            self._index[branch.branch_id] = sim.scenario.sim_id

    # ---------- state materialization ----------

    def _ensure_state(self, branch: Branch) -> WorldState:
        if branch.state is None:
            branch.state = self._materialize(branch, branch.head_tick)
        return branch.state

    def _materialize(self, branch: Branch, tick: int) -> WorldState:
        """State at a tick from the nearest snapshot plus forward replay."""
        scenario = self.scenario_for_branch_obj(branch)
        base: WorldState | None = None
        for snap_tick in reversed(branch.paths.snapshot_ticks()):
            if snap_tick <= tick:
                base = self._read_snapshot(branch, snap_tick)
                break
        if base is None:
            base = genesis_state(
                list(scenario.profiles), scenario.initial_prices, branch.event_objs()
            )
        runtime = LlmRuntime(
            mode=MODE_REPLAY,
            get=branch.transcripts.get,
            prompt_version=branch.prompt_version,
        )
        stream = SeededStream(branch.seed)
        events = branch.event_objs()
        state = base
        while state.tick < tick:
            state, _ = advance_state(
                state, events, list(scenario.profiles), scenario.config, stream, runtime
            )
        if state.tick != tick:
            raise InvariantViolation(
                f"snapshot beyond requested tick {tick} on {branch.branch_id}"
            )
        expected = branch.records[tick].state_hash
        got = state_hash(state)
        if got != expected:
            raise HashMismatch(
                f"materialized state at tick {tick} hashes {got}, trajectory says {expected}",
                branch_id=branch.branch_id,
            )
        return state

    def state_at(self, branch_id: str, tick: int) -> WorldState:
        """Materialized, hash-verified world state at a recorded tick."""
        branch = self.branch(branch_id)
        if tick < 0 or tick > branch.head_tick:
            raise TickBeyondHead(
                f"tick {tick} outside recorded range [0, {branch.head_tick}]",
                branch_id=branch_id,
            )
        return self._materialize(branch, tick)

    def scenario_for_branch_obj(self, branch: Branch) -> Scenario:
        return self._sims[branch.sim_id].scenario

    def _write_snapshot(self, branch: Branch, state: WorldState, created_from: str) -> None:
        payload = {
            "format_version": FORMAT_VERSION,
            "branch_id": branch.branch_id,
            "tick": state.tick,
            "created_from": created_from,
            "state_hash": state_hash(state),
            "world_state": state.to_dict(),
        }
        atomic_write_text(branch.paths.snapshot(state.tick), canonical_json(payload))

    def _read_snapshot(self, branch: Branch, tick: int) -> WorldState:
        payload = read_json(branch.paths.snapshot(tick))
        state = WorldState.from_dict(payload["world_state"])
        if state_hash(state) != payload["state_hash"]:
            raise HashMismatch(
                f"snapshot at tick {tick} does not hash to its recorded digest",
                branch_id=branch.branch_id,
            )
        return state

    # ---------- advance / pause ----------

    def advance(self, branch_id: str, n_ticks: int) -> list[TickRecord]:
        if n_ticks < 1:
            raise InvalidRequest("n_ticks must be >= 1")
        branch = self.branch(branch_id)
        scenario = self.scenario_for_branch_obj(branch)
        with _Guard(branch, "advance"):
            branch.status = STATUS_RUNNING
            branch.pause_requested = False
            state = self._ensure_state(branch)
            runtime = LlmRuntime(
                mode=self.llm_mode,
                client=self.client,
                get=branch.transcripts.get,
                put=branch.transcripts.put,
                prompt_version=branch.prompt_version,
            )
            stream = SeededStream(branch.seed)
            events = branch.event_objs()
            produced: list[TickRecord] = []
            try:
                for _ in range(n_ticks):
                    if branch.pause_requested:
                        break
                    state, record = advance_state(
                        state, events, list(scenario.profiles), scenario.config,
                        stream, runtime,
                    )
                    append_log_line(
                        branch.paths.trajectory_log, canonical_json(record.to_dict())
                    )
                    branch.records.append(record)
                    branch.state = state
                    if record.tick % scenario.config.checkpoint_interval == 0:
                        self._write_snapshot(branch, state, created_from="CHECKPOINT")
                    self._publish(branch, record)
                    produced.append(record)
            finally:
                branch.status = STATUS_PAUSED if branch.pause_requested else STATUS_IDLE
        return produced

    def pause(self, branch_id: str) -> str:
        """Ask a running branch to stop after the in-flight tick."""
        branch = self.branch(branch_id)
        if branch.status == STATUS_RUNNING:
            branch.pause_requested = True
            return STATUS_RUNNING
        branch.status = STATUS_PAUSED
        return branch.status

    # ---------- events ----------

    def _check_event(self, branch: Branch, scenario: Scenario, event: WorldEvent) -> None:
        try:
            event.validate()
        except ValueError as exc:
            raise InvalidRequest(f"invalid event: {exc}")
        for commodity in event.impacts:
            if commodity not in scenario.initial_prices:
                raise UnknownCommodity(
                    f"event impacts unknown commodity {commodity}", branch_id=branch.branch_id
                )
        if any(e.event_id == event.event_id for e, _ in branch.events):
            raise DuplicateEventId(
                f"event {event.event_id} already on branch", branch_id=branch.branch_id
            )

    def _append_event(self, branch: Branch, event: WorldEvent, injected_at: int) -> None:
        line = {
            "format_version": FORMAT_VERSION,
            "injected_at_tick": injected_at,
            "event": event.to_dict(),
        }
        append_log_line(branch.paths.events_log, canonical_json(line))
        branch.events.append((event, injected_at))

    def inject(
        self,
        branch_id: str,
        event: WorldEvent,
        auto_fork: bool = False,
        label: str | None = None,
    ) -> InjectionOutcome:
        branch = self.branch(branch_id)
        scenario = self.scenario_for_branch_obj(branch)
        with _Guard(branch, "inject"):
            self._check_event(branch, scenario, event)
            head = branch.head_tick
            if event.start_tick >= head:
                self._append_event(branch, event, injected_at=head)
                # The head state's view of upcoming events just changed.
                if branch.state is not None:
                    branch.state.active_events = active_instances(
                        branch.event_objs(), branch.state.tick
                    )
                return InjectionOutcome(SCHEDULED, branch.branch_id, event.event_id)
            if not auto_fork:
                raise RetroactiveRequiresFork(
                    f"event starts at {event.start_tick}, before head {head}; "
                    "retroactive injection requires a fork",
                    branch_id=branch.branch_id,
                )
            child = self._fork_locked(
                branch, event.start_tick,
                label if label is not None else f"{event.title} @ {event.start_tick}",
            )
        child_outcome = self.inject(child.branch_id, event, auto_fork=False)
        return InjectionOutcome(FORKED_INTO, child_outcome.branch_id, event.event_id)

    # ---------- fork ----------

    def fork(self, branch_id: str, tick: int, label: str = "") -> Branch:
        branch = self.branch(branch_id)
        with _Guard(branch, "fork"):
            return self._fork_locked(branch, tick, label)

    def _fork_locked(self, source: Branch, tick: int, label: str) -> Branch:
        if tick < 0 or tick > source.head_tick:
            raise TickBeyondHead(
                f"cannot fork at tick {tick}, head is {source.head_tick}",
                branch_id=source.branch_id,
            )
        sim = self._sims[source.sim_id]
        child = self._new_branch_dir(
            sim, parent_id=source.branch_id, fork_tick=tick, seed=source.seed,
            label=label or f"fork of {source.label or source.branch_id} @ {tick}",
        )

        prefix = source.records[: tick + 1]
        atomic_write_text(
            child.paths.trajectory_log,
            "".join(canonical_json(r.to_dict()) + "\n" for r in prefix),
        )
        child.records = list(prefix)

        inherited = [(e, at) for e, at in source.events if at <= tick]
        if inherited:
            atomic_write_text(
                child.paths.events_log,
                "".join(
                    canonical_json({
                        "format_version": FORMAT_VERSION,
                        "injected_at_tick": at,
                        "event": e.to_dict(),
                    }) + "\n"
                    for e, at in inherited
                ),
            )
        child.events = list(inherited)

        for t, agent_id in source.paths.transcript_keys():
            if t < tick:
                shutil.copyfile(
                    source.paths.transcript(t, agent_id),
                    child.paths.transcript(t, agent_id),
                )

        if tick == source.head_tick and source.state is not None:
            state = source.state.copy()
        else:
            state = self._materialize(source, tick)
        # Forked state drops events injected after the fork tick.
        state.active_events = active_instances(child.event_objs(), tick)
        child.state = state
        self._write_snapshot(child, state, created_from="FORK")
        self._commit_branch(sim, child)
        return child

    # ---------- delete ----------

    def delete_branch(self, branch_id: str) -> None:
        branch = self.branch(branch_id)
        sim = self._sims[branch.sim_id]
        with _Guard(branch, "delete"):
            children = [
                b for b in sim.branches.values() if b.parent_id == branch.branch_id
            ]
            if children:
                raise BranchHasChildren(
                    f"branch has {len(children)} child branches", branch_id=branch_id
                )
            with self._registry_lock:
                sim.branches.pop(branch_id, None)
                self._index.pop(branch_id, None)
            with branch.sub_lock:
                for sub in branch.subscribers:
                    sub.closed = True
                branch.subscribers.clear()
        shutil.rmtree(branch.paths.dir, ignore_errors=True)

    # ---------- history ----------

    def prefix_history(self, branch_id: str, from_tick: int, to_tick: int) -> list[TickRecord]:
        branch = self.branch(branch_id)
        if not (0 <= from_tick <= to_tick <= branch.head_tick):
            raise RangeOutOfBounds(
                f"range [{from_tick}, {to_tick}] outside [0, {branch.head_tick}]",
                branch_id=branch_id,
            )
        return branch.records[from_tick : to_tick + 1]

    # ---------- replay ----------

    def replay(self, branch_id: str) -> str:
        """Recompute the whole trajectory and compare against stored records.

        Returns the final state hash. Any recomputed record whose canonical
        bytes differ from the stored ones is corruption (or tampering) and
        raises HashMismatch naming the first bad tick.
        """
        branch = self.branch(branch_id)
        scenario = self.scenario_for_branch_obj(branch)
        events = branch.event_objs()
        profiles = list(scenario.profiles)
        runtime = LlmRuntime(
            mode=MODE_REPLAY,
            get=branch.transcripts.get,
            prompt_version=branch.prompt_version,
        )
        state = genesis_state(profiles, scenario.initial_prices, events)
        recomputed = genesis_record(state)
        self._compare_records(branch, recomputed, branch.records[0])
        stream = SeededStream(branch.seed)
        for t in range(1, branch.head_tick + 1):
            state, record = advance_state(
                state, events, profiles, scenario.config, stream, runtime
            )
            self._compare_records(branch, record, branch.records[t])
        return branch.records[branch.head_tick].state_hash

    @staticmethod
    def _compare_records(branch: Branch, recomputed: TickRecord, stored: TickRecord) -> None:
        if canonical_json(recomputed.to_dict()) != canonical_json(stored.to_dict()):
            raise HashMismatch(
                f"replay diverged from stored trajectory at tick {stored.tick}",
                branch_id=branch.branch_id,
            )

    # ---------- streaming ----------

    def subscribe(self, branch_id: str, from_tick: int | None = None) -> tuple[list[TickRecord], Subscription]:
        """Register a listener; returns (backlog, subscription) atomically."""
        branch = self.branch(branch_id)
        with branch.sub_lock:
            head = branch.head_tick
            backlog: list[TickRecord] = []
            if from_tick is not None:
                if from_tick < 0 or from_tick > head + 1:
                    raise RangeOutOfBounds(
                        f"resume tick {from_tick} outside [0, {head + 1}]", branch_id=branch_id
                    )
                backlog = branch.records[from_tick : head + 1]
            sub = Subscription(branch_id, last_seen=head)
            branch.subscribers.append(sub)
            return backlog, sub

    def unsubscribe(self, sub: Subscription) -> None:
        try:
            branch = self.branch(sub.branch_id)
        except UnknownBranch:
            return
        with branch.sub_lock:
            sub.closed = True
            if sub in branch.subscribers:
                branch.subscribers.remove(sub)

    def _publish(self, branch: Branch, record: TickRecord) -> None:
        with branch.sub_lock:
            for sub in list(branch.subscribers):
                if sub.closed:
                    branch.subscribers.remove(sub)
                    continue
                try:
                    sub.q.put_nowait(record)
                    sub.last_seen = record.tick
                except queue.Full:
                    # A consumer that cannot keep up is cut off; it can
                    # resubscribe from its last seen tick.
                    sub.closed = True
                    branch.subscribers.remove(sub)
