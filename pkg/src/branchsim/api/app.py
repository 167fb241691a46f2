"""HTTP facade over the branch store and comparison sessions.

Every store and compare operation maps to exactly one endpoint, errors map
by their stable code onto status classes (client misuse 400/404, conflict
409, store or engine fault 500), and live ticks stream out as server-sent
events with periodic keep-alive comments.
"""

from __future__ import annotations

import queue
from decimal import Decimal, InvalidOperation
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse

from ..agents.llm import MODE_RECORD, CompletionClient
from ..branchstore.store import FORKED_INTO, Branch, BranchStore, new_id
from ..compare import SessionRegistry, divergence_series, first_divergence_tick, report
from ..engine.hashing import canonical_json
from ..engine.types import FORMAT_VERSION
from ..errors import BranchSimError, InvalidRequest
from .schemas import (
    AdvanceOut,
    AdvanceRequest,
    BranchOut,
    BranchTreeOut,
    CreateSimulationRequest,
    DeleteOut,
    DivergenceSeriesOut,
    EventLogOut,
    ForkRequest,
    InjectOut,
    InjectRequest,
    PauseOut,
    ReplayOut,
    ReportOut,
    ScenarioOut,
    SessionControlRequest,
    SessionOpenRequest,
    SessionOut,
    SimulationCreated,
    SimulationList,
    TimelineOut,
)

HEARTBEAT_SECONDS = 15.0

_HTTP_STATUS = {
    "UnknownSimulation": 404,
    "UnknownBranch": 404,
    "UnknownSession": 404,
    "BranchBusy": 409,
    "DuplicateEventId": 409,
    "BranchHasChildren": 409,
    "RetroactiveRequiresFork": 409,
    "TranscriptMissing": 409,
    "InvalidRequest": 400,
    "InvalidConfig": 400,
    "UnknownCommodity": 400,
    "TickBeyondHead": 400,
    "RangeOutOfBounds": 400,
    "NoCommonAncestor": 400,
    "HashMismatch": 500,
    "InvariantViolation": 500,
    "IoFailure": 500,
}


def _error_payload(exc: BranchSimError) -> dict:
    payload = {
        "format_version": FORMAT_VERSION,
        "code": exc.code,
        "message": exc.message,
    }
    problems = getattr(exc, "problems", None)
    if problems:
        payload["problems"] = [list(p) for p in problems]
    return payload


def _branch_out(branch: Branch) -> BranchOut:
    node = branch.tree_node()
    return BranchOut(simulation_id=branch.sim_id, **node)


def _sse_frame(record_dict: dict) -> str:
    return (
        f"id: {record_dict['tick']}\n"
        "event: tick\n"
        f"data: {canonical_json(record_dict)}\n\n"
    )


def create_app(
    data_dir: Path | str,
    client: CompletionClient | None = None,
    llm_mode: str = MODE_RECORD,
) -> FastAPI:
    """Service wired to one on-disk store rooted at ``data_dir``."""

    store = BranchStore(data_dir, client=client, llm_mode=llm_mode)
    sessions = SessionRegistry(store)
    app = FastAPI(title="branchsim", version="0.1.0")
    app.state.store = store
    app.state.sessions = sessions

    @app.exception_handler(BranchSimError)
    async def on_domain_error(request: Request, exc: BranchSimError) -> JSONResponse:
        status = _HTTP_STATUS.get(exc.code, 400)
        return JSONResponse(status_code=status, content=_error_payload(exc))

    @app.exception_handler(RequestValidationError)
    async def on_shape_error(
        request: Request, exc: RequestValidationError
    ) -> JSONResponse:
        first = exc.errors()[0] if exc.errors() else {}
        where = ".".join(str(part) for part in first.get("loc", ()))
        detail = first.get("msg", "malformed request")
        return JSONResponse(
            status_code=400,
            content={
                "format_version": FORMAT_VERSION,
                "code": "InvalidRequest",
                "message": f"{where}: {detail}" if where else detail,
            },
        )

    # ---------- simulations ----------

    @app.post("/simulations", response_model=SimulationCreated, status_code=201)
    def create_simulation(body: CreateSimulationRequest) -> SimulationCreated:
        sim_id = body.simulation_id or new_id("sim")
        scenario = body.to_scenario(sim_id)
        events = [e.to_event() for e in body.events]
        root = store.create_simulation(scenario, events=events)
        return SimulationCreated(
            simulation_id=sim_id,
            root_branch_id=root.branch_id,
            scenario=scenario.to_dict(),
        )

    @app.get("/simulations", response_model=SimulationList)
    def list_simulations() -> SimulationList:
        return SimulationList(simulations=store.simulation_ids())

    @app.get("/simulations/{sim_id}", response_model=ScenarioOut)
    def get_scenario(sim_id: str) -> ScenarioOut:
        return ScenarioOut(scenario=store.scenario(sim_id).to_dict())

    @app.get("/simulations/{sim_id}/branches", response_model=BranchTreeOut)
    def get_branch_tree(sim_id: str) -> BranchTreeOut:
        return BranchTreeOut(simulation_id=sim_id, branches=store.branch_tree(sim_id))

    # ---------- branches ----------

    @app.get("/branches/{branch_id}", response_model=BranchOut)
    def get_branch(branch_id: str) -> BranchOut:
        return _branch_out(store.branch(branch_id))

    @app.post("/branches/{branch_id}/advance", response_model=AdvanceOut)
    def advance(branch_id: str, body: AdvanceRequest) -> AdvanceOut:
        records = store.advance(branch_id, body.n_ticks)
        branch = store.branch(branch_id)
        return AdvanceOut(
            branch_id=branch_id,
            head_tick=branch.head_tick,
            status=branch.status,
            records=[r.to_dict() for r in records],
        )

    @app.post("/branches/{branch_id}/pause", response_model=PauseOut)
    def pause(branch_id: str) -> PauseOut:
        return PauseOut(branch_id=branch_id, status=store.pause(branch_id))

    @app.post("/branches/{branch_id}/inject", response_model=InjectOut)
    def inject(branch_id: str, body: InjectRequest, response: Response) -> InjectOut:
        outcome = store.inject(
            branch_id,
            body.event.to_event(),
            auto_fork=body.auto_fork,
            label=body.label,
        )
        if outcome.kind == FORKED_INTO:
            response.status_code = 201
        return InjectOut(
            outcome=outcome.kind,
            branch_id=outcome.branch_id,
            event_id=outcome.event_id,
        )

    @app.post("/branches/{branch_id}/fork", response_model=BranchOut, status_code=201)
    def fork(branch_id: str, body: ForkRequest) -> BranchOut:
        return _branch_out(store.fork(branch_id, body.tick, label=body.label))

    @app.get("/branches/{branch_id}/events", response_model=EventLogOut)
    def get_events(branch_id: str) -> EventLogOut:
        branch = store.branch(branch_id)
        return EventLogOut(
            branch_id=branch_id,
            events=[
                {"injected_at_tick": injected_at, "event": event.to_dict()}
                for event, injected_at in branch.event_log_view()
            ],
        )

    @app.get("/branches/{branch_id}/timeline", response_model=TimelineOut)
    def get_timeline(
        branch_id: str,
        from_tick: int = Query(default=0, alias="from"),
        to_tick: int | None = Query(default=None, alias="to"),
    ) -> TimelineOut:
        branch = store.branch(branch_id)
        end = branch.head_tick if to_tick is None else to_tick
        records = store.prefix_history(branch_id, from_tick, end)
        return TimelineOut(
            branch_id=branch_id,
            from_tick=from_tick,
            to_tick=end,
            records=[r.to_dict() for r in records],
        )

    @app.post("/branches/{branch_id}/replay", response_model=ReplayOut)
    def replay(branch_id: str) -> ReplayOut:
        final_hash = store.replay(branch_id)
        return ReplayOut(
            branch_id=branch_id,
            head_tick=store.branch(branch_id).head_tick,
            final_state_hash=final_hash,
        )

    @app.delete("/branches/{branch_id}", response_model=DeleteOut)
    def delete_branch(branch_id: str) -> DeleteOut:
        store.delete_branch(branch_id)
        return DeleteOut(branch_id=branch_id)

    @app.get("/branches/{branch_id}/stream")
    def stream(
        branch_id: str,
        from_tick: int | None = Query(default=None, alias="from"),
    ) -> StreamingResponse:
        backlog, sub = store.subscribe(branch_id, from_tick)

        def frames():
            try:
                for record in backlog:
                    yield _sse_frame(record.to_dict())
                while not sub.closed:
                    try:
                        record = sub.q.get(timeout=HEARTBEAT_SECONDS)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield _sse_frame(record.to_dict())
            finally:
                store.unsubscribe(sub)

        return StreamingResponse(
            frames(),
            media_type="text/event-stream",
            headers={"Cache-Control": "no-cache", "X-Accel-Buffering": "no"},
        )

    # ---------- comparison sessions ----------

    @app.post("/sessions", response_model=SessionOut, status_code=201)
    def open_session(body: SessionOpenRequest) -> SessionOut:
        return SessionOut(session=sessions.open(body.left, body.right).to_dict())

    @app.get("/sessions/{session_id}", response_model=SessionOut)
    def get_session(session_id: str) -> SessionOut:
        return SessionOut(session=sessions.get(session_id).to_dict())

    @app.post("/sessions/{session_id}/control", response_model=SessionOut)
    def control_session(session_id: str, body: SessionControlRequest) -> SessionOut:
        session = sessions.control(session_id, body.side, body.action, body.n_ticks)
        return SessionOut(session=session.to_dict())

    @app.get("/sessions/{session_id}/report", response_model=ReportOut)
    def session_report(session_id: str) -> ReportOut:
        session = sessions.get(session_id)
        return ReportOut(session_id=session_id, report=report(store, session).to_dict())

    @app.get("/sessions/{session_id}/divergence", response_model=DivergenceSeriesOut)
    def session_divergence(
        session_id: str,
        commodity: str,
        epsilon: str = "0",
    ) -> DivergenceSeriesOut:
        session = sessions.get(session_id)
        try:
            threshold = Decimal(epsilon)
        except InvalidOperation:
            raise InvalidRequest(f"epsilon is not a number: {epsilon!r}") from None
        series = divergence_series(store, session, commodity)
        first = first_divergence_tick(store, session, epsilon=threshold)
        return DivergenceSeriesOut(
            session_id=session_id,
            commodity=commodity,
            series=[[tick, str(gap)] for tick, gap in series],
            first_divergence_tick=first,
        )

    return app
