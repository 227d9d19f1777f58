"""Network boundary: session lifecycle endpoints plus a per-session stream.

Lifecycle is plain request/response; turn events additionally fan out over a
WebSocket (and a polling endpoint for clients that cannot hold a socket).
Commands for one session are serialized behind a per-session lock; stream
fan-out is read-only, so many subscribers can watch one session.

Information asymmetry is enforced structurally: every tenant-facing payload
is built from ``IssueView``, which only ever sees the human payoff column.
"""

from __future__ import annotations

import asyncio
import secrets
from dataclasses import asdict
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request, WebSocket
from fastapi.responses import JSONResponse
from starlette.websockets import WebSocketDisconnect

from ..agents import LLMAgent, LLMClientConfig
from ..catalog import TaskCatalog, load_catalog, sample_task
from ..domain import (
    CANONICAL_DIMENSIONALITIES,
    Offer,
    Role,
    SessionLog,
    encode_offer,
    encode_outcome,
    selections_from_wire,
)
from ..engine import (
    EndEvent,
    OfferError,
    OfferTiming,
    Phase,
    PhaseError,
    SessionEngine,
    TurnEvent,
    make_scripted_agent,
)
from ..store import SessionStore, SessionWriter
from .schemas import (
    API_VERSION,
    CapsModel,
    CreateSessionRequest,
    Envelope,
    EventsResponse,
    IssueView,
    OfferRequest,
    OfferResponse,
    SessionCreatedResponse,
    SessionStateResponse,
)


class SessionRuntime:
    """Everything the service holds for one live session."""

    def __init__(self, engine: SessionEngine, writer: SessionWriter | None, token: str) -> None:
        self.engine = engine
        self.writer = writer
        self.token = token
        self.lock = asyncio.Lock()
        self.envelopes: list[Envelope] = []
        self.subscribers: list[asyncio.Queue[Envelope]] = []
        self._seq = 0

    def emit(self, kind: str, payload: dict) -> Envelope:
        self._seq += 1
        envelope = Envelope(
            kind=kind, session_id=self.engine.log.session_id, seq=self._seq, payload=payload
        )
        self.envelopes.append(envelope)
        for queue in list(self.subscribers):
            queue.put_nowait(envelope)
        return envelope

    def subscribe(self) -> asyncio.Queue:
        queue: asyncio.Queue[Envelope] = asyncio.Queue()
        for envelope in self.envelopes:
            queue.put_nowait(envelope)
        self.subscribers.append(queue)
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        if queue in self.subscribers:
            self.subscribers.remove(queue)


def _issue_views(log: SessionLog) -> list[IssueView]:
    views = []
    for spec in log.issues:
        matrix = log.matrix_for(spec.issue_id)
        views.append(
            IssueView(
                issue_id=spec.issue_id,
                name=spec.name,
                option_labels=list(spec.option_labels),
                human_payoffs=list(matrix.human_payoffs),
                tau_min=spec.tau_min,
                tau_max=spec.tau_max,
            )
        )
    return views


def create_app(
    catalog: TaskCatalog | None = None,
    store_dir: str | Path | None = None,
    llm_config: LLMClientConfig | None = None,
) -> FastAPI:
    app = FastAPI(title="parley negotiation service", version=API_VERSION)
    app.state.catalog = catalog or load_catalog()
    app.state.store = SessionStore(store_dir) if store_dir is not None else None
    app.state.llm_config = llm_config
    app.state.sessions = {}

    @app.middleware("http")
    async def version_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-Api-Version"] = API_VERSION
        return response

    @app.exception_handler(PhaseError)
    async def phase_error_handler(request: Request, exc: PhaseError):
        return JSONResponse(
            status_code=409, content={"error": "phase_violation", "detail": str(exc)}
        )

    @app.exception_handler(OfferError)
    async def offer_error_handler(request: Request, exc: OfferError):
        return JSONResponse(
            status_code=422, content={"error": "invalid_offer", "detail": str(exc)}
        )

    def get_runtime(
        session_id: str, x_session_token: str | None = Header(default=None)
    ) -> SessionRuntime:
        runtime = app.state.sessions.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail="unknown session")
        if x_session_token != runtime.token:
            raise HTTPException(status_code=403, detail="missing or wrong session token")
        return runtime

    @app.post("/api/v1/sessions", response_model=SessionCreatedResponse, status_code=201)
    async def create_session(request: CreateSessionRequest) -> SessionCreatedResponse:
        catalog: TaskCatalog = app.state.catalog
        if request.issue_ids:
            try:
                issues = tuple(catalog.spec_for(i) for i in request.issue_ids)
                matrices = tuple(catalog.matrix_for(i) for i in request.issue_ids)
            except KeyError as exc:
                raise HTTPException(status_code=422, detail=f"unknown issue id {exc}")
        else:
            issues, matrices = sample_task(catalog, request.dimensionality, request.seed)

        if request.agent == "llm":
            if app.state.llm_config is None:
                raise HTTPException(status_code=422, detail="service has no llm endpoint configured")
            opponent = LLMAgent(app.state.llm_config)
        else:
            opponent = make_scripted_agent(matrices, {"seed": request.seed})

        session_id = f"s-{secrets.token_hex(8)}"
        engine = SessionEngine(
            session_id=session_id,
            issues=issues,
            matrices=matrices,
            opponent=opponent,
            condition=request.condition,
            agent_kind=request.agent,
            seed=request.seed,
        )
        writer = None
        if app.state.store is not None:
            writer = app.state.store.open_session(engine.log)
        runtime = SessionRuntime(engine, writer, token=secrets.token_hex(16))
        app.state.sessions[session_id] = runtime

        n = len(issues)
        runtime.emit(
            "session_created",
            {
                "dimensionality": n,
                "condition": request.condition,
                "agent_kind": request.agent,
                "issue_ids": [spec.issue_id for spec in issues],
            },
        )
        return SessionCreatedResponse(
            session_id=session_id,
            session_token=runtime.token,
            condition=request.condition,
            dimensionality=n,
            non_canonical_dimensionality=n not in CANONICAL_DIMENSIONALITIES,
            caps=CapsModel(
                max_rounds=engine.caps.max_rounds, max_seconds=engine.caps.max_seconds
            ),
            issues=_issue_views(engine.log),
        )

    def _emit_engine_events(runtime: SessionRuntime, events) -> list[Envelope]:
        engine = runtime.engine
        decision_support = engine.log.condition == "decision_support"
        out: list[Envelope] = []
        for event in events:
            if isinstance(event, TurnEvent):
                record = event.record
                out.append(
                    runtime.emit(
                        "turn_result",
                        {
                            "turn_number": record.turn.turn_number,
                            "round": event.round,
                            "phase": event.phase.value,
                            "agreed": event.agreed,
                            "human_offer": encode_offer(record.turn.human_offer),
                            "agent_offer": encode_offer(record.turn.agent_offer),
                            "timing": {
                                "received_at_ms": record.turn.received_at,
                                "first_keystroke_at_ms": record.turn.first_keystroke_at,
                                "submitted_at_ms": record.turn.submitted_at,
                            },
                        },
                    )
                )
                if decision_support:
                    out.append(runtime.emit("belief_snapshot", record.beliefs.to_wire()))
                    out.append(
                        runtime.emit("convergence_snapshot", asdict(record.convergence))
                    )
                if runtime.writer is not None:
                    runtime.writer.append_turn(record)
            elif isinstance(event, EndEvent):
                report = engine.finalize()
                if event.phase is Phase.ABORTED:
                    out.append(
                        runtime.emit(
                            "error",
                            {"error": "agent_failure", "detail": event.outcome.reason},
                        )
                    )
                out.append(
                    runtime.emit(
                        "session_ended",
                        {
                            "outcome": encode_outcome(event.outcome),
                            "phase": event.phase.value,
                            "metrics": report.to_dict(),
                        },
                    )
                )
                if runtime.writer is not None:
                    runtime.writer.finalize(engine.log, report)
        return out

    @app.post("/api/v1/sessions/{session_id}/offers", response_model=OfferResponse)
    async def post_offer(
        session_id: str,
        request: OfferRequest,
        runtime: SessionRuntime = Depends(get_runtime),
    ) -> OfferResponse:
        async with runtime.lock:
            engine = runtime.engine
            offer = Offer(
                proposer=Role.HUMAN,
                selections=selections_from_wire(request.selections),
                note=request.note,
            )
            timing = OfferTiming(
                received_at=request.timing.received_at_ms,
                first_keystroke_at=request.timing.first_keystroke_at_ms,
                submitted_at=request.timing.submitted_at_ms,
            )
            envelopes = _emit_engine_events(runtime, engine.submit_human_offer(offer, timing))
            if engine.phase is Phase.AWAITING_AGENT:
                envelopes += _emit_engine_events(runtime, engine.advance_agent())
            return OfferResponse(envelopes=envelopes)

    @app.get("/api/v1/sessions/{session_id}", response_model=SessionStateResponse)
    async def session_state(
        session_id: str, runtime: SessionRuntime = Depends(get_runtime)
    ) -> SessionStateResponse:
        return SessionStateResponse(**runtime.engine.state_view())

    @app.get("/api/v1/sessions/{session_id}/events", response_model=EventsResponse)
    async def session_events(
        session_id: str,
        after: int = Query(default=0, ge=0),
        runtime: SessionRuntime = Depends(get_runtime),
    ) -> EventsResponse:
        return EventsResponse(
            envelopes=[e for e in runtime.envelopes if e.seq > after]
        )

    @app.get("/api/v1/sessions/{session_id}/metrics")
    async def session_metrics(
        session_id: str, runtime: SessionRuntime = Depends(get_runtime)
    ) -> dict:
        engine = runtime.engine
        if not engine.phase.terminal:
            raise HTTPException(status_code=409, detail="session still live")
        report = engine.finalize()
        assert engine.log.outcome is not None
        return {
            "session_id": session_id,
            "outcome": encode_outcome(engine.log.outcome),
            "metrics": report.to_dict(),
        }

    @app.websocket("/api/v1/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str, token: str = Query(default="")):
        runtime = app.state.sessions.get(session_id)
        if runtime is None or token != runtime.token:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        queue = runtime.subscribe()
        try:
            while True:
                envelope = await queue.get()
                await websocket.send_text(envelope.model_dump_json())
                if envelope.kind == "session_ended":
                    break
            await websocket.close()
        except WebSocketDisconnect:
            pass
        finally:
            runtime.unsubscribe(queue)

    return app
