"""Request/response models for the negotiation service.

This module is the documented wire contract. All option references are
1-based option numbers on the wire; each session's event stream is a
sequence of envelopes with a strictly increasing ``seq``. The tenant-facing
payloads never include the landlord's payoff column.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

API_VERSION = "1"

EnvelopeKind = Literal[
    "session_created",
    "turn_result",
    "belief_snapshot",
    "convergence_snapshot",
    "session_ended",
    "error",
]


class Envelope(BaseModel):
    kind: EnvelopeKind
    session_id: str
    seq: int
    payload: dict[str, Any]


class TimingModel(BaseModel):
    received_at_ms: int = Field(ge=0)
    first_keystroke_at_ms: int = Field(ge=0)
    submitted_at_ms: int = Field(ge=0)


class CreateSessionRequest(BaseModel):
    dimensionality: int = Field(default=7, ge=1, le=16)
    condition: Literal["baseline", "decision_support"] = "decision_support"
    agent: Literal["scripted", "llm"] = "scripted"
    seed: int = 0
    issue_ids: list[str] | None = None  # explicit subset instead of seeded sampling


class IssueView(BaseModel):
    """Tenant-visible issue description: labels and the tenant's own payoffs."""

    issue_id: str
    name: str
    option_labels: list[str]
    human_payoffs: list[float]
    tau_min: float
    tau_max: float


class CapsModel(BaseModel):
    max_rounds: int
    max_seconds: int


class SessionCreatedResponse(BaseModel):
    session_id: str
    session_token: str
    api_version: str = API_VERSION
    condition: str
    dimensionality: int
    non_canonical_dimensionality: bool
    caps: CapsModel
    issues: list[IssueView]


class OfferRequest(BaseModel):
    selections: dict[str, int]  # issue_id -> option number (1-based)
    note: str = ""
    timing: TimingModel


class OfferResponse(BaseModel):
    """Envelopes generated by this turn, in stream order."""

    envelopes: list[Envelope]


class SessionStateResponse(BaseModel):
    session_id: str
    phase: str
    round: int
    elapsed_s: float
    dimensionality: int
    condition: str
    standing_agent_offer: dict[str, int] | None = None


class EventsResponse(BaseModel):
    envelopes: list[Envelope]


class ErrorBody(BaseModel):
    error: str
    detail: str
