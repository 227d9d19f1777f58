"""Core negotiation vocabulary: issues, payoffs, offers, turns, sessions.

All types are immutable values and safe to share across threads. Option
indices are 0-based (0..6) everywhere inside the package; every wire and
file format carries 1-based option numbers instead, with the conversion
happening in the encode/decode helpers at the bottom of this module.
Timestamps are integer milliseconds since session start, never wall clock,
so a stored session replays deterministically.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

NUM_OPTIONS = 7
MIDDLE_OPTION = 3  # 0-based index of the middle option of a 7-option issue
DEFAULT_ROUND_CAP = 15
DEFAULT_TIME_CAP_S = 900
CANONICAL_DIMENSIONALITIES = (1, 3, 5, 7)
MAX_DIMENSIONALITY = 16


class Role(str, enum.Enum):
    HUMAN = "human"
    AGENT = "agent"


class OutcomeKind(str, enum.Enum):
    AGREEMENT = "agreement"
    TIMEOUT = "timeout"
    ABORTED = "aborted"


@dataclass(frozen=True)
class IssueSpec:
    """One negotiable issue: its label set and utility-band parameters.

    ``tau_min`` / ``tau_max`` bound the human-acceptable payoff band used by
    the intensity mapping; ``xi`` is a per-issue scaling factor for the
    high-intensity tier (held at 1.0 by default).
    """

    issue_id: str
    name: str
    option_labels: tuple[str, ...]
    xi: float = 1.0
    tau_min: float = 0.0
    tau_max: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "option_labels", tuple(self.option_labels))


@dataclass(frozen=True)
class PayoffMatrix:
    """Private per-party payoffs for each of the 7 options of one issue."""

    issue_id: str
    human_payoffs: tuple[float, ...]
    agent_payoffs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "human_payoffs", tuple(self.human_payoffs))
        object.__setattr__(self, "agent_payoffs", tuple(self.agent_payoffs))


@dataclass(frozen=True)
class Offer:
    """A full selection vector: one option index (0..6) per active issue."""

    proposer: Role
    selections: Mapping[str, int]
    note: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "selections", dict(self.selections))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Offer):
            return NotImplemented
        return (
            self.proposer == other.proposer
            and dict(self.selections) == dict(other.selections)
            and self.note == other.note
        )

    def same_selections(self, other: "Offer") -> bool:
        return dict(self.selections) == dict(other.selections)


@dataclass(frozen=True)
class Turn:
    """One human proposal followed by one agent counter-proposal.

    The three timestamps are human-side compose telemetry for the turn:
    when the previous agent message was received, the first keystroke, and
    the submit. They must be monotone non-decreasing.
    """

    turn_number: int  # 1-based
    human_offer: Offer
    agent_offer: Offer
    received_at: int
    first_keystroke_at: int
    submitted_at: int


@dataclass(frozen=True)
class Caps:
    max_rounds: int = DEFAULT_ROUND_CAP
    max_seconds: int = DEFAULT_TIME_CAP_S


@dataclass(frozen=True)
class Outcome:
    kind: OutcomeKind
    selections: Mapping[str, int] | None = None  # agreement only
    reason: str = ""

    def __post_init__(self) -> None:
        if self.selections is not None:
            object.__setattr__(self, "selections", dict(self.selections))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Outcome):
            return NotImplemented
        mine = None if self.selections is None else dict(self.selections)
        theirs = None if other.selections is None else dict(other.selections)
        return self.kind == other.kind and mine == theirs and self.reason == other.reason


@dataclass(frozen=True)
class SessionLog:
    """The complete record of one negotiation session.

    ``agent_config`` captures whatever the opponent needs to be rebuilt
    bit-for-bit (policy parameters for the scripted landlord); it is what
    makes stored sessions replayable.
    """

    session_id: str
    issues: tuple[IssueSpec, ...]
    matrices: tuple[PayoffMatrix, ...]
    dimensionality: int
    condition: str = "decision_support"
    agent_kind: str = "scripted"
    agent_config: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0
    caps: Caps = field(default_factory=Caps)
    turns: tuple[Turn, ...] = ()
    outcome: Outcome | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "issues", tuple(self.issues))
        object.__setattr__(self, "matrices", tuple(self.matrices))
        object.__setattr__(self, "turns", tuple(self.turns))
        object.__setattr__(self, "agent_config", dict(self.agent_config))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SessionLog):
            return NotImplemented
        return encode_session(self) == encode_session(other)

    def matrix_for(self, issue_id: str) -> PayoffMatrix:
        for m in self.matrices:
            if m.issue_id == issue_id:
                return m
        raise KeyError(issue_id)

    def issue_ids(self) -> tuple[str, ...]:
        return tuple(spec.issue_id for spec in self.issues)

    def with_turn(self, turn: Turn) -> "SessionLog":
        return replace(self, turns=self.turns + (turn,))

    def with_outcome(self, outcome: Outcome) -> "SessionLog":
        return replace(self, outcome=outcome)


def _check_offer(
    offer: Offer, issue_ids: Iterable[str], where: str, violations: list[str]
) -> None:
    ids = set(issue_ids)
    got = set(offer.selections)
    if got != ids:
        missing = sorted(ids - got)
        extra = sorted(got - ids)
        if missing:
            violations.append(f"{where}: missing selection for issue(s) {missing}")
        if extra:
            violations.append(f"{where}: selection for unknown issue(s) {extra}")
    for issue_id, idx in offer.selections.items():
        if not (0 <= idx < NUM_OPTIONS):
            violations.append(f"{where}: index out of range ({issue_id}={idx})")


def validate_session(log: SessionLog) -> list[str]:
    """Check every structural invariant of a session log.

    Returns an empty list when the log is well-formed; otherwise one message
    per violation, each naming the offending field and the rule it breaks.
    Total function: never raises on any ``SessionLog`` value.
    """
    violations: list[str] = []

    if not (1 <= log.dimensionality <= MAX_DIMENSIONALITY):
        violations.append(f"dimensionality: {log.dimensionality} outside 1..{MAX_DIMENSIONALITY}")
    if len(log.issues) != log.dimensionality:
        violations.append(
            f"issues: {len(log.issues)} specs for dimensionality {log.dimensionality}"
        )
    if {s.issue_id for s in log.issues} != {m.issue_id for m in log.matrices}:
        violations.append("matrices: issue ids do not match issue specs")

    for spec in log.issues:
        if len(spec.option_labels) != NUM_OPTIONS:
            violations.append(
                f"issue {spec.issue_id}: {len(spec.option_labels)} option labels, expected {NUM_OPTIONS}"
            )
        if spec.xi <= 0:
            violations.append(f"issue {spec.issue_id}: xi must be > 0")
        if not (0 <= spec.tau_min <= spec.tau_max):
            violations.append(f"issue {spec.issue_id}: requires 0 <= tau_min <= tau_max")
    for matrix in log.matrices:
        for side, payoffs in (("human", matrix.human_payoffs), ("agent", matrix.agent_payoffs)):
            if len(payoffs) != NUM_OPTIONS:
                violations.append(
                    f"matrix {matrix.issue_id}: {len(payoffs)} {side} payoffs, expected {NUM_OPTIONS}"
                )
            if any(p < 0 for p in payoffs):
                violations.append(f"matrix {matrix.issue_id}: negative {side} payoff")

    if len(log.turns) > log.caps.max_rounds:
        violations.append(
            f"turns: round cap exceeded ({len(log.turns)} > {log.caps.max_rounds})"
        )
    issue_ids = log.issue_ids()
    prev_submitted = None
    for turn in log.turns:
        where = f"turn {turn.turn_number}"
        if not (turn.received_at <= turn.first_keystroke_at <= turn.submitted_at):
            violations.append(f"{where}: timestamps not monotone")
        if prev_submitted is not None and turn.received_at < prev_submitted:
            violations.append(f"{where}: received before previous submit")
        prev_submitted = turn.submitted_at
        if turn.submitted_at > log.caps.max_seconds * 1000:
            violations.append(f"{where}: time cap exceeded")
        _check_offer(turn.human_offer, issue_ids, f"{where} human offer", violations)
        _check_offer(turn.agent_offer, issue_ids, f"{where} agent offer", violations)
        if turn.human_offer.proposer is not Role.HUMAN:
            violations.append(f"{where}: human offer has proposer {turn.human_offer.proposer.value}")
        if turn.agent_offer.proposer is not Role.AGENT:
            violations.append(f"{where}: agent offer has proposer {turn.agent_offer.proposer.value}")

    if log.outcome is None:
        violations.append("outcome: missing (must be present exactly once)")
    elif log.outcome.kind is OutcomeKind.AGREEMENT:
        if log.outcome.selections is None:
            violations.append("outcome: agreement without selections")
        else:
            agreement = Offer(Role.HUMAN, log.outcome.selections)
            _check_offer(agreement, issue_ids, "outcome agreement", violations)
    return violations


# ---------------------------------------------------------------------------
# Wire/file serialization. 0-based indices become 1-based option numbers here.
# ---------------------------------------------------------------------------

def selections_to_wire(selections: Mapping[str, int]) -> dict[str, int]:
    return {issue_id: idx + 1 for issue_id, idx in selections.items()}


def selections_from_wire(selections: Mapping[str, int]) -> dict[str, int]:
    return {issue_id: num - 1 for issue_id, num in selections.items()}


def encode_offer(offer: Offer) -> dict[str, Any]:
    return {
        "proposer": offer.proposer.value,
        "selections": selections_to_wire(offer.selections),
        "note": offer.note,
    }


def decode_offer(data: Mapping[str, Any]) -> Offer:
    return Offer(
        proposer=Role(data["proposer"]),
        selections=selections_from_wire(data["selections"]),
        note=data.get("note", ""),
    )


def encode_turn(turn: Turn) -> dict[str, Any]:
    return {
        "turn_number": turn.turn_number,
        "human_offer": encode_offer(turn.human_offer),
        "agent_offer": encode_offer(turn.agent_offer),
        "received_at": turn.received_at,
        "first_keystroke_at": turn.first_keystroke_at,
        "submitted_at": turn.submitted_at,
    }


def decode_turn(data: Mapping[str, Any]) -> Turn:
    return Turn(
        turn_number=data["turn_number"],
        human_offer=decode_offer(data["human_offer"]),
        agent_offer=decode_offer(data["agent_offer"]),
        received_at=data["received_at"],
        first_keystroke_at=data["first_keystroke_at"],
        submitted_at=data["submitted_at"],
    )


def encode_issue(spec: IssueSpec) -> dict[str, Any]:
    return {
        "issue_id": spec.issue_id,
        "name": spec.name,
        "option_labels": list(spec.option_labels),
        "xi": spec.xi,
        "tau_min": spec.tau_min,
        "tau_max": spec.tau_max,
    }


def decode_issue(data: Mapping[str, Any]) -> IssueSpec:
    return IssueSpec(
        issue_id=data["issue_id"],
        name=data["name"],
        option_labels=tuple(data["option_labels"]),
        xi=data.get("xi", 1.0),
        tau_min=data["tau_min"],
        tau_max=data["tau_max"],
    )


def encode_matrix(matrix: PayoffMatrix) -> dict[str, Any]:
    return {
        "issue_id": matrix.issue_id,
        "human_payoffs": list(matrix.human_payoffs),
        "agent_payoffs": list(matrix.agent_payoffs),
    }


def decode_matrix(data: Mapping[str, Any]) -> PayoffMatrix:
    return PayoffMatrix(
        issue_id=data["issue_id"],
        human_payoffs=tuple(data["human_payoffs"]),
        agent_payoffs=tuple(data["agent_payoffs"]),
    )


def encode_outcome(outcome: Outcome) -> dict[str, Any]:
    data: dict[str, Any] = {"kind": outcome.kind.value}
    if outcome.selections is not None:
        data["selections"] = selections_to_wire(outcome.selections)
    if outcome.reason:
        data["reason"] = outcome.reason
    return data


def decode_outcome(data: Mapping[str, Any]) -> Outcome:
    selections = data.get("selections")
    return Outcome(
        kind=OutcomeKind(data["kind"]),
        selections=None if selections is None else selections_from_wire(selections),
        reason=data.get("reason", ""),
    )


def encode_session(log: SessionLog) -> dict[str, Any]:
    return {
        "session_id": log.session_id,
        "issues": [encode_issue(s) for s in log.issues],
        "matrices": [encode_matrix(m) for m in log.matrices],
        "dimensionality": log.dimensionality,
        "condition": log.condition,
        "agent_kind": log.agent_kind,
        "agent_config": dict(log.agent_config),
        "seed": log.seed,
        "caps": {"max_rounds": log.caps.max_rounds, "max_seconds": log.caps.max_seconds},
        "turns": [encode_turn(t) for t in log.turns],
        "outcome": None if log.outcome is None else encode_outcome(log.outcome),
    }


def decode_session(data: Mapping[str, Any]) -> SessionLog:
    outcome = data.get("outcome")
    return SessionLog(
        session_id=data["session_id"],
        issues=tuple(decode_issue(s) for s in data["issues"]),
        matrices=tuple(decode_matrix(m) for m in data["matrices"]),
        dimensionality=data["dimensionality"],
        condition=data.get("condition", "decision_support"),
        agent_kind=data.get("agent_kind", "scripted"),
        agent_config=data.get("agent_config", {}),
        seed=data.get("seed", 0),
        caps=Caps(**data["caps"]),
        turns=tuple(decode_turn(t) for t in data["turns"]),
        outcome=None if outcome is None else decode_outcome(outcome),
    )


def session_to_json(log: SessionLog) -> str:
    return json.dumps(encode_session(log), sort_keys=True)


def session_from_json(text: str) -> SessionLog:
    return decode_session(json.loads(text))
