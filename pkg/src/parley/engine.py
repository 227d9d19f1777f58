"""Turn-loop state machine for one negotiation session.

One engine owns one session. The human submits an offer, the opponent
counters, beliefs fold in both sides' evidence, and a belief + convergence
snapshot is cut after every completed turn. Caps (15 rounds / 900 s) and the
agreement mechanic live here: a party agrees by mirroring the other side's
standing offer on every issue.

Beliefs are computed in the baseline condition too; the condition flag only
gates what the service layer exposes, so baseline and decision-support logs
stay directly comparable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .agents import AgentFailure, Opponent, ScriptedAgent, ScriptedPolicy
from .beliefs import (
    BeliefState,
    EvidenceEvent,
    IntensityGrid,
    bayesian_update,
    init_beliefs,
    intensity_grid,
)
from .convergence import ConvergenceSnapshot, snapshot as convergence_snapshot
from .domain import (
    Caps,
    IssueSpec,
    Offer,
    Outcome,
    OutcomeKind,
    PayoffMatrix,
    Role,
    SessionLog,
    Turn,
    selections_to_wire,
)
from .metrics import MetricsReport, compute_report

R_CONCESSION_WINDOW = 3  # trailing human transitions feeding r_concession


class Phase(str, enum.Enum):
    AWAITING_HUMAN = "awaiting_human"
    AWAITING_AGENT = "awaiting_agent"
    AGREED = "agreed"
    TIMED_OUT = "timed_out"
    ABORTED = "aborted"

    @property
    def terminal(self) -> bool:
        return self in (Phase.AGREED, Phase.TIMED_OUT, Phase.ABORTED)


class PhaseError(RuntimeError):
    """An action was attempted in a phase that does not allow it."""


class OfferError(ValueError):
    """A submitted offer or its timing is malformed; state is unchanged."""


@dataclass(frozen=True)
class OfferTiming:
    received_at: int
    first_keystroke_at: int
    submitted_at: int


@dataclass(frozen=True)
class IssueBeliefSnapshot:
    issue_id: str
    pmf: tuple[float, ...]
    zopa_range: tuple[int, int] | None
    boundary_confidence: float
    c_proposal: float
    c_temporal: float
    s_consistency: float
    proposal_history: tuple[int, ...]

    def to_wire(self) -> dict[str, Any]:
        zopa = None
        if self.zopa_range is not None:
            zopa = [self.zopa_range[0] + 1, self.zopa_range[1] + 1]
        return {
            "issue_id": self.issue_id,
            "pmf": list(self.pmf),
            "zopa_range": zopa,
            "boundary_confidence": self.boundary_confidence,
            "c_proposal": self.c_proposal,
            "c_temporal": self.c_temporal,
            "s_consistency": self.s_consistency,
            "proposal_history": [j + 1 for j in self.proposal_history],
        }


@dataclass(frozen=True)
class BeliefSnapshot:
    issues: tuple[IssueBeliefSnapshot, ...]
    grid: IntensityGrid

    def to_wire(self) -> dict[str, Any]:
        return {
            "issues": [issue.to_wire() for issue in self.issues],
            "grid": {
                "issue_ids": list(self.grid.issue_ids),
                "intensities": [list(row) for row in self.grid.intensities],
                "tiers": [list(row) for row in self.grid.tiers],
            },
        }


@dataclass(frozen=True)
class TurnRecord:
    """One completed turn plus the widget state computed after it."""

    turn: Turn
    beliefs: BeliefSnapshot
    convergence: ConvergenceSnapshot


@dataclass(frozen=True)
class TurnEvent:
    record: TurnRecord
    round: int
    phase: Phase
    agreed: bool


@dataclass(frozen=True)
class EndEvent:
    outcome: Outcome
    phase: Phase


EngineEvent = TurnEvent | EndEvent


def make_scripted_agent(
    matrices: Sequence[PayoffMatrix], config: Mapping[str, Any] | None = None
) -> ScriptedAgent:
    config = dict(config or {})
    if "reservations" in config:
        policy = ScriptedPolicy(
            reservations=config["reservations"],
            beta=config.get("beta", 2.0),
            horizon=config.get("horizon", 15),
            seed=config.get("seed", 0),
        )
    else:
        policy = ScriptedPolicy.for_matrices(
            matrices,
            reservation_fraction=config.get("reservation_fraction", 0.25),
            beta=config.get("beta", 2.0),
            horizon=config.get("horizon", 15),
            seed=config.get("seed", 0),
        )
    return ScriptedAgent(policy)


class SessionEngine:
    """Owns the full lifecycle of one session; not thread-safe by itself.

    Callers serialize access per session (the service layer holds one lock
    per session; batch runs own their engines outright).
    """

    def __init__(
        self,
        session_id: str,
        issues: Sequence[IssueSpec],
        matrices: Sequence[PayoffMatrix],
        opponent: Opponent,
        condition: str = "decision_support",
        agent_kind: str = "scripted",
        caps: Caps | None = None,
        seed: int = 0,
    ) -> None:
        self.issues = tuple(issues)
        self.matrices = tuple(matrices)
        self.matrices_by_id = {m.issue_id: m for m in self.matrices}
        self.opponent = opponent
        self.caps = caps or Caps()
        self.phase = Phase.AWAITING_HUMAN
        self.round = 0
        self.beliefs: BeliefState = init_beliefs([s.issue_id for s in self.issues])
        self.records: list[TurnRecord] = []
        self._pending_offer: Offer | None = None
        self._pending_timing: OfferTiming | None = None
        self._last_agent_offer: Offer | None = None
        self._last_submitted_at = 0
        self._report: MetricsReport | None = None
        self.log = SessionLog(
            session_id=session_id,
            issues=self.issues,
            matrices=self.matrices,
            dimensionality=len(self.issues),
            condition=condition,
            agent_kind=agent_kind,
            agent_config=opponent.describe(),
            seed=seed,
            caps=self.caps,
        )

    # -- queries ------------------------------------------------------------

    @property
    def elapsed_s(self) -> float:
        return self._last_submitted_at / 1000.0

    @property
    def standing_agent_offer(self) -> Offer | None:
        """The agent's live counter-offer, which the human may mirror to agree."""
        return self._last_agent_offer

    def state_view(self) -> dict[str, Any]:
        view = {
            "session_id": self.log.session_id,
            "phase": self.phase.value,
            "round": self.round,
            "elapsed_s": self.elapsed_s,
            "dimensionality": self.log.dimensionality,
            "condition": self.log.condition,
        }
        if self._last_agent_offer is not None:
            view["standing_agent_offer"] = selections_to_wire(
                self._last_agent_offer.selections
            )
        return view

    def transcript(self) -> list[Offer]:
        offers: list[Offer] = []
        for turn in self.log.turns:
            offers.append(turn.human_offer)
            offers.append(turn.agent_offer)
        if self._pending_offer is not None:
            offers.append(self._pending_offer)
        return offers

    # -- commands -----------------------------------------------------------

    def submit_human_offer(self, offer: Offer, timing: OfferTiming) -> list[EngineEvent]:
        if self.phase is not Phase.AWAITING_HUMAN:
            raise PhaseError(f"cannot submit offer in phase {self.phase.value}")
        if self.round >= self.caps.max_rounds:
            return self._time_out("round cap reached")
        if timing.submitted_at > self.caps.max_seconds * 1000:
            return self._time_out("time cap exceeded")
        self._validate_offer(offer, timing)

        offer = Offer(Role.HUMAN, dict(offer.selections), offer.note)
        self._apply_human_evidence(offer)
        self._pending_offer = offer
        self._pending_timing = timing
        self._last_submitted_at = timing.submitted_at

        if self._last_agent_offer is not None and offer.same_selections(self._last_agent_offer):
            # acceptance by mirroring: close the turn with the agent echoing
            echo = Offer(Role.AGENT, dict(offer.selections))
            record = self._complete_turn(echo)
            self.phase = Phase.AGREED
            outcome = Outcome(OutcomeKind.AGREEMENT, selections=dict(offer.selections))
            self.log = self.log.with_outcome(outcome)
            return [
                TurnEvent(record, self.round, self.phase, agreed=True),
                EndEvent(outcome, self.phase),
            ]
        self.phase = Phase.AWAITING_AGENT
        return []

    def advance_agent(self) -> list[EngineEvent]:
        if self.phase is not Phase.AWAITING_AGENT:
            raise PhaseError(f"cannot advance agent in phase {self.phase.value}")
        assert self._pending_offer is not None
        try:
            counter = self.opponent.counter_offer(
                self.issues,
                self.matrices,
                self.round,
                self._pending_offer,
                self.transcript(),
            )
        except AgentFailure as exc:
            self.phase = Phase.ABORTED
            outcome = Outcome(OutcomeKind.ABORTED, reason=str(exc))
            self.log = self.log.with_outcome(outcome)
            self._pending_offer = None
            self._pending_timing = None
            return [EndEvent(outcome, self.phase)]

        self._validate_selections(counter.selections, "agent counter-offer")
        counter = Offer(Role.AGENT, dict(counter.selections), counter.note)
        agreed = counter.same_selections(self._pending_offer)
        self._apply_agent_evidence(counter)
        record = self._complete_turn(counter)

        events: list[EngineEvent] = []
        if agreed:
            self.phase = Phase.AGREED
            outcome = Outcome(OutcomeKind.AGREEMENT, selections=dict(counter.selections))
            self.log = self.log.with_outcome(outcome)
            events.append(TurnEvent(record, self.round, self.phase, agreed=True))
            events.append(EndEvent(outcome, self.phase))
        else:
            self._last_agent_offer = counter
            self.phase = Phase.AWAITING_HUMAN
            events.append(TurnEvent(record, self.round, self.phase, agreed=False))
        return events

    def finalize(self) -> MetricsReport:
        """Metrics for a terminal session; idempotent."""
        if not self.phase.terminal:
            raise PhaseError(f"cannot finalize in phase {self.phase.value}")
        if self._report is None:
            self._report = compute_report(self.log)
        return self._report

    # -- internals ----------------------------------------------------------

    def _validate_selections(self, selections: Mapping[str, int], where: str) -> None:
        expected = {spec.issue_id for spec in self.issues}
        if set(selections) != expected:
            raise OfferError(f"{where}: selections must cover exactly the active issues")
        for issue_id, idx in selections.items():
            if not (0 <= idx < 7):
                raise OfferError(f"{where}: index out of range ({issue_id}={idx})")

    def _validate_offer(self, offer: Offer, timing: OfferTiming) -> None:
        self._validate_selections(offer.selections, "offer")
        if not (0 <= timing.received_at <= timing.first_keystroke_at <= timing.submitted_at):
            raise OfferError("timing: timestamps must be monotone non-decreasing")
        if timing.received_at < self._last_submitted_at:
            raise OfferError("timing: received before the previous submit")

    def _human_payoff_history(self, issue_id: str) -> list[float]:
        payoffs = self.matrices_by_id[issue_id].human_payoffs
        return [payoffs[t.human_offer.selections[issue_id]] for t in self.log.turns]

    def _r_concession(self, issue_id: str, current_index: int) -> float:
        """Mean recent human concession on this issue, on a 0..1 payoff scale."""
        payoffs = self.matrices_by_id[issue_id].human_payoffs
        span = max(payoffs) - min(payoffs)
        if span <= 0:
            return 0.0
        trajectory = self._human_payoff_history(issue_id) + [payoffs[current_index]]
        drops = [
            max(0.0, before - after)
            for before, after in zip(trajectory, trajectory[1:])
        ][-R_CONCESSION_WINDOW:]
        if not drops:
            return 0.0
        return min(1.0, (sum(drops) / len(drops)) / span)

    def _apply_human_evidence(self, offer: Offer) -> None:
        turn_number = self.round + 1
        for spec in self.issues:
            event = EvidenceEvent(
                issue_id=spec.issue_id,
                proposer=Role.HUMAN,
                proposed_index=offer.selections[spec.issue_id],
                turn_number=turn_number,
                r_concession=self._r_concession(
                    spec.issue_id, offer.selections[spec.issue_id]
                ),
            )
            self.beliefs = bayesian_update(self.beliefs, event)

    def _apply_agent_evidence(self, offer: Offer) -> None:
        turn_number = self.round + 1
        for spec in self.issues:
            event = EvidenceEvent(
                issue_id=spec.issue_id,
                proposer=Role.AGENT,
                proposed_index=offer.selections[spec.issue_id],
                turn_number=turn_number,
            )
            self.beliefs = bayesian_update(self.beliefs, event)

    def _snapshot(self) -> tuple[BeliefSnapshot, ConvergenceSnapshot]:
        grid = intensity_grid(self.beliefs, self.issues, self.matrices)
        issues = tuple(
            IssueBeliefSnapshot(
                issue_id=spec.issue_id,
                pmf=self.beliefs.belief_for(spec.issue_id).pmf,
                zopa_range=self.beliefs.belief_for(spec.issue_id).zopa_range,
                boundary_confidence=self.beliefs.belief_for(spec.issue_id).boundary_confidence,
                c_proposal=self.beliefs.belief_for(spec.issue_id).c_proposal,
                c_temporal=self.beliefs.belief_for(spec.issue_id).c_temporal,
                s_consistency=self.beliefs.belief_for(spec.issue_id).s_consistency,
                proposal_history=self.beliefs.belief_for(spec.issue_id).agent_history,
            )
            for spec in self.issues
        )
        return BeliefSnapshot(issues, grid), convergence_snapshot(grid, self.matrices_by_id)

    def _complete_turn(self, agent_offer: Offer) -> TurnRecord:
        assert self._pending_offer is not None and self._pending_timing is not None
        turn = Turn(
            turn_number=self.round + 1,
            human_offer=self._pending_offer,
            agent_offer=agent_offer,
            received_at=self._pending_timing.received_at,
            first_keystroke_at=self._pending_timing.first_keystroke_at,
            submitted_at=self._pending_timing.submitted_at,
        )
        self.log = self.log.with_turn(turn)
        self.round += 1
        beliefs, convergence = self._snapshot()
        record = TurnRecord(turn, beliefs, convergence)
        self.records.append(record)
        self._pending_offer = None
        self._pending_timing = None
        return record

    def _time_out(self, reason: str) -> list[EngineEvent]:
        self.phase = Phase.TIMED_OUT
        outcome = Outcome(OutcomeKind.TIMEOUT, reason=reason)
        self.log = self.log.with_outcome(outcome)
        return [EndEvent(outcome, self.phase)]


@dataclass
class ReplayResult:
    log: SessionLog
    records: list[TurnRecord]
    report: MetricsReport


def replay_log(stored: SessionLog) -> ReplayResult:
    """Re-run a stored scripted-agent session from its human offers.

    Reproduces every turn, belief snapshot, and metric bit-for-bit; used by
    the determinism checks and by post-hoc recomputation.
    """
    if stored.agent_kind != "scripted":
        raise ValueError("only scripted-agent sessions replay deterministically")
    engine = SessionEngine(
        session_id=stored.session_id,
        issues=stored.issues,
        matrices=stored.matrices,
        opponent=make_scripted_agent(stored.matrices, stored.agent_config),
        condition=stored.condition,
        agent_kind=stored.agent_kind,
        caps=stored.caps,
        seed=stored.seed,
    )
    for turn in stored.turns:
        timing = OfferTiming(turn.received_at, turn.first_keystroke_at, turn.submitted_at)
        engine.submit_human_offer(turn.human_offer, timing)
        if engine.phase is Phase.AWAITING_AGENT:
            engine.advance_agent()
    if not engine.phase.terminal:
        if stored.outcome is not None and stored.outcome.kind is OutcomeKind.TIMEOUT:
            engine.phase = Phase.TIMED_OUT
            engine.log = engine.log.with_outcome(stored.outcome)
        else:
            raise ValueError("stored log ended mid-session without a timeout outcome")
    report = engine.finalize()
    return ReplayResult(engine.log, engine.records, report)
