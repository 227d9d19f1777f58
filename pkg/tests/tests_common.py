"""Shared log-building helper for test modules."""

from parley.domain import (
    Caps,
    IssueSpec,
    Offer,
    Outcome,
    OutcomeKind,
    PayoffMatrix,
    Role,
    SessionLog,
    Turn,
)

PAYOFFS = (5, 15, 30, 55, 80, 100, 110)
AGENT_PAYOFFS = (95, 85, 80, 65, 50, 35, 20)


def build_simple_log(issue_ids, human_picks_per_turn):
    """Minimal timed-out log: per-turn tuples of 0-based human selections."""
    issues = tuple(
        IssueSpec(i, i, tuple(f"o{k}" for k in range(7)), tau_min=55, tau_max=110)
        for i in issue_ids
    )
    matrices = tuple(PayoffMatrix(i, PAYOFFS, AGENT_PAYOFFS) for i in issue_ids)
    turns = []
    for t, picks in enumerate(human_picks_per_turn):
        selections = dict(zip(issue_ids, picks))
        base = t * 10_000
        turns.append(
            Turn(
                turn_number=t + 1,
                human_offer=Offer(Role.HUMAN, selections),
                agent_offer=Offer(Role.AGENT, selections),
                received_at=base,
                first_keystroke_at=base + 1000,
                submitted_at=base + 3000,
            )
        )
    return SessionLog(
        session_id="fuzz",
        issues=issues,
        matrices=matrices,
        dimensionality=len(issue_ids),
        turns=tuple(turns),
        outcome=Outcome(OutcomeKind.TIMEOUT),
        caps=Caps(),
    )
