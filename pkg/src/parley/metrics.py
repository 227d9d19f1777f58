"""Behavioral metrics computed from session logs.

Everything here is a pure function of an immutable ``SessionLog`` (plus the
per-issue Pareto structure), so metric computation can run live after each
turn and again post hoc with identical results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from statistics import fmean
from typing import IO, Any, Iterable, Mapping, Sequence

from .catalog import ParetoReport, pareto_report
from .domain import NUM_OPTIONS, Offer, OutcomeKind, Role, SessionLog


@dataclass(frozen=True)
class ConcessionStats:
    count: int
    avg_magnitude: float  # over conceding turns only; 0.0 when count == 0
    per_turn: tuple[float, ...]  # one entry per turn from the second offer on


@dataclass(frozen=True)
class MetricsReport:
    """Every objective dependent variable for one session."""

    total_human_payoff_pct: float
    joint_payoff: float
    pareto_proximity: float | None  # absent unless the session ended in agreement
    total_turns: int
    chat_duration_s: float
    avg_first_keystroke_s: float | None  # first turn excluded; absent if < 2 turns
    backtracking_count: int
    concession_count: int
    avg_concession_magnitude: float
    per_turn_concessions: tuple[float, ...]
    sequence_entropy: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_human_payoff_pct": self.total_human_payoff_pct,
            "joint_payoff": self.joint_payoff,
            "pareto_proximity": self.pareto_proximity,
            "total_turns": self.total_turns,
            "chat_duration_s": self.chat_duration_s,
            "avg_first_keystroke_s": self.avg_first_keystroke_s,
            "backtracking_count": self.backtracking_count,
            "concession_count": self.concession_count,
            "avg_concession_magnitude": self.avg_concession_magnitude,
            "per_turn_concessions": list(self.per_turn_concessions),
            "sequence_entropy": self.sequence_entropy,
        }


def _offers_by(log: SessionLog, role: Role) -> list[Offer]:
    if role is Role.HUMAN:
        return [t.human_offer for t in log.turns]
    return [t.agent_offer for t in log.turns]


def sequence_entropy(log: SessionLog) -> float:
    """Average per-issue Shannon entropy (bits) of the human's proposals."""
    offers = _offers_by(log, Role.HUMAN)
    if not offers:
        return 0.0
    entropies = []
    for issue_id in log.issue_ids():
        counts = [0] * NUM_OPTIONS
        for offer in offers:
            counts[offer.selections[issue_id]] += 1
        total = sum(counts)
        h = -sum((c / total) * math.log2(c / total) for c in counts if c)
        entropies.append(h)
    return fmean(entropies)


def concession_stats(log: SessionLog, role: Role) -> ConcessionStats:
    """Concession behavior of one party across the session.

    A turn concedes when the party's own total payoff drops relative to its
    previous offer; per-issue drops are clamped at zero so raising one's own
    payoff never offsets a concession elsewhere.
    """
    offers = _offers_by(log, role)
    per_turn: list[float] = []
    for prev, cur in zip(offers, offers[1:]):
        magnitude = 0.0
        for matrix in log.matrices:
            payoffs = matrix.human_payoffs if role is Role.HUMAN else matrix.agent_payoffs
            before = payoffs[prev.selections[matrix.issue_id]]
            after = payoffs[cur.selections[matrix.issue_id]]
            magnitude += max(0.0, before - after)
        per_turn.append(magnitude)
    conceding = [m for m in per_turn if m > 0]
    return ConcessionStats(
        count=len(conceding),
        avg_magnitude=fmean(conceding) if conceding else 0.0,
        per_turn=tuple(per_turn),
    )


def backtracking_count(log: SessionLog) -> int:
    """Human turns that return to an earlier proposal after moving away.

    Immediate repetition of the previous offer is persistence, not a return,
    and does not count.
    """
    vectors = [tuple(sorted(o.selections.items())) for o in _offers_by(log, Role.HUMAN)]
    count = 0
    for i, vec in enumerate(vectors):
        if i < 2:
            continue
        if vec != vectors[i - 1] and vec in vectors[:i]:
            count += 1
    return count


def pareto_proximity(
    log: SessionLog, reports: Sequence[ParetoReport] | Mapping[str, ParetoReport]
) -> float | None:
    """Mean per-issue joint shortfall from the joint optimum, in payoff units.

    Defined only for sessions that ended in agreement.
    """
    if log.outcome is None or log.outcome.kind is not OutcomeKind.AGREEMENT:
        return None
    if isinstance(reports, Mapping):
        by_id = dict(reports)
    else:
        by_id = {r.issue_id: r for r in reports}
    selections = log.outcome.selections or {}
    shortfalls = []
    for issue_id, idx in selections.items():
        report = by_id[issue_id]
        shortfalls.append(report.joint_optimum_value - report.joint_payoffs[idx])
    return fmean(shortfalls)


def timing_stats(log: SessionLog) -> tuple[float, float | None, int]:
    """(chat duration s, avg first-keystroke latency s, total turns).

    Duration runs from the first turn's receipt to the last submit. The
    first turn's keystroke latency is confounded with task reading and is
    excluded from the average, which is therefore absent for single-turn
    sessions.
    """
    if not log.turns:
        return 0.0, None, 0
    duration = (log.turns[-1].submitted_at - log.turns[0].received_at) / 1000.0
    latencies = [
        (t.first_keystroke_at - t.received_at) / 1000.0 for t in log.turns[1:]
    ]
    avg_latency = fmean(latencies) if latencies else None
    return duration, avg_latency, len(log.turns)


def _agreement_payoffs(log: SessionLog) -> tuple[float, float, float]:
    """(human total, agent total, human max total) at the agreement."""
    assert log.outcome is not None and log.outcome.selections is not None
    human_total = 0.0
    agent_total = 0.0
    human_max = 0.0
    for matrix in log.matrices:
        idx = log.outcome.selections[matrix.issue_id]
        human_total += matrix.human_payoffs[idx]
        agent_total += matrix.agent_payoffs[idx]
        human_max += max(matrix.human_payoffs)
    return human_total, agent_total, human_max


def compute_report(log: SessionLog) -> MetricsReport:
    """Assemble the full dependent-variable suite for one session.

    Sessions without an agreement capture no payoff: the payoff percentage
    and joint payoff are zero and the Pareto proximity is absent.
    """
    reports = {m.issue_id: pareto_report(m) for m in log.matrices}
    duration, avg_keystroke, total_turns = timing_stats(log)
    concessions = concession_stats(log, Role.HUMAN)

    if log.outcome is not None and log.outcome.kind is OutcomeKind.AGREEMENT:
        human_total, agent_total, human_max = _agreement_payoffs(log)
        payoff_pct = 100.0 * human_total / human_max if human_max else 0.0
        joint = human_total + agent_total
    else:
        payoff_pct = 0.0
        joint = 0.0

    return MetricsReport(
        total_human_payoff_pct=payoff_pct,
        joint_payoff=joint,
        pareto_proximity=pareto_proximity(log, reports),
        total_turns=total_turns,
        chat_duration_s=duration,
        avg_first_keystroke_s=avg_keystroke,
        backtracking_count=backtracking_count(log),
        concession_count=concessions.count,
        avg_concession_magnitude=concessions.avg_magnitude,
        per_turn_concessions=concessions.per_turn,
        sequence_entropy=sequence_entropy(log),
    )


METADATA_COLUMNS = ("session_id", "dimensionality", "condition", "agent_kind", "policy", "seed", "outcome")
METRIC_COLUMNS = (
    "total_human_payoff_pct",
    "joint_payoff",
    "pareto_proximity",
    "total_turns",
    "chat_duration_s",
    "avg_first_keystroke_s",
    "backtracking_count",
    "concession_count",
    "avg_concession_magnitude",
    "per_turn_concessions",
    "sequence_entropy",
)


def write_metrics_csv(
    out: IO[str], rows: Iterable[tuple[Mapping[str, Any], MetricsReport]]
) -> None:
    """One row per session: metadata columns followed by every metric field."""
    writer = csv.writer(out)
    writer.writerow(METADATA_COLUMNS + METRIC_COLUMNS)
    for metadata, report in rows:
        record = report.to_dict()
        record["per_turn_concessions"] = ";".join(
            f"{v:g}" for v in report.per_turn_concessions
        )
        values = [metadata.get(c, "") for c in METADATA_COLUMNS]
        for column in METRIC_COLUMNS:
            value = record[column]
            values.append("" if value is None else value)
        writer.writerow(values)
