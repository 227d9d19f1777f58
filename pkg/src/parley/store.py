"""Append-only session log store.

Each session lives in its own directory under the store root as a
line-delimited JSON file: one ``header`` record, one ``turn`` record per
completed turn (offer exchange, timestamps, and the belief/convergence
snapshots cut after the turn), and one ``footer`` record carrying the
outcome and final metrics. Option indices are 1-based on disk, matching
every other wire format.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from .convergence import ConvergenceSnapshot
from .domain import (
    Caps,
    SessionLog,
    decode_issue,
    decode_matrix,
    decode_outcome,
    decode_turn,
    encode_issue,
    encode_matrix,
    encode_outcome,
    encode_turn,
)
from .engine import TurnRecord
from .metrics import MetricsReport

LOG_FILENAME = "session.jsonl"


def _dump(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True)


def header_record(log: SessionLog) -> dict[str, Any]:
    return {
        "kind": "header",
        "session_id": log.session_id,
        "dimensionality": log.dimensionality,
        "condition": log.condition,
        "agent_kind": log.agent_kind,
        "agent_config": dict(log.agent_config),
        "seed": log.seed,
        "caps": {"max_rounds": log.caps.max_rounds, "max_seconds": log.caps.max_seconds},
        "issues": [encode_issue(s) for s in log.issues],
        "matrices": [encode_matrix(m) for m in log.matrices],
    }


def turn_record(record: TurnRecord) -> dict[str, Any]:
    return {
        "kind": "turn",
        "turn": encode_turn(record.turn),
        "beliefs": record.beliefs.to_wire(),
        "convergence": asdict(record.convergence),
    }


def footer_record(log: SessionLog, report: MetricsReport | None) -> dict[str, Any]:
    return {
        "kind": "footer",
        "outcome": None if log.outcome is None else encode_outcome(log.outcome),
        "metrics": None if report is None else report.to_dict(),
    }


@dataclass
class StoredSession:
    log: SessionLog
    turn_records: list[dict[str, Any]]
    metrics: dict[str, Any] | None


class SessionStore:
    """Filesystem store keyed by session id."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path_for(self, session_id: str) -> Path:
        return self.root / session_id / LOG_FILENAME

    def open_session(self, log: SessionLog) -> "SessionWriter":
        path = self.path_for(log.session_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        writer = SessionWriter(path)
        writer.append(header_record(log))
        return writer

    def read(self, session_id: str) -> StoredSession:
        return read_session_file(self.path_for(session_id))

    def session_ids(self) -> list[str]:
        return sorted(
            p.parent.name for p in self.root.glob(f"*/{LOG_FILENAME}")
        )


class SessionWriter:
    def __init__(self, path: Path) -> None:
        self.path = path
        self._finalized = False
        path.write_text("")

    def append(self, record: dict[str, Any]) -> None:
        # one retry on transient storage failure; the caller keeps the
        # in-memory log either way, so surfacing the second failure is safe
        line = _dump(record) + "\n"
        try:
            with self.path.open("a") as fh:
                fh.write(line)
        except OSError:
            with self.path.open("a") as fh:
                fh.write(line)

    def append_turn(self, record: TurnRecord) -> None:
        self.append(turn_record(record))

    def finalize(self, log: SessionLog, report: MetricsReport | None) -> None:
        """Write the footer once; repeated calls are no-ops."""
        if self._finalized:
            return
        self.append(footer_record(log, report))
        self._finalized = True


def read_session_file(path: str | Path) -> StoredSession:
    """Rebuild a ``SessionLog`` (plus stored snapshots) from a log file."""
    header: dict[str, Any] | None = None
    turns: list[dict[str, Any]] = []
    footer: dict[str, Any] | None = None
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        kind = record.get("kind")
        if kind == "header":
            header = record
        elif kind == "turn":
            turns.append(record)
        elif kind == "footer":
            footer = record
        else:
            raise ValueError(f"unknown record kind {kind!r} in {path}")
    if header is None:
        raise ValueError(f"no header record in {path}")
    outcome = None
    metrics = None
    if footer is not None:
        if footer.get("outcome") is not None:
            outcome = decode_outcome(footer["outcome"])
        metrics = footer.get("metrics")
    log = SessionLog(
        session_id=header["session_id"],
        issues=tuple(decode_issue(s) for s in header["issues"]),
        matrices=tuple(decode_matrix(m) for m in header["matrices"]),
        dimensionality=header["dimensionality"],
        condition=header["condition"],
        agent_kind=header["agent_kind"],
        agent_config=header.get("agent_config", {}),
        seed=header.get("seed", 0),
        caps=Caps(**header["caps"]),
        turns=tuple(decode_turn(t["turn"]) for t in turns),
        outcome=outcome,
    )
    return StoredSession(log=log, turn_records=turns, metrics=metrics)


def convergence_to_wire(snapshot: ConvergenceSnapshot) -> dict[str, Any]:
    return asdict(snapshot)
