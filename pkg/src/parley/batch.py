"""Headless batch runner: dimensionality sweeps with simulated tenants.

Deterministic end to end: the task sample, the tenant policy, the landlord
policy, and the synthetic compose timings all derive from the configured
seeds, so the same configuration always produces byte-identical output
files. Output: one stored log per session, a metrics table with one row per
session, and a per-dimensionality summary table.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Any, Callable, Sequence

from .agents import LLMAgent, LLMClientConfig, Opponent
from .catalog import TaskCatalog, sample_task
from .domain import Offer, PayoffMatrix, Role
from .engine import OfferTiming, Phase, SessionEngine, make_scripted_agent
from .metrics import MetricsReport, write_metrics_csv
from .policies import make_policy
from .store import SessionStore

OpponentFactory = Callable[[Sequence[PayoffMatrix], int], Opponent]


@dataclass
class BatchConfig:
    ns: Sequence[int] = (1, 3, 5, 7)
    reps: int = 20
    seed: int = 0
    policy: str = "greedy_max"
    condition: str = "decision_support"
    out_dir: Path = Path("batch-out")
    agent: str = "scripted"
    llm_endpoint: str = ""
    llm_model: str = ""
    agent_beta: float = 2.0
    agent_reservation_fraction: float = 0.25

    def opponent_factory(self) -> OpponentFactory:
        if self.agent == "llm":
            if not self.llm_endpoint or not self.llm_model:
                raise ValueError("llm agent requires llm_endpoint and llm_model")
            config = LLMClientConfig(endpoint=self.llm_endpoint, model=self.llm_model)
            return lambda matrices, seed: LLMAgent(config)
        return lambda matrices, seed: make_scripted_agent(
            matrices,
            {
                "beta": self.agent_beta,
                "reservation_fraction": self.agent_reservation_fraction,
                "seed": seed,
            },
        )


@dataclass
class SessionResult:
    metadata: dict[str, Any]
    report: MetricsReport


@dataclass
class BatchResult:
    rows: list[SessionResult] = field(default_factory=list)

    def mean_turns_by_n(self) -> dict[int, float]:
        by_n: dict[int, list[int]] = {}
        for row in self.rows:
            by_n.setdefault(row.metadata["dimensionality"], []).append(row.report.total_turns)
        return {n: fmean(turns) for n, turns in sorted(by_n.items())}


class _TimingClock:
    """Synthetic, deterministic compose timestamps for simulated tenants."""

    def __init__(self, n_issues: int, seed: int) -> None:
        self.rng = random.Random(seed ^ 0x5EED)
        self.n_issues = n_issues
        self.last_submit = 0

    def next(self) -> OfferTiming:
        received = self.last_submit + 1200
        keystroke = received + 1800 + 150 * self.n_issues + self.rng.randrange(0, 400)
        submitted = keystroke + 2500 + self.rng.randrange(0, 600)
        self.last_submit = submitted
        return OfferTiming(received, keystroke, submitted)


def run_session(
    catalog: TaskCatalog,
    n: int,
    seed: int,
    policy_name: str,
    condition: str = "decision_support",
    session_id: str | None = None,
    agent_beta: float = 2.0,
    agent_reservation_fraction: float = 0.25,
    opponent_factory: OpponentFactory | None = None,
    agent_kind: str = "scripted",
) -> tuple[SessionEngine, MetricsReport]:
    """Run one opponent-vs-policy session to a terminal phase."""
    issues, matrices = sample_task(catalog, n, seed)
    if opponent_factory is None:
        opponent = make_scripted_agent(
            matrices,
            {
                "beta": agent_beta,
                "reservation_fraction": agent_reservation_fraction,
                "seed": seed,
            },
        )
    else:
        opponent = opponent_factory(matrices, seed)
    engine = SessionEngine(
        session_id=session_id or f"{policy_name}-n{n}-s{seed}",
        issues=issues,
        matrices=matrices,
        opponent=opponent,
        condition=condition,
        agent_kind=agent_kind,
        seed=seed,
    )
    policy = make_policy(policy_name, issues, matrices, seed=seed)
    clock = _TimingClock(n, seed)
    turn_index = 0
    while not engine.phase.terminal:
        if engine.phase is Phase.AWAITING_HUMAN:
            standing = engine.standing_agent_offer
            decision = policy.decide(standing, turn_index)
            selections = dict(standing.selections) if decision is None else decision
            engine.submit_human_offer(Offer(Role.HUMAN, selections), clock.next())
            turn_index += 1
        else:
            engine.advance_agent()
    return engine, engine.finalize()


def run_batch(catalog: TaskCatalog, config: BatchConfig) -> BatchResult:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = SessionStore(out_dir / "logs")
    result = BatchResult()

    factory = config.opponent_factory()
    for n in config.ns:
        for rep in range(config.reps):
            seed = config.seed + 1000 * n + rep
            session_id = f"{config.policy}-n{n}-r{rep:03d}"
            engine, report = run_session(
                catalog,
                n,
                seed,
                config.policy,
                condition=config.condition,
                session_id=session_id,
                opponent_factory=factory,
                agent_kind=config.agent,
            )
            writer = store.open_session(engine.log)
            for record in engine.records:
                writer.append_turn(record)
            writer.finalize(engine.log, report)
            assert engine.log.outcome is not None
            result.rows.append(
                SessionResult(
                    metadata={
                        "session_id": session_id,
                        "dimensionality": n,
                        "condition": config.condition,
                        "agent_kind": config.agent,
                        "policy": config.policy,
                        "seed": seed,
                        "outcome": engine.log.outcome.kind.value,
                    },
                    report=report,
                )
            )

    with (out_dir / "metrics.csv").open("w", newline="") as fh:
        write_metrics_csv(fh, ((r.metadata, r.report) for r in result.rows))
    _write_summary(out_dir / "summary.csv", result)
    return result


def _write_summary(path: Path, result: BatchResult) -> None:
    groups: dict[int, list[SessionResult]] = {}
    for row in result.rows:
        groups.setdefault(row.metadata["dimensionality"], []).append(row)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["dimensionality", "sessions", "agreement_rate", "mean_total_turns",
             "mean_payoff_pct", "mean_sequence_entropy", "mean_chat_duration_s"]
        )
        for n in sorted(groups):
            rows = groups[n]
            agreements = sum(r.metadata["outcome"] == "agreement" for r in rows)
            writer.writerow([
                n,
                len(rows),
                round(agreements / len(rows), 4),
                round(fmean(r.report.total_turns for r in rows), 4),
                round(fmean(r.report.total_human_payoff_pct for r in rows), 4),
                round(fmean(r.report.sequence_entropy for r in rows), 4),
                round(fmean(r.report.chat_duration_s for r in rows), 4),
            ])
