import math
import random

import pytest

from parley.catalog import pareto_report
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
from parley.metrics import (
    backtracking_count,
    compute_report,
    concession_stats,
    pareto_proximity,
    sequence_entropy,
    timing_stats,
)

TABLE1_HUMAN = (5, 15, 30, 55, 80, 100, 110)
TABLE1_AGENT = (95, 85, 80, 65, 50, 35, 20)


def build_log(human_picks, agent_picks=None, issue_ids=("u",), outcome=None, step_ms=10_000):
    """Single- or multi-issue log from per-turn selection lists."""
    issues = tuple(
        IssueSpec(i, i, tuple(f"o{k}" for k in range(7)), tau_min=55, tau_max=110)
        for i in issue_ids
    )
    matrices = tuple(PayoffMatrix(i, TABLE1_HUMAN, TABLE1_AGENT) for i in issue_ids)
    agent_picks = agent_picks or human_picks
    turns = []
    for t, (hp, ap) in enumerate(zip(human_picks, agent_picks)):
        base = t * step_ms
        turns.append(
            Turn(
                turn_number=t + 1,
                human_offer=Offer(Role.HUMAN, dict(zip(issue_ids, hp))),
                agent_offer=Offer(Role.AGENT, dict(zip(issue_ids, ap))),
                received_at=base,
                first_keystroke_at=base + 2000,
                submitted_at=base + 5000,
            )
        )
    return SessionLog(
        session_id="m-1",
        issues=issues,
        matrices=matrices,
        dimensionality=len(issue_ids),
        turns=tuple(turns),
        outcome=outcome,
        caps=Caps(),
    )


# -- sequence entropy -----------------------------------------------------------

def test_entropy_constant_proposals_is_zero():
    log = build_log([(3,), (3,), (3,)])
    assert sequence_entropy(log) == 0.0


def test_entropy_uniform_proposals_is_log2_seven():
    log = build_log([(j,) for j in range(7)])
    assert sequence_entropy(log) == pytest.approx(math.log2(7))


def test_entropy_worked_two_value_history():
    # options split 2/5 and 3/5 across five proposals
    log = build_log([(3,), (4,), (3,), (4,), (4,)])
    assert sequence_entropy(log) == pytest.approx(0.971, abs=1e-3)


def test_entropy_invariant_under_option_relabeling():
    rng = random.Random(5)
    picks = [(rng.randrange(7),) for _ in range(9)]
    log = build_log(picks)
    permutation = list(range(7))
    rng.shuffle(permutation)
    relabeled = build_log([(permutation[p[0]],) for p in picks])
    assert sequence_entropy(log) == pytest.approx(sequence_entropy(relabeled))


def test_entropy_averages_across_issues():
    log = build_log(
        [(0, 3), (0, 4), (0, 3), (0, 4), (0, 4)], issue_ids=("a", "b")
    )
    assert sequence_entropy(log) == pytest.approx((0.0 + 0.9709505944546686) / 2)


# -- concessions ---------------------------------------------------------------

def test_concession_from_best_to_second_best():
    log = build_log([(6,), (5,)])
    stats = concession_stats(log, Role.HUMAN)
    assert stats.per_turn == (10.0,)  # 110 -> 100
    assert stats.count == 1
    assert stats.avg_magnitude == 10.0


def test_no_concessions_reports_zero():
    log = build_log([(4,), (4,), (4,)])
    stats = concession_stats(log, Role.HUMAN)
    assert stats.count == 0
    assert stats.avg_magnitude == 0.0
    assert stats.per_turn == (0.0, 0.0)


def test_raising_own_payoff_is_not_a_concession():
    log = build_log([(3,), (6,)])
    stats = concession_stats(log, Role.HUMAN)
    assert stats.per_turn == (0.0,)
    assert stats.count == 0


def test_concessions_clamped_per_issue():
    # one issue concedes 20 (80->60... option 4->3 is 80->55=25), other gains
    log = build_log([(4, 2), (3, 5)], issue_ids=("a", "b"))
    stats = concession_stats(log, Role.HUMAN)
    assert stats.per_turn == (25.0,)  # gain on issue b does not offset


def test_agent_concessions_use_agent_payoffs():
    log = build_log([(0,), (0,)], agent_picks=[(0,), (2,)])
    stats = concession_stats(log, Role.AGENT)
    assert stats.per_turn == (15.0,)  # 95 -> 80


# -- backtracking ----------------------------------------------------------------

def test_backtracking_single_return():
    log = build_log([(1,), (2,), (1,)])
    assert backtracking_count(log) == 1


def test_backtracking_novel_offers_zero():
    log = build_log([(0,), (1,), (2,), (3,)])
    assert backtracking_count(log) == 0


def test_backtracking_repetition_is_not_return():
    log = build_log([(2,), (2,), (2,)])
    assert backtracking_count(log) == 0


# -- pareto proximity --------------------------------------------------------------

def test_proximity_zero_on_frontier_optimum():
    log = build_log(
        [(5,)], outcome=Outcome(OutcomeKind.AGREEMENT, selections={"u": 5})
    )
    reports = [pareto_report(m) for m in log.matrices]
    assert pareto_proximity(log, reports) == 0.0


def test_proximity_midpoint_leaves_fifteen():
    log = build_log(
        [(3,)], outcome=Outcome(OutcomeKind.AGREEMENT, selections={"u": 3})
    )
    reports = [pareto_report(m) for m in log.matrices]
    assert pareto_proximity(log, reports) == 15.0


def test_proximity_averages_across_issues():
    log = build_log(
        [(3, 4)],
        issue_ids=("a", "b"),
        outcome=Outcome(OutcomeKind.AGREEMENT, selections={"a": 3, "b": 4}),
    )
    reports = [pareto_report(m) for m in log.matrices]
    # shortfalls 15 (joint 120) and 5 (joint 130)
    assert pareto_proximity(log, reports) == 10.0


def test_proximity_absent_on_timeout():
    log = build_log([(3,)], outcome=Outcome(OutcomeKind.TIMEOUT))
    reports = [pareto_report(m) for m in log.matrices]
    assert pareto_proximity(log, reports) is None


# -- timing --------------------------------------------------------------------

def test_first_turn_latency_excluded():
    log = build_log([(1,), (1,)])
    _, avg, _ = timing_stats(log)
    assert avg == pytest.approx(2.0)


def test_duration_is_first_receipt_to_last_submit():
    log = build_log([(1,)], step_ms=0)
    duration, avg, turns = timing_stats(log)
    assert duration == 5.0
    assert avg is None
    assert turns == 1


def test_latency_mean_over_later_turns():
    turns = []
    latencies = [9999, 2000, 4000, 6000]
    clock = 0
    for t, lat in enumerate(latencies):
        received = clock
        turns.append(
            Turn(
                turn_number=t + 1,
                human_offer=Offer(Role.HUMAN, {"u": 1}),
                agent_offer=Offer(Role.AGENT, {"u": 1}),
                received_at=received,
                first_keystroke_at=received + lat,
                submitted_at=received + lat + 1000,
            )
        )
        clock = received + lat + 1000
    base = build_log([(1,)])
    log = SessionLog(
        session_id="m-2",
        issues=base.issues,
        matrices=base.matrices,
        dimensionality=1,
        turns=tuple(turns),
        outcome=Outcome(OutcomeKind.TIMEOUT),
    )
    _, avg, _ = timing_stats(log)
    assert avg == pytest.approx(4.0)


# -- full report ------------------------------------------------------------------

def test_report_full_payoff_at_human_max():
    log = build_log(
        [(6, 6)],
        issue_ids=("a", "b"),
        outcome=Outcome(OutcomeKind.AGREEMENT, selections={"a": 6, "b": 6}),
    )
    report = compute_report(log)
    assert report.total_human_payoff_pct == 100.0
    assert report.joint_payoff == 2 * (110 + 20)


def test_report_joint_payoff_additive():
    log = build_log(
        [(5, 3)],
        issue_ids=("a", "b"),
        outcome=Outcome(OutcomeKind.AGREEMENT, selections={"a": 5, "b": 3}),
    )
    report = compute_report(log)
    assert report.joint_payoff == 135 + 120


def test_report_timeout_has_no_agreement_fields():
    log = build_log([(5,)], outcome=Outcome(OutcomeKind.TIMEOUT))
    report = compute_report(log)
    assert report.pareto_proximity is None
    assert report.total_human_payoff_pct == 0.0
    assert report.total_turns == 1
    assert report.chat_duration_s > 0


def test_report_entropy_within_bounds():
    rng = random.Random(11)
    picks = [(rng.randrange(7),) for _ in range(12)]
    log = build_log(picks, outcome=Outcome(OutcomeKind.TIMEOUT))
    report = compute_report(log)
    assert 0.0 <= report.sequence_entropy <= math.log2(7)


def test_concession_magnitudes_nonnegative_and_sum_bounded():
    rng = random.Random(23)
    for _ in range(50):
        picks = [
            (rng.randrange(7), rng.randrange(7))
            for _ in range(rng.randint(2, 10))
        ]
        log = build_log(picks, issue_ids=("a", "b"), outcome=Outcome(OutcomeKind.TIMEOUT))
        stats = concession_stats(log, Role.HUMAN)
        assert all(m >= 0.0 for m in stats.per_turn)
        positive = [m for m in stats.per_turn if m > 0]
        assert stats.count == len(positive)
        if positive:
            assert sum(positive) >= stats.count * min(positive)
            assert stats.avg_magnitude == pytest.approx(sum(positive) / len(positive))
