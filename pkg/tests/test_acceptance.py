"""Acceptance gate: every release criterion at its pinned tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to get one pass/fail line
per criterion. Each test prints its line only after all of its assertions
hold, so a printed PASS is trustworthy.
"""

import itertools
import json
import math
import random
import time
import warnings

import pytest
from fastapi.testclient import TestClient

from _oracle import OracleEvent, oracle_pmfs
from parley.batch import BatchConfig, run_batch, run_session
from parley.beliefs import (
    DegenerateEvidenceWarning,
    EvidenceEvent,
    adaptive_weight,
    bayesian_update,
    boundary_confidence,
    consistency_score,
    init_beliefs,
    intensity_for_option,
    intensity_grid,
    posterior_update,
    zopa_bounds,
)
from parley.catalog import load_catalog, pareto_report, sample_task
from parley.convergence import convergence_ratio, snapshot, width_from_ratio
from parley.domain import IssueSpec, Offer, OutcomeKind, PayoffMatrix, Role
from parley.engine import replay_log
from parley.metrics import METADATA_COLUMNS, METRIC_COLUMNS, sequence_entropy
from parley.service import create_app
from parley.store import SessionStore, footer_record, header_record, turn_record
from tests_common import build_simple_log  # noqa: F401  (helper lives beside tests)

CATALOG = load_catalog()

APPENDIX_HISTORY = (3, 4, 3, 4, 4)
APPENDIX_PRIOR = (0.10, 0.12, 0.15, 0.22, 0.25, 0.10, 0.06)


def announce(line: str) -> None:
    print(f"ACCEPTANCE PASS: {line}")


# -- criterion 1: golden conformance ------------------------------------------------


def test_criterion_appendix_conformance_values():
    started = time.perf_counter()

    confidence = boundary_confidence(APPENDIX_HISTORY)
    assert confidence == pytest.approx(0.92, abs=0.01)

    scores = consistency_score(APPENDIX_HISTORY)
    assert scores.s_consistency == pytest.approx(0.86, abs=0.02)

    weight = adaptive_weight(Role.AGENT, s_consistency=scores.s_consistency)
    assert weight == 1.0

    bounds = zopa_bounds(APPENDIX_HISTORY)
    posterior, total = posterior_update(
        APPENDIX_PRIOR, set(APPENDIX_HISTORY), 1.0, bounds[2], confidence, weight
    )
    eta = 1.0 / total
    assert eta == pytest.approx(2.59, abs=0.01)
    assert posterior[4] == pytest.approx(0.52, abs=0.01)
    assert posterior[3] == pytest.approx(0.45, abs=0.01)

    spec = CATALOG.spec_for("utilities_included")
    human = CATALOG.matrix_for("utilities_included").human_payoffs
    bright, _ = intensity_for_option(
        posterior[4], True, human[4], spec, confidence, scores.s_consistency
    )
    assert bright == 0.6
    dark, _ = intensity_for_option(
        posterior[1], False, human[1], spec, confidence, scores.s_consistency
    )
    assert dark == 0.0

    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    announce(
        "golden conformance: confidence 0.92±0.01, s 0.86±0.02, W=1.0, "
        f"eta 2.59±0.01, posteriors 0.52/0.45±0.01, intensities 0.6/0 exact ({elapsed * 1000:.0f} ms)"
    )


def test_criterion_conformance_command_green():
    from parley.conformance import run_appendix_conformance

    started = time.perf_counter()
    report = run_appendix_conformance()
    elapsed = time.perf_counter() - started
    assert report.passed, report.describe()
    assert elapsed < 1.0
    announce(f"conformance command: {len(report.checks)} checks green in {elapsed * 1000:.0f} ms")


# -- criterion 2: table fixture ------------------------------------------------------


def test_criterion_table1_fixture_exact():
    matrix = CATALOG.matrix_for("utilities_included")
    report = pareto_report(matrix)
    assert report.joint_payoffs == (100, 100, 110, 120, 130, 135, 130)
    assert report.joint_optimum_index == 5
    assert report.joint_optimum_value == 135
    assert report.joint_optimum_value - report.joint_payoffs[3] == 15
    announce("table fixture: joint payoffs exact, optimum option 6 = 135, midpoint shortfall 15")


# -- criterion 3: property suites ----------------------------------------------------


def test_criterion_pmf_normalization_10k_fuzz():
    rng = random.Random(314159)
    issue_ids = ["a", "b", "c"]
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEvidenceWarning)
        for _ in range(10_000):
            state = init_beliefs(issue_ids)
            for turn in range(rng.randint(1, 6)):
                event = EvidenceEvent(
                    issue_id=rng.choice(issue_ids),
                    proposer=rng.choice([Role.HUMAN, Role.AGENT]),
                    proposed_index=rng.randrange(7),
                    turn_number=turn + 1,
                    r_concession=rng.random(),
                )
                state = bayesian_update(state, event)
                for issue_id in issue_ids:
                    pmf = state.belief_for(issue_id).pmf
                    assert abs(sum(pmf) - 1.0) <= 1e-9
                    assert all(0.0 <= p <= 1.0 for p in pmf)
                    checked += 1
    announce(f"pmf normalization within 1e-9 across 10k fuzzed sequences ({checked} checks)")


def engine_pmfs(issue_ids, events):
    state = init_beliefs(issue_ids)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateEvidenceWarning)
        for turn, event in enumerate(events, start=1):
            state = bayesian_update(
                state,
                EvidenceEvent(
                    event.issue_id,
                    Role.AGENT if event.proposer == "agent" else Role.HUMAN,
                    event.index,
                    turn,
                    r_concession=event.r_concession,
                ),
            )
    return {issue_id: state.belief_for(issue_id).pmf for issue_id in issue_ids}


def test_criterion_brute_force_oracle_equivalence():
    """Exhaustive over 1-issue agent histories up to length 3 (400 cases),
    plus 3000 seeded mixed-role histories of length <= 5 over 3 issues."""
    cases = 0
    for length in (1, 2, 3):
        for combo in itertools.product(range(7), repeat=length):
            events = [OracleEvent("a", "agent", j) for j in combo]
            mine = engine_pmfs(["a"], events)
            reference = oracle_pmfs(["a"], events)
            assert all(
                abs(x - y) <= 1e-9 for x, y in zip(mine["a"], reference["a"])
            )
            cases += 1
    rng = random.Random(271828)
    issue_ids = ["a", "b", "c"]
    for _ in range(3000):
        events = [
            OracleEvent(
                rng.choice(issue_ids),
                rng.choice(["human", "agent"]),
                rng.randrange(7),
                round(rng.random(), 3),
            )
            for _ in range(rng.randint(1, 5))
        ]
        mine = engine_pmfs(issue_ids, events)
        reference = oracle_pmfs(issue_ids, events)
        for issue_id in issue_ids:
            assert all(
                abs(x - y) <= 1e-9
                for x, y in zip(mine[issue_id], reference[issue_id])
            )
        cases += 1
    announce(f"incremental engine matches straight-line oracle within 1e-9 ({cases} histories)")


def test_criterion_entropy_bounds_and_permutation_invariance():
    rng = random.Random(777)
    for _ in range(1000):
        n = rng.choice([1, 2, 3])
        ids = [f"i{k}" for k in range(n)]
        picks = [
            tuple(rng.randrange(7) for _ in range(n))
            for _ in range(rng.randint(1, 10))
        ]
        log = build_simple_log(ids, picks)
        h = sequence_entropy(log)
        assert 0.0 <= h <= math.log2(7) + 1e-12
        permutation = list(range(7))
        rng.shuffle(permutation)
        relabeled = build_simple_log(
            ids, [tuple(permutation[j] for j in row) for row in picks]
        )
        assert sequence_entropy(relabeled) == pytest.approx(h, abs=1e-12)
    announce("entropy within [0, log2 7] and permutation-invariant over 1k fuzzed logs")


def grid_with_green(n, green):
    from parley.beliefs import IntensityGrid

    tiers = []
    remaining = green
    for _ in range(n):
        row = [1 if (remaining - k) > 0 else 0 for k in range(7)]
        remaining = max(0, remaining - 7)
        tiers.append(tuple(row))
    return IntensityGrid(
        issue_ids=tuple(f"i{k}" for k in range(n)),
        intensities=tuple(tuple(0.4 * t for t in row) for row in tiers),
        tiers=tuple(tiers),
        zopa_ranges={f"i{k}": (0, 6) for k in range(n)},
    )


def test_criterion_convergence_width_bounds_and_monotonicity():
    # exhaustive at n=1
    widths = [
        width_from_ratio(convergence_ratio(grid_with_green(1, g))) for g in range(8)
    ]
    assert widths == sorted(widths)
    assert all(100 / 7 <= w <= 100.0 for w in widths)
    # sampled at n=7
    rng = random.Random(55)
    for _ in range(500):
        a, b = sorted((rng.randint(0, 49), rng.randint(0, 49)))
        w_a = width_from_ratio(convergence_ratio(grid_with_green(7, a)))
        w_b = width_from_ratio(convergence_ratio(grid_with_green(7, b)))
        assert w_a <= w_b
        assert 100 / 7 <= w_a <= 100.0 and 100 / 7 <= w_b <= 100.0
    announce("convergence width in [100/7, 100], monotone in green cells (exhaustive n=1, sampled n=7)")


def test_criterion_replay_determinism_100_sessions(tmp_path):
    store = SessionStore(tmp_path)
    policies = ["greedy_max", "midpoint_anchor", "explorer"]
    ns = [1, 3, 5, 7]
    stored_ids = []
    count = 0
    for index in range(100):
        n = ns[index % 4]
        policy = policies[index % 3]
        engine, report = run_session(
            CATALOG, n, seed=9000 + index, policy_name=policy,
            session_id=f"replay-{index:03d}",
        )
        writer = store.open_session(engine.log)
        for record in engine.records:
            writer.append_turn(record)
        writer.finalize(engine.log, report)
        stored_ids.append(engine.log.session_id)
        count += 1
    for session_id in stored_ids:
        stored = store.read(session_id)
        result = replay_log(stored.log)
        lines = [json.dumps(header_record(result.log), sort_keys=True)]
        lines += [json.dumps(turn_record(r), sort_keys=True) for r in result.records]
        lines.append(json.dumps(footer_record(result.log, result.report), sort_keys=True))
        assert store.path_for(session_id).read_text() == "\n".join(lines) + "\n"
    announce(f"replay determinism: {count} stored scripted sessions replay bit-identically")


def _drive_session_over_api(client, n, seed, captured):
    from parley.policies import make_policy

    response = client.post(
        "/api/v1/sessions",
        json={"dimensionality": n, "condition": "decision_support", "seed": seed},
    )
    captured.append(response.text)
    session = response.json()
    sid, token = session["session_id"], session["session_token"]
    headers = {"X-Session-Token": token}
    issue_ids = [i["issue_id"] for i in session["issues"]]
    issues, matrices = sample_task(CATALOG, n, seed)
    policy = make_policy("greedy_max", issues, matrices, seed=seed)
    standing = None
    clock = 0
    with client.websocket_connect(f"/api/v1/sessions/{sid}/stream?token={token}") as ws:
        for turn_index in range(16):
            decision = policy.decide(standing, turn_index)
            selections = (
                {i: standing.selections[i] + 1 for i in issue_ids}
                if decision is None
                else {i: decision[i] + 1 for i in issue_ids}
            )
            response = client.post(
                f"/api/v1/sessions/{sid}/offers",
                headers=headers,
                json={
                    "selections": selections,
                    "timing": {
                        "received_at_ms": clock,
                        "first_keystroke_at_ms": clock + 1000,
                        "submitted_at_ms": clock + 4000,
                    },
                },
            )
            captured.append(response.text)
            clock += 10_000
            ended = False
            for envelope in response.json().get("envelopes", []):
                captured.append(ws.receive_text())  # mirror of the same envelope
                if envelope["kind"] == "turn_result":
                    standing = Offer(
                        Role.AGENT,
                        {
                            k: v - 1
                            for k, v in envelope["payload"]["agent_offer"]["selections"].items()
                        },
                    )
                ended = ended or envelope["kind"] == "session_ended"
            if ended:
                break
        events = client.get(f"/api/v1/sessions/{sid}/events", headers=headers)
        captured.append(events.text)
    return sid, {m.issue_id: m.agent_payoffs for m in matrices}


def _contains_column(node, column):
    if isinstance(node, list):
        if len(node) == 7 and all(isinstance(x, (int, float)) for x in node):
            if tuple(float(x) for x in node) == column:
                return True
        return any(_contains_column(x, column) for x in node)
    if isinstance(node, dict):
        return any(_contains_column(v, column) for v in node.values())
    return False


def test_criterion_information_asymmetry_leak_scan(tmp_path):
    app = create_app(store_dir=tmp_path / "sessions")
    captured: list[str] = []
    agent_columns = {}
    with TestClient(app) as client:
        for n in (1, 3, 5, 7):
            for rep in range(5):
                sid, columns = _drive_session_over_api(client, n, 5000 + rep, captured)
                agent_columns[sid] = columns
    assert len(captured) > 100
    scanned = 0
    for text in captured:
        payload = json.loads(text)
        for columns in agent_columns.values():
            for column in columns.values():
                target = tuple(float(x) for x in column)
                assert not _contains_column(payload, target)
                rendered = json.dumps(list(column))
                assert rendered not in text
                scanned += 1
    announce(
        f"information asymmetry: zero agent payoff columns in {len(captured)} "
        f"captured API payloads ({scanned} column scans)"
    )


# -- criterion 4: performance --------------------------------------------------------


def test_criterion_snapshot_latency_n7():
    issues, matrices = sample_task(CATALOG, 7, seed=1)
    matrices_by_id = {m.issue_id: m for m in matrices}
    issue_ids = [s.issue_id for s in issues]
    durations = []
    rng = random.Random(8)
    for _ in range(100):
        state = init_beliefs(issue_ids)
        started = time.perf_counter()
        for turn in (1, 2):
            for issue_id in issue_ids:
                state = bayesian_update(
                    state,
                    EvidenceEvent(issue_id, Role.AGENT, rng.randrange(3, 6), turn),
                )
        grid = intensity_grid(state, issues, matrices)
        snapshot(grid, matrices_by_id)
        durations.append(time.perf_counter() - started)
    worst = max(durations)
    median = sorted(durations)[len(durations) // 2]
    assert worst <= 1.4
    assert median <= 0.05
    announce(
        f"n=7 belief update + grid + panel: median {median * 1000:.2f} ms, "
        f"worst {worst * 1000:.2f} ms (cap 1.4 s, target 50 ms)"
    )


# -- criterion 5: batch harness --------------------------------------------------------


def test_criterion_batch_sweep_under_60s_with_monotone_turns(tmp_path):
    started = time.perf_counter()
    means = {}
    for policy in ("greedy_max", "midpoint_anchor", "explorer"):
        config = BatchConfig(
            ns=(1, 3, 5, 7), reps=20, seed=0, policy=policy,
            out_dir=tmp_path / policy,
        )
        result = run_batch(CATALOG, config)
        assert len(result.rows) == 80
        means[policy] = result.mean_turns_by_n()
        header = (tmp_path / policy / "metrics.csv").read_text().splitlines()[0]
        assert header == ",".join(METADATA_COLUMNS + METRIC_COLUMNS)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0
    for policy, by_n in means.items():
        turns = [by_n[n] for n in (1, 3, 5, 7)]
        assert turns == sorted(turns), f"{policy}: {turns}"
    announce(
        "batch sweep: 3 policies x 80 sessions in "
        f"{elapsed:.1f} s; mean turns monotone in n "
        + str({p: [round(v, 2) for v in (m[1], m[3], m[5], m[7])] for p, m in means.items()})
    )


def test_criterion_batch_output_schema_stable(tmp_path):
    config_a = BatchConfig(ns=(1, 3), reps=2, seed=3, out_dir=tmp_path / "a")
    config_b = BatchConfig(ns=(1, 3), reps=2, seed=3, out_dir=tmp_path / "b")
    run_batch(CATALOG, config_a)
    run_batch(CATALOG, config_b)
    assert (tmp_path / "a" / "metrics.csv").read_text() == (
        tmp_path / "b" / "metrics.csv"
    ).read_text()
    announce("batch output: schema-stable and byte-identical across reruns")
