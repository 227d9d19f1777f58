import json

import pytest
from fastapi.testclient import TestClient

from parley.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(store_dir=tmp_path / "sessions")
    with TestClient(app) as client:
        yield client


def create_session(client, **overrides):
    payload = {"dimensionality": 3, "condition": "decision_support", "seed": 7}
    payload.update(overrides)
    response = client.post("/api/v1/sessions", json=payload)
    assert response.status_code == 201, response.text
    return response.json()


def offer_payload(session, pick=7, received=0, keystroke=1000, submitted=3000):
    return {
        "selections": {issue["issue_id"]: pick for issue in session["issues"]},
        "timing": {
            "received_at_ms": received,
            "first_keystroke_at_ms": keystroke,
            "submitted_at_ms": submitted,
        },
    }


def auth(session):
    return {"X-Session-Token": session["session_token"]}


def test_create_returns_human_side_only(client):
    session = create_session(client)
    assert session["dimensionality"] == 3
    assert len(session["issues"]) == 3
    for issue in session["issues"]:
        assert len(issue["human_payoffs"]) == 7
        assert "agent_payoffs" not in issue
    assert session["caps"] == {"max_rounds": 15, "max_seconds": 900}


def test_create_is_deterministic_under_seed(client):
    a = create_session(client, seed=42)
    b = create_session(client, seed=42)
    assert [i["issue_id"] for i in a["issues"]] == [i["issue_id"] for i in b["issues"]]


def test_non_canonical_dimensionality_flagged(client):
    session = create_session(client, dimensionality=2)
    assert session["non_canonical_dimensionality"] is True
    assert create_session(client, dimensionality=5)["non_canonical_dimensionality"] is False


def test_invalid_dimensionality_rejected(client):
    response = client.post("/api/v1/sessions", json={"dimensionality": 0})
    assert response.status_code == 422
    response = client.post("/api/v1/sessions", json={"dimensionality": 17})
    assert response.status_code == 422


def test_version_header_present(client):
    session = create_session(client)
    response = client.get(f"/api/v1/sessions/{session['session_id']}", headers=auth(session))
    assert response.headers["X-Api-Version"] == "1"


def test_requests_require_session_token(client):
    session = create_session(client)
    response = client.get(f"/api/v1/sessions/{session['session_id']}")
    assert response.status_code == 403
    response = client.get(
        f"/api/v1/sessions/{session['session_id']}",
        headers={"X-Session-Token": "wrong"},
    )
    assert response.status_code == 403


def test_unknown_session_404(client):
    response = client.get("/api/v1/sessions/nope", headers={"X-Session-Token": "x"})
    assert response.status_code == 404


def test_offer_turn_emits_ordered_envelopes(client):
    session = create_session(client)
    sid = session["session_id"]
    response = client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    )
    assert response.status_code == 200
    kinds = [e["kind"] for e in response.json()["envelopes"]]
    assert kinds == ["turn_result", "belief_snapshot", "convergence_snapshot"]
    seqs = [e["seq"] for e in response.json()["envelopes"]]
    assert seqs == sorted(seqs)
    turn = response.json()["envelopes"][0]["payload"]
    assert turn["round"] == 1
    assert turn["agent_offer"]["selections"].keys() == turn["human_offer"]["selections"].keys()
    # wire selections are 1-based
    assert all(1 <= v <= 7 for v in turn["agent_offer"]["selections"].values())


def test_baseline_stream_never_carries_widget_snapshots(client):
    session = create_session(client, condition="baseline")
    sid = session["session_id"]
    for turn in range(3):
        response = client.post(
            f"/api/v1/sessions/{sid}/offers",
            headers=auth(session),
            json=offer_payload(
                session, received=turn * 10_000, keystroke=turn * 10_000 + 1000,
                submitted=turn * 10_000 + 3000,
            ),
        )
        kinds = [e["kind"] for e in response.json()["envelopes"]]
        assert "belief_snapshot" not in kinds
        assert "convergence_snapshot" not in kinds
    events = client.get(f"/api/v1/sessions/{sid}/events", headers=auth(session)).json()
    assert {e["kind"] for e in events["envelopes"]} <= {"session_created", "turn_result"}


def test_decision_support_emits_exactly_one_snapshot_pair_per_turn(client):
    session = create_session(client)
    sid = session["session_id"]
    for turn in range(3):
        response = client.post(
            f"/api/v1/sessions/{sid}/offers",
            headers=auth(session),
            json=offer_payload(
                session, pick=7 - turn, received=turn * 10_000,
                keystroke=turn * 10_000 + 1000, submitted=turn * 10_000 + 3000,
            ),
        )
        kinds = [e["kind"] for e in response.json()["envelopes"]]
        assert kinds.count("belief_snapshot") == 1
        assert kinds.count("convergence_snapshot") == 1


def test_phase_violation_after_agreement(client):
    session = create_session(client, dimensionality=1, seed=3)
    sid = session["session_id"]
    first = client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    ).json()
    standing = first["envelopes"][0]["payload"]["agent_offer"]["selections"]
    second = client.post(
        f"/api/v1/sessions/{sid}/offers",
        headers=auth(session),
        json={
            "selections": standing,
            "timing": {
                "received_at_ms": 10_000,
                "first_keystroke_at_ms": 11_000,
                "submitted_at_ms": 12_000,
            },
        },
    )
    kinds = [e["kind"] for e in second.json()["envelopes"]]
    assert kinds[-1] == "session_ended"
    third = client.post(
        f"/api/v1/sessions/{sid}/offers",
        headers=auth(session),
        json=offer_payload(session, received=20_000, keystroke=21_000, submitted=22_000),
    )
    assert third.status_code == 409
    assert third.json()["error"] == "phase_violation"


def test_malformed_offer_is_typed_error(client):
    session = create_session(client)
    sid = session["session_id"]
    bad = offer_payload(session)
    bad["selections"] = {"mystery_issue": 1}
    response = client.post(f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=bad)
    assert response.status_code == 422
    assert response.json()["error"] == "invalid_offer"


def test_session_ended_carries_outcome_and_metrics(client):
    session = create_session(client, dimensionality=1, seed=3)
    sid = session["session_id"]
    first = client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    ).json()
    standing = first["envelopes"][0]["payload"]["agent_offer"]["selections"]
    ended = client.post(
        f"/api/v1/sessions/{sid}/offers",
        headers=auth(session),
        json={
            "selections": standing,
            "timing": {
                "received_at_ms": 10_000,
                "first_keystroke_at_ms": 11_000,
                "submitted_at_ms": 12_000,
            },
        },
    ).json()
    final = ended["envelopes"][-1]
    assert final["kind"] == "session_ended"
    assert final["payload"]["outcome"]["kind"] == "agreement"
    assert final["payload"]["metrics"]["total_turns"] == 2
    metrics = client.get(f"/api/v1/sessions/{sid}/metrics", headers=auth(session)).json()
    assert metrics["metrics"] == final["payload"]["metrics"]


def test_events_polling_respects_after_cursor(client):
    session = create_session(client)
    sid = session["session_id"]
    client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    )
    all_events = client.get(
        f"/api/v1/sessions/{sid}/events", headers=auth(session)
    ).json()["envelopes"]
    tail = client.get(
        f"/api/v1/sessions/{sid}/events?after={all_events[1]['seq']}", headers=auth(session)
    ).json()["envelopes"]
    assert [e["seq"] for e in tail] == [e["seq"] for e in all_events[2:]]


def test_websocket_stream_replays_backlog_then_lives(client):
    session = create_session(client, dimensionality=1, seed=3)
    sid, token = session["session_id"], session["session_token"]
    client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    )
    with client.websocket_connect(f"/api/v1/sessions/{sid}/stream?token={token}") as ws:
        kinds = [json.loads(ws.receive_text())["kind"] for _ in range(4)]
    assert kinds == [
        "session_created", "turn_result", "belief_snapshot", "convergence_snapshot"
    ]


def test_websocket_rejects_bad_token(client):
    session = create_session(client)
    sid = session["session_id"]
    with pytest.raises(Exception):
        with client.websocket_connect(f"/api/v1/sessions/{sid}/stream?token=bad") as ws:
            ws.receive_text()


def test_store_persists_session_files(client, tmp_path):
    session = create_session(client)
    sid = session["session_id"]
    client.post(
        f"/api/v1/sessions/{sid}/offers", headers=auth(session), json=offer_payload(session)
    )
    log_file = tmp_path / "sessions" / sid / "session.jsonl"
    assert log_file.exists()
    lines = [json.loads(line) for line in log_file.read_text().splitlines()]
    assert lines[0]["kind"] == "header"
    assert lines[1]["kind"] == "turn"


def test_explicit_issue_subset(client):
    session = create_session(client, issue_ids=["monthly_rent", "pet_policy"])
    assert [i["issue_id"] for i in session["issues"]] == ["monthly_rent", "pet_policy"]
    assert session["dimensionality"] == 2


def test_interleaved_sessions_have_independent_ordered_streams(client):
    a = create_session(client, seed=1)
    b = create_session(client, seed=2)
    for turn in range(2):
        for session in (a, b):
            client.post(
                f"/api/v1/sessions/{session['session_id']}/offers",
                headers=auth(session),
                json=offer_payload(
                    session, pick=7 - turn, received=turn * 10_000,
                    keystroke=turn * 10_000 + 500, submitted=turn * 10_000 + 900,
                ),
            )
    for session in (a, b):
        events = client.get(
            f"/api/v1/sessions/{session['session_id']}/events", headers=auth(session)
        ).json()["envelopes"]
        assert [e["seq"] for e in events] == list(range(1, len(events) + 1))
        assert all(e["session_id"] == session["session_id"] for e in events)
