"""Command-line interface.

``serve`` runs the FastAPI service; ``play`` is a thin interactive client
against a running service; ``batch``, ``conformance``, and ``export`` run
headless against the core engine. Batch flags can also be supplied through a
JSON config file whose keys mirror the flag names.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .batch import BatchConfig, run_batch
from .catalog import load_catalog, validate_anti_triviality
from .conformance import run_appendix_conformance
from .metrics import compute_report, write_metrics_csv
from .store import read_session_file


@click.group()
def main() -> None:
    """parley: multi-issue negotiation workbench."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None,
              help="Task catalog file (defaults to the shipped rental set).")
@click.option("--store", "store_dir", type=click.Path(), default="sessions",
              show_default=True, help="Directory for persisted session logs.")
def serve(host: str, port: int, catalog_path: str | None, store_dir: str) -> None:
    """Run the negotiation service."""
    import uvicorn

    from .service import create_app

    app = create_app(catalog=load_catalog(catalog_path), store_dir=store_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.option("--n", "ns", default="1,3,5,7", show_default=True,
              help="Comma-separated dimensionality levels.")
@click.option("--reps", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--policy", default="greedy_max", show_default=True,
              type=click.Choice(["greedy_max", "midpoint_anchor", "explorer"]))
@click.option("--condition", default="decision_support", show_default=True,
              type=click.Choice(["baseline", "decision_support"]))
@click.option("--agent", default="scripted", show_default=True,
              type=click.Choice(["scripted", "llm"]))
@click.option("--llm-endpoint", default="", help="Chat-completions URL for --agent llm.")
@click.option("--llm-model", default="", help="Model name for --agent llm.")
@click.option("--out", "out_dir", type=click.Path(), default="batch-out", show_default=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="JSON file with the same keys as the flags; flags win.")
def batch(ns: str, reps: int, seed: int, policy: str, condition: str, agent: str,
          llm_endpoint: str, llm_model: str, out_dir: str,
          catalog_path: str | None, config_path: str | None) -> None:
    """Run a deterministic dimensionality sweep and export metrics tables."""
    settings = {
        "ns": ns, "reps": reps, "seed": seed, "policy": policy,
        "condition": condition, "agent": agent, "llm_endpoint": llm_endpoint,
        "llm_model": llm_model, "out": out_dir, "catalog": catalog_path,
    }
    if config_path:
        file_settings = json.loads(Path(config_path).read_text())
        ctx = click.get_current_context()
        for key, value in file_settings.items():
            if key not in settings:
                raise click.UsageError(f"unknown config key {key!r}")
            source = ctx.get_parameter_source(
                {"ns": "ns", "out": "out_dir", "catalog": "catalog_path"}.get(key, key)
            )
            if source is not None and source.name == "DEFAULT":
                settings[key] = value

    config = BatchConfig(
        ns=tuple(int(x) for x in str(settings["ns"]).split(",")),
        reps=int(settings["reps"]),
        seed=int(settings["seed"]),
        policy=str(settings["policy"]),
        condition=str(settings["condition"]),
        agent=str(settings["agent"]),
        llm_endpoint=str(settings["llm_endpoint"]),
        llm_model=str(settings["llm_model"]),
        out_dir=Path(str(settings["out"])),
    )
    catalog = load_catalog(settings["catalog"])
    result = run_batch(catalog, config)
    click.echo(f"{len(result.rows)} sessions -> {config.out_dir}/metrics.csv")
    for n, turns in result.mean_turns_by_n().items():
        click.echo(f"  n={n}: mean turns {turns:.2f}")


@main.command()
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
def conformance(as_json: bool) -> None:
    """Check every golden value of the belief pipeline; nonzero exit on failure."""
    report = run_appendix_conformance()
    if as_json:
        payload = [
            {
                "name": c.name,
                "expected": c.expected,
                "actual": c.actual,
                "tolerance": c.tolerance,
                "passed": c.passed,
            }
            for c in report.checks
        ]
        click.echo(json.dumps({"passed": report.passed, "checks": payload}, indent=2))
    else:
        click.echo(report.describe())
    sys.exit(0 if report.passed else 1)


@main.command("validate-catalog")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
def validate_catalog(catalog_path: str | None) -> None:
    """Run the anti-triviality gates over a task catalog."""
    catalog = load_catalog(catalog_path)
    violations = validate_anti_triviality(catalog)
    if violations:
        for violation in violations:
            click.echo(f"violation: {violation}")
        sys.exit(1)
    click.echo(f"{catalog.catalog_id}: {len(catalog.matrices)} issues, all gates pass")


@main.command()
@click.option("--logs", "logs_dir", type=click.Path(exists=True), required=True,
              help="Directory of stored sessions (one subdirectory per id).")
@click.option("--out", "out_path", type=click.Path(), required=True)
def export(logs_dir: str, out_path: str) -> None:
    """Recompute metrics from stored logs into a delimiter-separated table."""
    rows = []
    for path in sorted(Path(logs_dir).glob("*/session.jsonl")):
        stored = read_session_file(path)
        log = stored.log
        outcome = "" if log.outcome is None else log.outcome.kind.value
        metadata = {
            "session_id": log.session_id,
            "dimensionality": log.dimensionality,
            "condition": log.condition,
            "agent_kind": log.agent_kind,
            "policy": "",
            "seed": log.seed,
            "outcome": outcome,
        }
        rows.append((metadata, compute_report(log)))
    with open(out_path, "w", newline="") as fh:
        write_metrics_csv(fh, rows)
    click.echo(f"{len(rows)} sessions -> {out_path}")


INTENSITY_BLOCKS = " .:-=+*#%@"


def _render_grid(snapshot: dict) -> str:
    """Text rendering of a belief snapshot's horizon grid."""
    lines = []
    grid = snapshot["grid"]
    by_issue = {rec["issue_id"]: rec for rec in snapshot["issues"]}
    for issue_id, row in zip(grid["issue_ids"], grid["intensities"]):
        zopa = by_issue[issue_id]["zopa_range"]
        cells = []
        for j, value in enumerate(row, start=1):
            mark = INTENSITY_BLOCKS[min(9, int(value / 0.6 * 9))]
            if zopa and zopa[0] <= j <= zopa[1]:
                cells.append(f"[{mark}]")
            else:
                cells.append(f" {mark} ")
        lines.append(f"  {issue_id:24s} {''.join(cells)}")
    return "\n".join(lines)


@main.command()
@click.option("--url", default="http://127.0.0.1:8000", show_default=True)
@click.option("--n", default=3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--condition", default="decision_support", show_default=True,
              type=click.Choice(["baseline", "decision_support"]))
def play(url: str, n: int, seed: int, condition: str) -> None:
    """Negotiate interactively against a running service."""
    import time

    import httpx

    client = httpx.Client(base_url=url, timeout=30.0)
    created = client.post(
        "/api/v1/sessions",
        json={"dimensionality": n, "condition": condition, "seed": seed},
    )
    created.raise_for_status()
    session = created.json()
    sid, token = session["session_id"], session["session_token"]
    headers = {"X-Session-Token": token}

    click.echo(f"session {sid} ({condition}, {n} issue(s))")
    click.echo("your payoff table (options 1..7):")
    for issue in session["issues"]:
        payoffs = ", ".join(
            f"{i}:{int(p)}" for i, p in enumerate(issue["human_payoffs"], start=1)
        )
        click.echo(f"  {issue['issue_id']:24s} {payoffs}")
    issue_ids = [issue["issue_id"] for issue in session["issues"]]

    start = time.monotonic()
    standing: dict[str, int] | None = None
    while True:
        received_ms = int((time.monotonic() - start) * 1000)
        prompt = "your offer (issue=opt ..., or 'accept')"
        raw = click.prompt(prompt).strip()
        keystroke_ms = int((time.monotonic() - start) * 1000)
        if raw == "accept":
            if standing is None:
                click.echo("nothing to accept yet")
                continue
            selections = dict(standing)
        else:
            try:
                selections = {}
                for part in raw.split():
                    issue_id, _, num = part.partition("=")
                    selections[issue_id] = int(num)
            except ValueError:
                click.echo("could not parse; use e.g. monthly_rent=3 pet_policy=5")
                continue
            for issue_id in issue_ids:
                selections.setdefault(issue_id, standing[issue_id] if standing else 4)
        submitted_ms = int((time.monotonic() - start) * 1000)
        response = client.post(
            f"/api/v1/sessions/{sid}/offers",
            headers=headers,
            json={
                "selections": selections,
                "timing": {
                    "received_at_ms": received_ms,
                    "first_keystroke_at_ms": keystroke_ms,
                    "submitted_at_ms": submitted_ms,
                },
            },
        )
        if response.status_code != 200:
            click.echo(f"rejected: {response.json().get('detail')}")
            continue
        for envelope in response.json()["envelopes"]:
            kind, payload = envelope["kind"], envelope["payload"]
            if kind == "turn_result":
                counter = payload["agent_offer"]["selections"]
                standing = dict(counter)
                click.echo(f"landlord counters: {counter}")
            elif kind == "belief_snapshot":
                click.echo(_render_grid(payload))
            elif kind == "convergence_snapshot":
                width = payload["width_percentage"]
                pos = payload["weighted_position"]
                click.echo(f"  convergence: width {width:.1f}%  position {pos:.1f}")
            elif kind == "session_ended":
                click.echo(f"session over: {payload['outcome']['kind']}")
                metrics = payload["metrics"]
                click.echo(
                    f"  payoff {metrics['total_human_payoff_pct']:.1f}% "
                    f"joint {metrics['joint_payoff']:g} turns {metrics['total_turns']}"
                )
                return


if __name__ == "__main__":
    main()
