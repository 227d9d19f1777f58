"""Simulated tenant policies for the headless batch harness.

These are harness fixtures for exercising the engine and metrics suite, not
models of human participants. All three are deterministic given their seed.
The shared skeleton: keep a demand vector, optionally concede one option
step per turn on the cheapest issue, and accept the landlord's standing
counter once it is worth at least as much as the next planned demand.
Because concessions move one issue at a time, sessions over more issues take
more turns, which the batch suite asserts as a harness property.
"""

from __future__ import annotations

import random
from typing import Mapping, Protocol, Sequence

from .domain import IssueSpec, Offer, PayoffMatrix

POLICY_NAMES = ("greedy_max", "midpoint_anchor", "explorer")


class HumanPolicy(Protocol):
    name: str

    def decide(self, standing_counter: Offer | None, turn_index: int) -> dict[str, int] | None:
        """Selections to propose next, or None to accept the standing counter."""


class _DemandPolicy:
    def __init__(self, issues: Sequence[IssueSpec], matrices: Sequence[PayoffMatrix]) -> None:
        self.issues = list(issues)
        self.payoffs = {m.issue_id: m.human_payoffs for m in matrices}
        self.demand: dict[str, int] = {}

    def _total(self, selections: Mapping[str, int]) -> float:
        return sum(self.payoffs[i][selections[i]] for i in self.payoffs)

    def _conceded(self, target: Mapping[str, int]) -> dict[str, int]:
        """Move the demand one index toward ``target`` on the cheapest issue."""
        best: tuple[float, str, int] | None = None
        for issue_id, current in self.demand.items():
            goal = target[issue_id]
            if current == goal:
                continue
            step = current + (1 if goal > current else -1)
            cost = self.payoffs[issue_id][current] - self.payoffs[issue_id][step]
            if best is None or cost < best[0]:
                best = (cost, issue_id, step)
        if best is None:
            return dict(self.demand)
        plan = dict(self.demand)
        plan[best[1]] = best[2]
        return plan


class GreedyMaxPolicy(_DemandPolicy):
    """Opens at its own maximum everywhere, concedes one step per turn."""

    name = "greedy_max"

    def __init__(self, issues, matrices, seed: int = 0) -> None:
        super().__init__(issues, matrices)
        self.demand = {
            i: payoffs.index(max(payoffs)) for i, payoffs in self.payoffs.items()
        }

    def decide(self, standing_counter: Offer | None, turn_index: int) -> dict[str, int] | None:
        if standing_counter is None:
            return dict(self.demand)
        plan = self._conceded(standing_counter.selections)
        if self._total(standing_counter.selections) >= self._total(plan):
            return None
        self.demand = plan
        return dict(self.demand)


class MidpointAnchorPolicy(_DemandPolicy):
    """Anchors on the middle option and concedes every other turn."""

    name = "midpoint_anchor"

    def __init__(self, issues, matrices, seed: int = 0) -> None:
        super().__init__(issues, matrices)
        self.demand = {i: 3 for i in self.payoffs}

    def decide(self, standing_counter: Offer | None, turn_index: int) -> dict[str, int] | None:
        if standing_counter is None:
            return dict(self.demand)
        plan = self._conceded(standing_counter.selections) if turn_index % 2 == 0 else dict(self.demand)
        if self._total(standing_counter.selections) >= self._total(plan):
            return None
        self.demand = plan
        return dict(self.demand)


class ExplorerPolicy(_DemandPolicy):
    """Probes each issue in turn before settling into concession mode.

    Spends a fixed number of turns per issue proposing varied options there
    (everything else held at its demand), which drives sequence entropy up
    and stretches sessions roughly linearly in the number of issues.
    """

    name = "explorer"
    visits_per_issue = 2
    accept_fraction = 0.55

    def __init__(self, issues, matrices, seed: int = 0) -> None:
        super().__init__(issues, matrices)
        self.rng = random.Random(seed)
        self.demand = {
            i: payoffs.index(max(payoffs)) for i, payoffs in self.payoffs.items()
        }
        self.max_total = sum(max(p) for p in self.payoffs.values())
        self._probes = [
            spec.issue_id for spec in self.issues for _ in range(self.visits_per_issue)
        ]

    def decide(self, standing_counter: Offer | None, turn_index: int) -> dict[str, int] | None:
        if self._probes:
            issue_id = self._probes.pop(0)
            payoffs = self.payoffs[issue_id]
            # probe among the issue's better half, away from the current demand
            ranked = sorted(range(7), key=lambda j: payoffs[j], reverse=True)[:4]
            choices = [j for j in ranked if j != self.demand[issue_id]] or ranked
            probe = dict(self.demand)
            probe[issue_id] = self.rng.choice(choices)
            return probe
        if standing_counter is None:
            return dict(self.demand)
        if self._total(standing_counter.selections) >= self.accept_fraction * self.max_total:
            return None
        plan = self._conceded(standing_counter.selections)
        if self._total(standing_counter.selections) >= self._total(plan):
            return None
        self.demand = plan
        return dict(self.demand)


def make_policy(
    name: str,
    issues: Sequence[IssueSpec],
    matrices: Sequence[PayoffMatrix],
    seed: int = 0,
) -> HumanPolicy:
    policies = {
        "greedy_max": GreedyMaxPolicy,
        "midpoint_anchor": MidpointAnchorPolicy,
        "explorer": ExplorerPolicy,
    }
    if name not in policies:
        raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
    return policies[name](issues, matrices, seed=seed)
