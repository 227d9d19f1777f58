"""Bayesian opponent model: per-issue posteriors over the 7 options.

Each issue carries a probability mass function over its options expressing
how likely the opponent is to accept each one. Every offer on that issue is
an evidence event that reweights the pmf through four factors:

* a likelihood that favors options the proposer has put on the table
  (``0.8 * C`` for proposed options, 0.4 one step away, 0.1 elsewhere);
* a boundary factor that damps options outside the observed span of the
  agent's proposals, scaled by how tightly those proposals cluster;
* the previous pmf (the prior);
* a trust weight driven by behavioral consistency (agent) or recent
  concession magnitude (human).

The product is renormalized after every event. Conventions that the golden
tests pin down: variances are population variances normalized by 3.0 (the
continuous-uniform variance over the option span), the temporal-drift
reference is one option index per turn, and the likelihood's direct branch
applies to *every* option the proposer has already proposed on the issue,
not only the newest one. The history/limit/score refresh happens before the
reweighting, so the current event is part of the statistics it is scored
against. ZOPA limits derive from agent proposals only.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from statistics import fmean, pvariance
from typing import Collection, Iterable, Mapping, Sequence

from .domain import NUM_OPTIONS, IssueSpec, PayoffMatrix, Role

LIKELIHOOD_DIRECT = 0.8
LIKELIHOOD_ADJACENT = 0.4
LIKELIHOOD_DISTANT = 0.1
VARIANCE_REFERENCE = 3.0  # (6 - 0)^2 / 12, continuous-uniform convention
SLOPE_REFERENCE = 1.0  # option indices per turn
PROPOSAL_SCORE_SHARE = 0.6
TEMPORAL_SCORE_SHARE = 0.4
AGENT_TRUST_BASE = 0.7
HUMAN_TRUST_BASE = 0.3
INTENSITY_CAP_HIGH = 0.6
INTENSITY_GAIN_HIGH = 2.0
INTENSITY_CAP_LOW = 0.25
INTENSITY_GAIN_LOW = 0.4

UNIFORM_PMF = tuple(1.0 / NUM_OPTIONS for _ in range(NUM_OPTIONS))


class DegenerateEvidenceWarning(UserWarning):
    """Raised when an update zeroes out all probability mass."""


@dataclass(frozen=True)
class ConsistencyScore:
    c_proposal: float
    c_temporal: float
    s_consistency: float


@dataclass(frozen=True)
class IssueBelief:
    """Posterior and proposal statistics for a single issue."""

    pmf: tuple[float, ...] = UNIFORM_PMF
    agent_history: tuple[int, ...] = ()
    human_history: tuple[int, ...] = ()
    lower_limit: int | None = None
    upper_limit: int | None = None
    boundary_confidence: float = 0.0
    c_proposal: float = 0.0
    c_temporal: float = 0.0
    s_consistency: float = 0.0

    @property
    def zopa_range(self) -> tuple[int, int] | None:
        """Clamped option-index interval; None until the agent has proposed."""
        if self.lower_limit is None or self.upper_limit is None:
            return None
        return (
            max(0, math.floor(self.lower_limit)),
            min(NUM_OPTIONS - 1, math.ceil(self.upper_limit)),
        )


@dataclass(frozen=True)
class BeliefState:
    """Immutable per-issue beliefs; updates return a new state."""

    issues: Mapping[str, IssueBelief]

    def __post_init__(self) -> None:
        object.__setattr__(self, "issues", dict(self.issues))

    def belief_for(self, issue_id: str) -> IssueBelief:
        return self.issues[issue_id]


@dataclass(frozen=True)
class EvidenceEvent:
    """One proposal on one issue, as seen by the belief engine."""

    issue_id: str
    proposer: Role
    proposed_index: int
    turn_number: int
    r_concession: float = 0.0  # human events only

    def __post_init__(self) -> None:
        if not (0 <= self.proposed_index < NUM_OPTIONS):
            raise ValueError(f"proposed index {self.proposed_index} outside 0..{NUM_OPTIONS - 1}")


@dataclass(frozen=True)
class IntensityGrid:
    """Per-(issue, option) green saturation in [0, 0.6] plus tier labels.

    ``tiers`` records which mapping case produced each cell (1 = promising,
    2 = merely acceptable, 0 = filtered out); the convergence panel counts
    tier-1 cells as its effective green cells.
    """

    issue_ids: tuple[str, ...]
    intensities: tuple[tuple[float, ...], ...]
    tiers: tuple[tuple[int, ...], ...]
    zopa_ranges: Mapping[str, tuple[int, int] | None]

    def __post_init__(self) -> None:
        object.__setattr__(self, "zopa_ranges", dict(self.zopa_ranges))

    def green_cell_count(self) -> int:
        return sum(tier == 1 for row in self.tiers for tier in row)

    def total_cells(self) -> int:
        return len(self.issue_ids) * NUM_OPTIONS


def init_beliefs(issue_ids: Sequence[str]) -> BeliefState:
    """Uniform priors over every issue's options; no history, zero scores."""
    if not issue_ids:
        raise ValueError("at least one issue required")
    return BeliefState({issue_id: IssueBelief() for issue_id in issue_ids})


def likelihood(j_star: int, j: int, consistency: float) -> float:
    """Evidence weight of option ``j`` given a single proposal ``j_star``.

    The direct-proposal branch takes precedence over adjacency and is the
    only branch scaled by the consistency factor.
    """
    if j == j_star:
        return LIKELIHOOD_DIRECT * consistency
    if abs(j - j_star) <= 1:
        return LIKELIHOOD_ADJACENT
    return LIKELIHOOD_DISTANT


def likelihood_against(proposed: Collection[int], j: int, consistency: float) -> float:
    """Evidence weight of option ``j`` against everything already proposed."""
    if not proposed:
        raise ValueError("empty proposal set")
    if j in proposed:
        return LIKELIHOOD_DIRECT * consistency
    if min(abs(j - p) for p in proposed) <= 1:
        return LIKELIHOOD_ADJACENT
    return LIKELIHOOD_DISTANT


def zopa_bounds(history: Sequence[int]) -> tuple[int, int, tuple[int, int]] | None:
    """(lower, upper, clamped range) of the agent's proposal span, or None."""
    if not history:
        return None
    lower, upper = min(history), max(history)
    zopa = (max(0, math.floor(lower)), min(NUM_OPTIONS - 1, math.ceil(upper)))
    return lower, upper, zopa


def boundary_confidence(history: Sequence[int]) -> float:
    """1 minus the normalized proposal variance, clamped to [0, 1].

    Tight clustering yields confidence near 1; a single observation has zero
    variance and therefore full confidence.
    """
    if not history:
        raise ValueError("empty history")
    if len(history) == 1:
        return 1.0
    return 1.0 - min(1.0, pvariance(history) / VARIANCE_REFERENCE)


def _least_squares_slope(values: Sequence[int]) -> float:
    xs = range(len(values))
    mx = fmean(xs)
    my = fmean(values)
    sxx = sum((x - mx) ** 2 for x in xs)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, values))
    return sxy / sxx


def consistency_score(history: Sequence[int]) -> ConsistencyScore:
    """Blend of proposal-variance stability and temporal-drift stability.

    Histories shorter than two proposals default to full consistency.
    """
    if len(history) < 2:
        return ConsistencyScore(1.0, 1.0, 1.0)
    c_proposal = 1.0 - min(1.0, pvariance(history) / VARIANCE_REFERENCE)
    slope = _least_squares_slope(history)
    c_temporal = min(1.0, max(0.0, 1.0 - abs(slope) / SLOPE_REFERENCE))
    s = PROPOSAL_SCORE_SHARE * c_proposal + TEMPORAL_SCORE_SHARE * c_temporal
    return ConsistencyScore(c_proposal, c_temporal, s)


def adaptive_weight(
    proposer: Role, *, s_consistency: float = 0.0, r_concession: float = 0.0
) -> float:
    """Trust weight for an evidence event, capped at 1."""
    if proposer is Role.AGENT:
        return min(1.0, AGENT_TRUST_BASE * (1.0 + s_consistency))
    return min(1.0, HUMAN_TRUST_BASE * (1.0 + abs(r_concession)))


def posterior_update(
    prior: Sequence[float],
    proposed: Collection[int],
    consistency: float,
    zopa_range: tuple[int, int] | None,
    confidence: float,
    weight: float,
) -> tuple[tuple[float, ...], float]:
    """One reweighting pass over a 7-option pmf.

    Returns the normalized posterior and the unnormalized mass (whose
    reciprocal is the normalization constant). When every option's mass is
    zeroed out, falls back to the uniform pmf and emits a
    ``DegenerateEvidenceWarning``.
    """
    outside = 1.0 - confidence
    unnormalized = []
    for j in range(NUM_OPTIONS):
        if zopa_range is None:
            boundary = 1.0
        else:
            boundary = 1.0 if zopa_range[0] <= j <= zopa_range[1] else outside
        unnormalized.append(
            likelihood_against(proposed, j, consistency) * boundary * prior[j] * weight
        )
    total = sum(unnormalized)
    if total <= 0.0:
        warnings.warn(
            "evidence zeroed out all probability mass; resetting to uniform",
            DegenerateEvidenceWarning,
            stacklevel=2,
        )
        return UNIFORM_PMF, total
    return tuple(u / total for u in unnormalized), total


def bayesian_update(state: BeliefState, event: EvidenceEvent) -> BeliefState:
    """Fold one evidence event into the belief state.

    The proposer's history (and, for agent events, the ZOPA limits and
    consistency scores) is refreshed first; the refreshed statistics then
    drive the reweighting. Other issues are untouched.
    """
    belief = state.belief_for(event.issue_id)

    if event.proposer is Role.AGENT:
        agent_history = belief.agent_history + (event.proposed_index,)
        human_history = belief.human_history
        proposer_history = agent_history
    else:
        agent_history = belief.agent_history
        human_history = belief.human_history + (event.proposed_index,)
        proposer_history = human_history

    bounds = zopa_bounds(agent_history)
    if bounds is None:
        lower = upper = None
        zopa = None
        confidence = 0.0
        agent_scores = ConsistencyScore(0.0, 0.0, 0.0)
    else:
        lower, upper, zopa = bounds
        confidence = boundary_confidence(agent_history)
        agent_scores = consistency_score(agent_history)

    proposer_consistency = consistency_score(proposer_history).s_consistency
    if event.proposer is Role.AGENT:
        weight = adaptive_weight(Role.AGENT, s_consistency=agent_scores.s_consistency)
    else:
        weight = adaptive_weight(Role.HUMAN, r_concession=event.r_concession)

    pmf, _ = posterior_update(
        belief.pmf,
        set(proposer_history),
        proposer_consistency,
        zopa,
        confidence,
        weight,
    )
    updated = replace(
        belief,
        pmf=pmf,
        agent_history=agent_history,
        human_history=human_history,
        lower_limit=lower,
        upper_limit=upper,
        boundary_confidence=confidence,
        c_proposal=agent_scores.c_proposal,
        c_temporal=agent_scores.c_temporal,
        s_consistency=agent_scores.s_consistency,
    )
    issues = dict(state.issues)
    issues[event.issue_id] = updated
    return BeliefState(issues)


def intensity_for_option(
    probability: float,
    in_zopa: bool,
    human_payoff: float,
    spec: IssueSpec,
    confidence: float,
    s_consistency: float,
) -> tuple[float, int]:
    """Visual intensity and tier for one cell of the horizon grid."""
    if in_zopa and human_payoff >= spec.tau_min:
        value = (
            probability
            * INTENSITY_GAIN_HIGH
            * math.sqrt(confidence)
            * (1.0 + s_consistency)
            * spec.xi
        )
        return min(INTENSITY_CAP_HIGH, value), 1
    if spec.tau_min <= human_payoff <= spec.tau_max:
        return min(INTENSITY_CAP_LOW, probability * INTENSITY_GAIN_LOW), 2
    return 0.0, 0


def intensity_grid(
    state: BeliefState,
    specs: Iterable[IssueSpec],
    matrices: Iterable[PayoffMatrix],
) -> IntensityGrid:
    """Render the belief state as the horizon grid's intensity matrix."""
    matrices_by_id = {m.issue_id: m for m in matrices}
    issue_ids: list[str] = []
    rows: list[tuple[float, ...]] = []
    tier_rows: list[tuple[int, ...]] = []
    ranges: dict[str, tuple[int, int] | None] = {}
    for spec in specs:
        belief = state.belief_for(spec.issue_id)
        human = matrices_by_id[spec.issue_id].human_payoffs
        zopa = belief.zopa_range
        ranges[spec.issue_id] = zopa
        row = []
        tiers = []
        for j in range(NUM_OPTIONS):
            in_zopa = zopa is not None and zopa[0] <= j <= zopa[1]
            value, tier = intensity_for_option(
                belief.pmf[j],
                in_zopa,
                human[j],
                spec,
                belief.boundary_confidence,
                belief.s_consistency,
            )
            row.append(value)
            tiers.append(tier)
        issue_ids.append(spec.issue_id)
        rows.append(tuple(row))
        tier_rows.append(tuple(tiers))
    return IntensityGrid(
        issue_ids=tuple(issue_ids),
        intensities=tuple(rows),
        tiers=tuple(tier_rows),
        zopa_ranges=ranges,
    )
