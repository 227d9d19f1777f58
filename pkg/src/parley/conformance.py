"""Golden conformance suite for the belief pipeline.

Traces the canonical worked scenario end to end: an opponent that has
alternated between two adjacent options for five turns, a given prior over
the 7 options, and the utilities fixture's payoff column. Every intermediate
quantity is checked against its frozen golden value at a pinned tolerance.
The golden values come with the scenario; the tolerances absorb the small
rounding differences of the published figures.

Scenario (0-based indices): opponent history [3, 4, 3, 4, 4], prior
[0.10, 0.12, 0.15, 0.22, 0.25, 0.10, 0.06], direct-proposal consistency
factor fixed at 1.0, all on the ``utilities_included`` fixture.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import beliefs
from .catalog import load_catalog
from .domain import Role

HISTORY = (3, 4, 3, 4, 4)
PRIOR = (0.10, 0.12, 0.15, 0.22, 0.25, 0.10, 0.06)
GIVEN_CONSISTENCY = 1.0  # the scenario's stated likelihood factor
TARGET_OPTION = 4  # the freshly proposed option
RUNNER_UP_OPTION = 3
FILTERED_OPTION = 1  # below tau_min and outside the observed range


@dataclass(frozen=True)
class ConformanceCheck:
    name: str
    expected: float
    actual: float
    tolerance: float | None  # None means exact equality

    @property
    def passed(self) -> bool:
        if self.tolerance is None:
            return self.actual == self.expected
        return abs(self.actual - self.expected) <= self.tolerance

    def describe(self) -> str:
        tol = "exact" if self.tolerance is None else f"±{self.tolerance:g}"
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: expected {self.expected:g} ({tol}), "
            f"got {self.actual:.6f}"
        )


@dataclass(frozen=True)
class ConformanceReport:
    checks: tuple[ConformanceCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def describe(self) -> str:
        lines = [check.describe() for check in self.checks]
        verdict = "all checks passed" if self.passed else "CONFORMANCE FAILURES"
        lines.append(f"{len([c for c in self.checks if c.passed])}/{len(self.checks)} ok - {verdict}")
        return "\n".join(lines)


def run_appendix_conformance() -> ConformanceReport:
    """Run the full golden pipeline; cheap enough for every CI run."""
    checks: list[ConformanceCheck] = []

    bounds = beliefs.zopa_bounds(HISTORY)
    assert bounds is not None
    lower, upper, zopa = bounds
    checks.append(ConformanceCheck("zopa lower limit", 3, float(lower), None))
    checks.append(ConformanceCheck("zopa upper limit", 4, float(upper), None))

    confidence = beliefs.boundary_confidence(HISTORY)
    checks.append(ConformanceCheck("boundary confidence", 0.92, confidence, 0.01))

    scores = beliefs.consistency_score(HISTORY)
    checks.append(ConformanceCheck("temporal consistency", 0.8, scores.c_temporal, 0.02))
    checks.append(ConformanceCheck("consistency score", 0.86, scores.s_consistency, 0.02))

    weight = beliefs.adaptive_weight(Role.AGENT, s_consistency=scores.s_consistency)
    checks.append(ConformanceCheck("agent trust weight", 1.0, weight, None))

    posterior, total = beliefs.posterior_update(
        PRIOR, set(HISTORY), GIVEN_CONSISTENCY, zopa, confidence, weight
    )
    checks.append(ConformanceCheck("normalization constant", 2.59, 1.0 / total, 0.01))
    checks.append(
        ConformanceCheck("posterior of proposed option", 0.52, posterior[TARGET_OPTION], 0.01)
    )
    checks.append(
        ConformanceCheck("posterior of runner-up option", 0.45, posterior[RUNNER_UP_OPTION], 0.01)
    )

    catalog = load_catalog()
    spec = catalog.spec_for("utilities_included")
    human = catalog.matrix_for("utilities_included").human_payoffs
    bright, tier = beliefs.intensity_for_option(
        probability=posterior[TARGET_OPTION],
        in_zopa=True,
        human_payoff=human[TARGET_OPTION],
        spec=spec,
        confidence=confidence,
        s_consistency=scores.s_consistency,
    )
    checks.append(ConformanceCheck("intensity of proposed option (capped)", 0.6, bright, None))
    checks.append(ConformanceCheck("proposed option tier", 1, float(tier), None))
    dark, tier = beliefs.intensity_for_option(
        probability=posterior[FILTERED_OPTION],
        in_zopa=False,
        human_payoff=human[FILTERED_OPTION],
        spec=spec,
        confidence=confidence,
        s_consistency=scores.s_consistency,
    )
    checks.append(ConformanceCheck("intensity of filtered option", 0.0, dark, None))
    checks.append(ConformanceCheck("filtered option tier", 0, float(tier), None))

    return ConformanceReport(tuple(checks))
