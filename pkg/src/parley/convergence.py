"""Global Convergence Panel math: bar width, position, and color.

The bar narrows as the count of promising (tier-1) grid cells shrinks, and
its position along the red-amber-green ramp reflects how favorable the
current mutually-acceptable ranges are for the human, measured on the
human's own payoff scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean
from typing import Mapping

from .beliefs import IntensityGrid
from .domain import NUM_OPTIONS, PayoffMatrix

MIN_WIDTH_PCT = 100.0 / NUM_OPTIONS
NEUTRAL_POSITION = 50.0


@dataclass(frozen=True)
class ConvergenceSnapshot:
    convergence_ratio: float
    width_percentage: float
    weighted_position: float
    color_stop: float


def convergence_ratio(grid: IntensityGrid) -> float:
    """Share of the visible grid that is *not* promising."""
    total = grid.total_cells()
    if total == 0:
        raise ValueError("empty grid")
    return 1.0 - grid.green_cell_count() / total


def width_from_ratio(ratio: float) -> float:
    return max(MIN_WIDTH_PCT, (1.0 - ratio) * 100.0)


def weighted_position(
    zopa_ranges: Mapping[str, tuple[int, int] | None],
    matrices: Mapping[str, PayoffMatrix],
) -> float:
    """Equal-weight mean ZOPA payoff over mean best payoff, as a percentage.

    Neutral (50) until every issue has an observed ZOPA. Scale-free: doubling
    all payoffs leaves the position unchanged.
    """
    if not zopa_ranges or any(r is None for r in zopa_ranges.values()):
        return NEUTRAL_POSITION
    n = len(zopa_ranges)
    numerator = 0.0
    denominator = 0.0
    for issue_id, zopa in zopa_ranges.items():
        human = matrices[issue_id].human_payoffs
        lo, hi = zopa  # type: ignore[misc]
        numerator += fmean(human[lo : hi + 1]) / n
        denominator += max(human) / n
    return numerator / denominator * 100.0


def color_stop(position: float) -> float:
    """Linear map of position onto the gradient: 0 red, 0.5 amber, 1 green."""
    return position / 100.0


def snapshot(grid: IntensityGrid, matrices: Mapping[str, PayoffMatrix]) -> ConvergenceSnapshot:
    ratio = convergence_ratio(grid)
    position = weighted_position(grid.zopa_ranges, matrices)
    return ConvergenceSnapshot(
        convergence_ratio=ratio,
        width_percentage=width_from_ratio(ratio),
        weighted_position=position,
        color_stop=color_stop(position),
    )
