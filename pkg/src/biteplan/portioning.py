"""Estimate how many bites of each food label remain on the plate.

Countable categories report the number of instances; cuttable items report
major-axis length over the bite length; noodle and semisolid piles report
mask area over the portion size.  Sauces are dips, not bites, and are never
portioned.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import geometry
from .plate import COUNTABLE_CATEGORIES, FoodCategory, FoodItem, PlateState
from .planner import PlannerConfig


class PortionBasis(str, enum.Enum):
    INSTANCE_COUNT = "instance_count"
    AXIS_OVER_BITE = "axis_over_bite"
    AREA_OVER_PORTION = "area_over_portion"


@dataclass(frozen=True)
class PortionEstimate:
    label: str
    portions: int
    basis: PortionBasis


def _item_portions(item: FoodItem, cfg: PlannerConfig) -> tuple[int, PortionBasis]:
    if item.category in COUNTABLE_CATEGORIES:
        return 1, PortionBasis.INSTANCE_COUNT
    if item.category == FoodCategory.CUTTABLE:
        axis = geometry.major_axis(item.mask)
        return max(1, math.ceil(axis.axis_length / cfg.bite_length)), PortionBasis.AXIS_OVER_BITE
    return math.ceil(item.mask.area / cfg.portion_size), PortionBasis.AREA_OVER_PORTION


def estimate_portions(state: PlateState, cfg: PlannerConfig) -> list[PortionEstimate]:
    """Per-label portion counts, in first-appearance order of the items."""
    order: list[str] = []
    totals: dict[str, int] = {}
    bases: dict[str, PortionBasis] = {}
    for item in state.observation.items:
        if item.category == FoodCategory.SAUCE:
            continue
        count, basis = _item_portions(item, cfg)
        if item.label not in totals:
            order.append(item.label)
            totals[item.label] = 0
            bases[item.label] = basis
        totals[item.label] += count
    return [PortionEstimate(label, totals[label], bases[label]) for label in order]
