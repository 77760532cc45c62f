"""Hierarchical task planner: category + mask geometry -> skill sequence.

The planner decides, per item, which pre-acquisition skills (push, group,
cut) must precede the acquisition skill (skewer, twirl, scoop, dip).  The
length of the resulting sequence is the item's efficiency score: the number
of robot actions needed to pick up one bite, lower being better.

Branch structure:

* meat/seafood, fruit, vegetable -> skewer
* sauce                          -> dip
* cuttable  -> cut+skewer when the major axis exceeds the bite length,
               else skewer
* noodles   -> twirl when densely piled (push first if the twirl footprint
               is obstructed); group+twirl when spread out (push first if
               every grouping sweep is blocked); push+twirl when a topping
               sits on the bed; else twirl
* semisolid -> scoop when densely piled (push first if every scoop sweep is
               blocked); push+scoop when a topping sits on the bed; else
               scoop (no grouping for semisolids)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BiteplanError
from . import geometry, skills
from .plate import COUNTABLE_CATEGORIES, FoodCategory, FoodItem, FoodMask, Pixel
from .skills import SkillCommand, SkillKind

# Grouping sweeps considered before declaring grouping blocked: the
# sparsest-to-densest segment plus eight rotations of its start about the
# densest point.
GROUP_CANDIDATE_ANGLES_DEG = tuple(20.0 * k for k in (-4, -3, -2, -1, 0, 1, 2, 3, 4))


class UnknownCategoryError(BiteplanError):
    """Item category outside the seven-member library."""


@dataclass(frozen=True)
class PlannerConfig:
    """Thresholds and scales shared across all plates."""

    density_thresh: float = 0.6
    entropy_thresh: float = 0.85
    bite_length: float = 40.0
    portion_size: float = 900.0
    sigma: float = 10.0
    crop_radius: float = 30.0
    scoop_max_dist: float = 60.0

    def __post_init__(self):
        for name in (
            "density_thresh",
            "entropy_thresh",
            "bite_length",
            "portion_size",
            "sigma",
            "crop_radius",
            "scoop_max_dist",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.density_thresh > 1.0:
            raise ValueError("density_thresh must be <= 1")
        if self.entropy_thresh >= 1.0:
            raise ValueError("entropy_thresh must be < 1")


@dataclass(frozen=True)
class SkillSequence:
    """Ordered commands ending in exactly one acquisition."""

    commands: tuple[SkillCommand, ...]

    def __post_init__(self):
        cmds = tuple(self.commands)
        object.__setattr__(self, "commands", cmds)
        if not cmds:
            raise BiteplanError("skill sequence must be non-empty")
        if not cmds[-1].is_acquisition:
            raise BiteplanError(
                f"sequence must end in an acquisition, got {cmds[-1].kind.value}"
            )
        for cmd in cmds[:-1]:
            if cmd.is_acquisition:
                raise BiteplanError(
                    f"acquisition {cmd.kind.value} before the end of a sequence"
                )

    @property
    def efficiency(self) -> int:
        return len(self.commands)

    @property
    def kinds(self) -> tuple[SkillKind, ...]:
        return tuple(c.kind for c in self.commands)


def _masks_overlap(a: FoodMask, b: FoodMask) -> bool:
    return bool((a.pixels & b.pixels).any())


def _pick_push_topping(candidates: list[FoodItem], bed: FoodItem) -> FoodItem:
    """Topping nearest the bed boundary, by centroid-to-boundary distance.

    Ties break on centroid row-major order, then instance id.
    """

    def sort_key(topping: FoodItem):
        center = geometry.centroid(topping.mask)
        boundary = geometry.nearest_boundary_point(bed.mask, center)
        return (math.dist(center, boundary), center, topping.instance_id)

    return min(candidates, key=sort_key)


def _group_sweep_blocked(
    item: FoodItem, others: list[FoodItem], dense: Pixel
) -> tuple[bool, list[FoodItem]]:
    """Check whether every candidate grouping sweep crosses a topping.

    Returns (all_blocked, toppings_obstructing_any_candidate).
    """
    sparse = geometry.sparsest_point(item.mask, dense, [o.mask for o in others])
    h, w = item.mask.pixels.shape
    vec = np.array([sparse[0] - dense[0], sparse[1] - dense[1]], dtype=np.float64)
    blockers: dict[int, FoodItem] = {}
    all_blocked = True
    for angle in GROUP_CANDIDATE_ANGLES_DEG:
        rad = math.radians(angle)
        rot = np.array(
            [[math.cos(rad), -math.sin(rad)], [math.sin(rad), math.cos(rad)]]
        )
        start_f = np.array(dense, dtype=np.float64) + rot @ vec
        start = (
            int(np.clip(round(start_f[0]), 0, h - 1)),
            int(np.clip(round(start_f[1]), 0, w - 1)),
        )
        hit = [
            o for o in others if geometry.segment_intersects_mask(start, dense, o.mask)
        ]
        if hit:
            for o in hit:
                blockers.setdefault(o.instance_id, o)
        else:
            all_blocked = False
    return all_blocked, list(blockers.values())


def plan_acquisition(
    item: FoodItem, others: list[FoodItem], cfg: PlannerConfig
) -> SkillSequence:
    """Walk the decision tree and emit the skill sequence for one item."""
    if item.mask.area < 1:
        raise geometry.EmptyMaskError(f"item {item.instance_id} has an empty mask")
    category = item.category

    if category in COUNTABLE_CATEGORIES:
        return SkillSequence((skills.param_skewer(item),))

    if category == FoodCategory.SAUCE:
        return SkillSequence((skills.planner_dip(item),))

    if category == FoodCategory.CUTTABLE:
        axis = geometry.major_axis(item.mask)
        if axis.axis_length > cfg.bite_length:
            return SkillSequence(
                (skills.param_cut(item, cfg.bite_length), skills.param_skewer(item))
            )
        return SkillSequence((skills.param_skewer(item),))

    if category == FoodCategory.NOODLES:
        return _plan_noodles(item, others, cfg)

    if category == FoodCategory.SEMISOLID:
        return _plan_semisolid(item, others, cfg)

    raise UnknownCategoryError(f"unknown category {category!r}")


def _plan_noodles(
    item: FoodItem, others: list[FoodItem], cfg: PlannerConfig
) -> SkillSequence:
    dmap = geometry.density_map(item.mask, cfg.sigma)
    twirl = lambda: skills.param_twirl(item, cfg.sigma, cfg.crop_radius)  # noqa: E731

    if dmap.peak_value >= cfg.density_thresh:
        footprint_blockers = [
            o
            for o in others
            if geometry.disc_intersects_mask(dmap.peak, cfg.crop_radius, o.mask)
        ]
        if footprint_blockers:
            topping = _pick_push_topping(footprint_blockers, item)
            return SkillSequence((skills.param_push(topping, item), twirl()))
        return SkillSequence((twirl(),))

    if geometry.entropy_2d(dmap) >= cfg.entropy_thresh:
        all_blocked, blockers = _group_sweep_blocked(item, others, dmap.peak)
        group = skills.param_group(item, others, cfg.sigma)
        if all_blocked:
            topping = _pick_push_topping(blockers, item)
            return SkillSequence((skills.param_push(topping, item), group, twirl()))
        return SkillSequence((group, twirl()))

    on_bed = [o for o in others if _masks_overlap(o.mask, item.mask)]
    if on_bed:
        topping = _pick_push_topping(on_bed, item)
        return SkillSequence((skills.param_push(topping, item), twirl()))
    return SkillSequence((twirl(),))


def _plan_semisolid(
    item: FoodItem, others: list[FoodItem], cfg: PlannerConfig
) -> SkillSequence:
    dmap = geometry.density_map(item.mask, cfg.sigma)
    scoop = lambda: skills.param_scoop(item, others, cfg.sigma, cfg.scoop_max_dist)  # noqa: E731

    if dmap.peak_value >= cfg.density_thresh:
        _, all_blocked = geometry.farthest_clear_boundary(
            item.mask, dmap.peak, [o.mask for o in others]
        )
        if all_blocked:
            on_bed = [o for o in others if _masks_overlap(o.mask, item.mask)]
            candidates = on_bed if on_bed else list(others)
            topping = _pick_push_topping(candidates, item)
            return SkillSequence((skills.param_push(topping, item), scoop()))
        return SkillSequence((scoop(),))

    on_bed = [o for o in others if _masks_overlap(o.mask, item.mask)]
    if on_bed:
        topping = _pick_push_topping(on_bed, item)
        return SkillSequence((skills.param_push(topping, item), scoop()))
    return SkillSequence((scoop(),))


def efficiency_of(
    item: FoodItem, others: list[FoodItem], cfg: PlannerConfig
) -> int:
    """Number of actions required to pick up one bite of the item."""
    return plan_acquisition(item, others, cfg).efficiency
