"""The seven-skill library: map item geometry to utensil commands.

Acquisition skills (skewer, twirl, scoop, dip) pick food up; pre-acquisition
skills (group, push, cut) rearrange it first.  Each parameterizer returns a
SkillCommand holding the utensil pose parameters plus symbolic waypoints.

Conventions: ``x`` is the column and ``y`` the row in plate-frame pixels;
``beta`` is utensil pitch (0 = tines plunging down, 90 = tines horizontal);
``gamma`` is tine roll, equivalent mod 180; ``psi`` is end-effector roll.
Heights are symbolic (approach / surface / lift) since the simulator only
needs their ordering.  After every acquisition the utensil tilts to
tines-horizontal so the bite does not slip off.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BiteplanError
from . import geometry
from .plate import FoodCategory, FoodItem, Pixel


class NoHeldItemError(BiteplanError):
    """Dip requested with nothing on the fork."""


class NonSauceTargetError(BiteplanError):
    """Dip requested into an item that is not a sauce."""


class ZLevel(str, enum.Enum):
    APPROACH = "approach"
    SURFACE = "surface"
    LIFT = "lift"


class SkillKind(str, enum.Enum):
    SKEWER = "skewer"
    TWIRL = "twirl"
    SCOOP = "scoop"
    DIP = "dip"
    GROUP = "group"
    PUSH = "push"
    CUT = "cut"


ACQUISITION_KINDS = frozenset(
    {SkillKind.SKEWER, SkillKind.TWIRL, SkillKind.SCOOP, SkillKind.DIP}
)
PRE_ACQUISITION_KINDS = frozenset(
    {SkillKind.GROUP, SkillKind.PUSH, SkillKind.CUT}
)

TINES_VERTICAL_BETA = 0.0
TINES_HORIZONTAL_BETA = 90.0

# Default approach offset for push, in px ahead of the topping centroid,
# opposite the push direction so the sweep carries the topping forward.
PUSH_APPROACH_OFFSET = 5.0

TWIRL_REVOLUTIONS = 2


@dataclass(frozen=True)
class UtensilAction:
    """One utensil waypoint: tip position, symbolic height, and angles."""

    x: float
    y: float
    z: ZLevel
    beta_deg: float = 0.0
    gamma_deg: float = 0.0
    psi_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "beta_deg", self.beta_deg % 360.0)
        object.__setattr__(self, "gamma_deg", self.gamma_deg % 360.0)
        object.__setattr__(self, "psi_deg", self.psi_deg % 360.0)


@dataclass(frozen=True)
class SkillCommand:
    """One parameterized skill ready for execution."""

    kind: SkillKind
    target_item: int
    params: dict = field(default_factory=dict)
    waypoints: tuple[UtensilAction, ...] = ()

    def __post_init__(self):
        if not self.waypoints:
            raise BiteplanError(f"{self.kind.value} command has no waypoints")
        object.__setattr__(self, "waypoints", tuple(self.waypoints))

    @property
    def is_acquisition(self) -> bool:
        return self.kind in ACQUISITION_KINDS

    def to_lines(self) -> list[str]:
        """Line-oriented log format: a skill line plus one line per waypoint."""
        parts = [f"skill {self.kind.value} item={self.target_item}"]
        for key in sorted(self.params):
            parts.append(f"{key}={_fmt(self.params[key])}")
        lines = [" ".join(parts)]
        for wp in self.waypoints:
            lines.append(
                f"wp {_fmt(wp.x)} {_fmt(wp.y)} {wp.z.value} "
                f"{_fmt(wp.beta_deg)} {_fmt(wp.gamma_deg)} {_fmt(wp.psi_deg)}"
            )
        return lines


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.3f}".rstrip("0").rstrip(".")
    if isinstance(value, tuple):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def _tine_angle(axis_angle_deg: float) -> float:
    """Tine roll orthogonal to an axis angle, folded into [0, 180)."""
    return (90.0 + axis_angle_deg) % 180.0


def param_skewer(item: FoodItem) -> SkillCommand:
    """Plunge at the centroid with tines across the major axis."""
    center = geometry.centroid(item.mask)
    axis = geometry.major_axis(item.mask)
    gamma = _tine_angle(axis.angle_deg)
    y, x = center
    return SkillCommand(
        kind=SkillKind.SKEWER,
        target_item=item.instance_id,
        params={"target": (x, y), "gamma_deg": gamma},
        waypoints=(
            UtensilAction(x, y, ZLevel.APPROACH, TINES_VERTICAL_BETA, gamma),
            UtensilAction(x, y, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
            UtensilAction(x, y, ZLevel.LIFT, TINES_HORIZONTAL_BETA, gamma),
        ),
    )


def param_twirl(item: FoodItem, sigma: float, crop_radius: float) -> SkillCommand:
    """Twirl at the densest point, tines across the local strand direction.

    The strand direction comes from the principal axis of the mask cropped
    to ``crop_radius`` around the densest point.
    """
    dense = geometry.densest_point(item.mask, sigma)
    crop = geometry.crop_disc(item.mask, dense, crop_radius)
    local = crop if crop.area >= 1 else item.mask
    axis = geometry.major_axis(local)
    gamma = _tine_angle(axis.angle_deg)
    y, x = dense
    return SkillCommand(
        kind=SkillKind.TWIRL,
        target_item=item.instance_id,
        params={"target": (x, y), "gamma_deg": gamma, "twirl_revolutions": TWIRL_REVOLUTIONS},
        waypoints=(
            UtensilAction(x, y, ZLevel.APPROACH, TINES_VERTICAL_BETA, gamma),
            UtensilAction(x, y, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
            UtensilAction(x, y, ZLevel.LIFT, TINES_HORIZONTAL_BETA, gamma),
        ),
    )


def param_scoop(
    item: FoodItem,
    others: list[FoodItem],
    sigma: float,
    max_dist: float,
) -> SkillCommand:
    """Scoop from the sparsest boundary toward the densest point.

    The sweep is truncated to ``max_dist`` ending at the densest point, and
    starts with tines horizontal.
    """
    dense = geometry.densest_point(item.mask, sigma)
    sparse = geometry.sparsest_point(item.mask, dense, [o.mask for o in others])
    start = np.array(sparse, dtype=np.float64)
    end = np.array(dense, dtype=np.float64)
    span = float(np.linalg.norm(end - start))
    if span > max_dist:
        start = end + (start - end) * (max_dist / span)
    sy, sx = float(start[0]), float(start[1])
    ey, ex = float(end[0]), float(end[1])
    return SkillCommand(
        kind=SkillKind.SCOOP,
        target_item=item.instance_id,
        params={"start": (sx, sy), "end": (ex, ey)},
        waypoints=(
            UtensilAction(sx, sy, ZLevel.APPROACH, TINES_HORIZONTAL_BETA),
            UtensilAction(sx, sy, ZLevel.SURFACE, TINES_HORIZONTAL_BETA),
            UtensilAction(ex, ey, ZLevel.SURFACE, TINES_HORIZONTAL_BETA),
            UtensilAction(ex, ey, ZLevel.LIFT, TINES_HORIZONTAL_BETA),
        ),
    )


def _dip_command(sauce: FoodItem, held_item: int | None) -> SkillCommand:
    center = geometry.centroid(sauce.mask)
    y, x = center
    params: dict = {"target": (x, y)}
    if held_item is not None:
        params["held_item"] = held_item
    return SkillCommand(
        kind=SkillKind.DIP,
        target_item=sauce.instance_id,
        params=params,
        waypoints=(
            UtensilAction(x, y, ZLevel.APPROACH, TINES_HORIZONTAL_BETA),
            UtensilAction(x, y, ZLevel.SURFACE, TINES_HORIZONTAL_BETA),
            UtensilAction(x, y, ZLevel.LIFT, TINES_HORIZONTAL_BETA),
        ),
    )


def param_dip(held_item: int | None, sauce: FoodItem) -> SkillCommand:
    """Dunk the held bite at the sauce centroid, tines horizontal."""
    if sauce.category != FoodCategory.SAUCE:
        raise NonSauceTargetError(
            f"dip target {sauce.label!r} is {sauce.category.value}, not sauce"
        )
    if held_item is None:
        raise NoHeldItemError("dip requested with an empty fork")
    return _dip_command(sauce, held_item)


def planner_dip(sauce: FoodItem) -> SkillCommand:
    """Planner-level dip with the held item left to the executor to bind."""
    if sauce.category != FoodCategory.SAUCE:
        raise NonSauceTargetError(
            f"dip target {sauce.label!r} is {sauce.category.value}, not sauce"
        )
    return _dip_command(sauce, None)


def param_group(item: FoodItem, others: list[FoodItem], sigma: float) -> SkillCommand:
    """Linear push from the sparsest to the densest point of a pile."""
    dense = geometry.densest_point(item.mask, sigma)
    sparse = geometry.sparsest_point(item.mask, dense, [o.mask for o in others])
    push_angle = _segment_angle(sparse, dense)
    gamma = _tine_angle(push_angle)
    sy, sx = sparse
    ey, ex = dense
    return SkillCommand(
        kind=SkillKind.GROUP,
        target_item=item.instance_id,
        params={"start": (sx, sy), "end": (ex, ey)},
        waypoints=(
            UtensilAction(sx, sy, ZLevel.APPROACH, TINES_VERTICAL_BETA, gamma),
            UtensilAction(sx, sy, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
            UtensilAction(ex, ey, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
            UtensilAction(ex, ey, ZLevel.LIFT, TINES_VERTICAL_BETA, gamma),
        ),
    )


def param_push(
    topping: FoodItem,
    bed: FoodItem,
    approach_offset: float = PUSH_APPROACH_OFFSET,
) -> SkillCommand:
    """Push a topping off the bed it obstructs.

    The sweep runs from just behind the topping centroid to one topping
    radius beyond the bed boundary point nearest the topping, so the topping
    ends up clear of the bed.
    """
    t_center = geometry.centroid(topping.mask)
    boundary = geometry.nearest_boundary_point(bed.mask, t_center)
    start = np.array(t_center, dtype=np.float64)
    end = np.array(boundary, dtype=np.float64)
    direction = end - start
    norm = float(np.linalg.norm(direction))
    if norm > 0:
        unit = direction / norm
    else:
        unit = np.array([0.0, 1.0])  # degenerate: centroid on the boundary
    # One extra pixel over the nominal radius: the rasterized disc extends
    # a fraction past the continuous radius, and the sweep must clear it.
    radius = math.sqrt(topping.mask.area / math.pi) + 1.0
    start = start - approach_offset * unit
    end = end + radius * unit
    h, w = bed.mask.pixels.shape
    start = np.clip(start, [0.0, 0.0], [h - 1.0, w - 1.0])
    end = np.clip(end, [0.0, 0.0], [h - 1.0, w - 1.0])
    push_angle = math.degrees(math.atan2(unit[0], unit[1])) % 180.0
    gamma = _tine_angle(push_angle)
    sy, sx = float(start[0]), float(start[1])
    ey, ex = float(end[0]), float(end[1])
    return SkillCommand(
        kind=SkillKind.PUSH,
        target_item=topping.instance_id,
        params={"start": (sx, sy), "end": (ex, ey), "bed_item": bed.instance_id},
        waypoints=(
            UtensilAction(sx, sy, ZLevel.APPROACH, TINES_VERTICAL_BETA, gamma),
            UtensilAction(sx, sy, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
            UtensilAction(ex, ey, ZLevel.SURFACE, TINES_VERTICAL_BETA, gamma),
        ),
    )


def param_cut(item: FoodItem, bite_length: float) -> SkillCommand:
    """Slice a bite-length piece off the item, orthogonal to its major axis."""
    point, cut_angle = geometry.cut_point(item.mask, bite_length)
    y, x = point
    return SkillCommand(
        kind=SkillKind.CUT,
        target_item=item.instance_id,
        params={"target": (x, y), "cut_angle_deg": cut_angle, "bite_length": float(bite_length)},
        waypoints=(
            UtensilAction(x, y, ZLevel.APPROACH, 90.0, 90.0, cut_angle),
            UtensilAction(x, y, ZLevel.SURFACE, 90.0, 90.0, cut_angle),
        ),
    )


def _segment_angle(a: Pixel, b: Pixel) -> float:
    """Angle of the a->b direction in [0, 180), 0 when a == b."""
    dy = b[0] - a[0]
    dx = b[1] - a[1]
    if dy == 0 and dx == 0:
        return 0.0
    return math.degrees(math.atan2(dy, dx)) % 180.0
