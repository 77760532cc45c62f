"""Debug overlays: render a plate and its skill parameters to PNG.

Output is deterministic pixel-for-pixel: masks are painted per category,
then per-item markers are drawn (densest-point dot and tine tick for piles,
sweep arrows for scoop/group, the cut line for long cuttable items, and a
centroid dot plus tine tick for skewerable pieces).
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw

from . import geometry
from .plate import FoodCategory, FoodItem, PlateState
from .planner import PlannerConfig

SCALE = 3

CATEGORY_COLORS = {
    FoodCategory.MEAT_SEAFOOD: (164, 82, 60),
    FoodCategory.FRUIT: (196, 70, 110),
    FoodCategory.VEGETABLE: (70, 140, 70),
    FoodCategory.SAUCE: (150, 110, 40),
    FoodCategory.NOODLES: (210, 180, 90),
    FoodCategory.SEMISOLID: (200, 200, 170),
    FoodCategory.CUTTABLE: (180, 150, 60),
}

WHITE = (255, 255, 255)


def _pt(pixel, offset=0.5):
    """(row, col) -> scaled (x, y) draw coordinate."""
    r, c = pixel
    return ((c + offset) * SCALE, (r + offset) * SCALE)


def _tick(draw: ImageDraw.ImageDraw, center, angle_deg: float, length: float):
    rad = math.radians(angle_deg)
    dx = math.cos(rad) * length * SCALE
    dy = math.sin(rad) * length * SCALE
    cx, cy = _pt(center)
    draw.line([(cx - dx, cy - dy), (cx + dx, cy + dy)], fill=WHITE, width=2)


def _dot(draw: ImageDraw.ImageDraw, center, radius=3):
    cx, cy = _pt(center)
    draw.ellipse([cx - radius, cy - radius, cx + radius, cy + radius], fill=WHITE)


def _arrow(draw: ImageDraw.ImageDraw, start, end):
    sx, sy = _pt(start)
    ex, ey = _pt(end)
    draw.line([(sx, sy), (ex, ey)], fill=WHITE, width=2)
    angle = math.atan2(ey - sy, ex - sx)
    for side in (-1, 1):
        wing = angle + math.pi + side * math.radians(30)
        draw.line(
            [(ex, ey), (ex + 8 * math.cos(wing), ey + 8 * math.sin(wing))],
            fill=WHITE,
            width=2,
        )


def _item_overlay(draw, item: FoodItem, others, cfg: PlannerConfig):
    if item.category in (FoodCategory.NOODLES, FoodCategory.SEMISOLID):
        dense = geometry.densest_point(item.mask, cfg.sigma)
        sparse = geometry.sparsest_point(
            item.mask, dense, [o.mask for o in others]
        )
        _arrow(draw, sparse, dense)
        _dot(draw, dense)
        if item.category == FoodCategory.NOODLES:
            crop = geometry.crop_disc(item.mask, dense, cfg.crop_radius)
            local = crop if crop.area else item.mask
            axis = geometry.major_axis(local)
            _tick(draw, dense, axis.angle_deg + 90.0, cfg.crop_radius / 2)
        return
    if item.category == FoodCategory.CUTTABLE:
        axis = geometry.major_axis(item.mask)
        center = geometry.centroid(item.mask)
        _dot(draw, center)
        _tick(draw, center, axis.angle_deg + 90.0, 8)
        if axis.axis_length > cfg.bite_length:
            point, cut_angle = geometry.cut_point(item.mask, cfg.bite_length)
            _tick(draw, point, cut_angle, 12)
        return
    center = geometry.centroid(item.mask)
    _dot(draw, center)
    if item.category != FoodCategory.SAUCE:
        axis = geometry.major_axis(item.mask)
        _tick(draw, center, axis.angle_deg + 90.0, 8)


def render_plate(state: PlateState, cfg: PlannerConfig, path) -> None:
    obs = state.observation
    base = np.full((obs.height, obs.width, 3), 24, dtype=np.uint8)
    for item in obs.items:
        base[item.mask.pixels] = CATEGORY_COLORS[item.category]
    big = np.kron(base, np.ones((SCALE, SCALE, 1), dtype=np.uint8))
    image = Image.fromarray(big, "RGB")
    draw = ImageDraw.Draw(image)
    for item in obs.items:
        others = [o for o in obs.items if o.instance_id != item.instance_id]
        _item_overlay(draw, item, others, cfg)
    image.save(path, format="PNG")
