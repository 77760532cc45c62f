"""Pixel-level mask analyses: density heatmaps, entropy, axes, and boundaries.

All functions are pure and deterministic.  Every argmax/argmin style choice
breaks ties toward the smallest (row, col) in row-major order so repeated
calls (and golden tests) always see the same pixel.

The density heatmap is the Gaussian-filtered binary raster with a unit-mass
kernel, so values live in [0, 1] and a value of 1.0 means the whole kernel
window sits on food.  The map's peak value is therefore a meaningful
"how piled up is this item" statistic rather than a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import BiteplanError
from .plate import FoodMask, Pixel

# Kernel support is cut at 3 sigma, matching a (60, 60) footprint at the
# default sigma of 10 px.
GAUSSIAN_TRUNCATE = 3.0


class EmptyMaskError(BiteplanError):
    """Operation requires a mask with at least one set pixel."""


class AllZeroMapError(BiteplanError):
    """Entropy is undefined for a map with no positive value."""


class TooShortAxisError(BiteplanError):
    """Cut point requested on an item no longer than the bite length."""


@dataclass(frozen=True)
class DensityMap:
    """Gaussian-smoothed food density over the plate.

    ``peak`` is the first (row-major) pixel attaining the maximum value.
    """

    width: int
    height: int
    values: np.ndarray
    peak: Pixel
    peak_value: float

    @classmethod
    def from_values(cls, values: np.ndarray) -> "DensityMap":
        values = np.asarray(values, dtype=np.float64)
        flat_idx = int(np.argmax(values))
        peak = (flat_idx // values.shape[1], flat_idx % values.shape[1])
        return cls(
            width=values.shape[1],
            height=values.shape[0],
            values=values,
            peak=peak,
            peak_value=float(values[peak]),
        )


@dataclass(frozen=True)
class AxisEstimate:
    """Principal axis of a mask: orientation, extremities, and length.

    ``angle_deg`` is measured from the +x (column) axis into [0, 180).
    ``endpoints`` are the set pixels with extreme projections onto the axis,
    ordered row-major.  ``degenerate`` is set when the pixel covariance is
    isotropic (round items), in which case the angle is reported as 0.
    """

    angle_deg: float
    endpoints: tuple[Pixel, Pixel]
    axis_length: float
    degenerate: bool = False


def density_map(mask: FoodMask, sigma: float) -> DensityMap:
    """Gaussian-filter the binary raster into a density heatmap."""
    if mask.area < 1:
        raise EmptyMaskError("density map of an empty mask")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    values = ndimage.gaussian_filter(
        mask.pixels.astype(np.float64),
        sigma=sigma,
        mode="constant",
        truncate=GAUSSIAN_TRUNCATE,
    )
    values.setflags(write=False)
    return DensityMap.from_values(values)


def densest_point(mask: FoodMask, sigma: float) -> Pixel:
    """The argmax of the density heatmap (row-major first on ties)."""
    return density_map(mask, sigma).peak


def entropy_2d(dmap: DensityMap) -> float:
    """Shannon entropy of the heatmap, normalized into [0, 1].

    The heatmap is renormalized to a probability distribution and the
    entropy divided by log(plate pixel count), so 0 is a point mass and 1 a
    uniform plate.
    """
    total = float(dmap.values.sum())
    if total <= 0.0:
        raise AllZeroMapError("entropy of an all-zero map")
    p = dmap.values / total
    positive = p[p > 0]
    entropy = float(-(positive * np.log(positive)).sum())
    pixel_count = dmap.width * dmap.height
    if pixel_count <= 1:
        return 0.0
    return entropy / math.log(pixel_count)


def _mask_coords(mask: FoodMask) -> np.ndarray:
    coords = np.argwhere(mask.pixels)  # row-major sorted (row, col) pairs
    if coords.shape[0] == 0:
        raise EmptyMaskError("operation on an empty mask")
    return coords


def major_axis(mask: FoodMask) -> AxisEstimate:
    """First principal component of the set-pixel coordinates."""
    coords = _mask_coords(mask).astype(np.float64)
    if coords.shape[0] == 1:
        p = (int(coords[0, 0]), int(coords[0, 1]))
        return AxisEstimate(0.0, (p, p), 0.0, degenerate=True)
    centered = coords - coords.mean(axis=0)
    cov = centered.T @ centered / coords.shape[0]
    evals, evecs = np.linalg.eigh(cov)  # ascending eigenvalues
    lead, trail = float(evals[1]), float(evals[0])
    degenerate = (lead - trail) <= 1e-9 * max(lead, 1e-12)
    if degenerate:
        direction = np.array([0.0, 1.0])  # fall back to the column axis
        angle = 0.0
    else:
        v_row, v_col = float(evecs[0, 1]), float(evecs[1, 1])
        angle = math.degrees(math.atan2(v_row, v_col)) % 180.0
        direction = np.array([v_row, v_col])
    proj = centered @ direction
    lo = (int(coords[np.argmin(proj), 0]), int(coords[np.argmin(proj), 1]))
    hi = (int(coords[np.argmax(proj), 0]), int(coords[np.argmax(proj), 1]))
    ep0, ep1 = sorted((lo, hi))
    length = math.dist(ep0, ep1)
    return AxisEstimate(angle, (ep0, ep1), length, degenerate=degenerate)


def boundary_pixels(mask: FoodMask) -> list[Pixel]:
    """Set pixels with at least one unset 4-neighbor (image edge counts)."""
    px = mask.pixels
    if not px.any():
        raise EmptyMaskError("boundary of an empty mask")
    interior = np.zeros_like(px)
    interior[1:-1, 1:-1] = (
        px[1:-1, 1:-1]
        & px[:-2, 1:-1]
        & px[2:, 1:-1]
        & px[1:-1, :-2]
        & px[1:-1, 2:]
    )
    coords = np.argwhere(px & ~interior)
    return [(int(r), int(c)) for r, c in coords]


def bresenham_line(a: Pixel, b: Pixel) -> list[Pixel]:
    """Integer rasterization of the segment a-b, inclusive of endpoints."""
    r0, c0 = a
    r1, c1 = b
    dr = abs(r1 - r0)
    dc = abs(c1 - c0)
    sr = 1 if r0 < r1 else -1
    sc = 1 if c0 < c1 else -1
    err = dc - dr
    points = []
    r, c = r0, c0
    while True:
        points.append((r, c))
        if r == r1 and c == c1:
            break
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr
    return points


def segment_intersects_mask(a: Pixel, b: Pixel, mask: FoodMask) -> bool:
    """True iff any pixel on the Bresenham segment a-b is set in the mask."""
    px = mask.pixels
    h, w = px.shape
    for r, c in bresenham_line(a, b):
        if 0 <= r < h and 0 <= c < w and px[r, c]:
            return True
    return False


def farthest_clear_boundary(
    mask: FoodMask, densest: Pixel, obstructions: list[FoodMask]
) -> tuple[Pixel, bool]:
    """Farthest boundary pixel with a clear segment to the densest point.

    Returns ``(pixel, all_blocked)``.  Candidates are scanned farthest first
    (row-major on distance ties); if every candidate's segment crosses an
    obstruction, the unconditionally farthest pixel is returned with
    ``all_blocked`` set.
    """
    candidates = boundary_pixels(mask)
    dr = densest[0]
    dc = densest[1]
    candidates.sort(key=lambda p: (-((p[0] - dr) ** 2 + (p[1] - dc) ** 2), p[0], p[1]))
    for p in candidates:
        if not any(segment_intersects_mask(p, densest, obs) for obs in obstructions):
            return p, False
    return candidates[0], True


def sparsest_point(
    mask: FoodMask, densest: Pixel, obstructions: list[FoodMask]
) -> Pixel:
    """Boundary pixel farthest from the densest point, avoiding obstructions."""
    point, _ = farthest_clear_boundary(mask, densest, obstructions)
    return point


def centroid(mask: FoodMask) -> Pixel:
    """Integer-rounded (half up) mean of the set-pixel coordinates."""
    coords = _mask_coords(mask)
    mean_r, mean_c = coords.mean(axis=0)
    return (int(math.floor(mean_r + 0.5)), int(math.floor(mean_c + 0.5)))


def cut_point(mask: FoodMask, bite_length: float) -> tuple[Pixel, float]:
    """Point one bite length along the major axis from the first extremity.

    Returns the nearest set pixel to that point together with the cut-line
    angle (orthogonal to the major axis, in [0, 180)).  Raises
    TooShortAxisError when the axis is not longer than the bite.
    """
    axis = major_axis(mask)
    if axis.axis_length <= bite_length:
        raise TooShortAxisError(
            f"axis length {axis.axis_length:.1f} <= bite length {bite_length}"
        )
    ep0, ep1 = axis.endpoints
    direction = np.array([ep1[0] - ep0[0], ep1[1] - ep0[1]], dtype=np.float64)
    direction /= np.linalg.norm(direction)
    target = np.array(ep0, dtype=np.float64) + bite_length * direction
    coords = _mask_coords(mask)
    d2 = ((coords - target) ** 2).sum(axis=1)
    best = coords[int(np.argmin(d2))]  # argmin is row-major-first on ties
    angle = (axis.angle_deg + 90.0) % 180.0
    return (int(best[0]), int(best[1])), angle


def nearest_boundary_point(mask: FoodMask, from_pixel: Pixel) -> Pixel:
    """Boundary pixel closest to ``from_pixel`` (row-major on ties)."""
    fr, fc = from_pixel
    return min(
        boundary_pixels(mask),
        key=lambda p: ((p[0] - fr) ** 2 + (p[1] - fc) ** 2, p[0], p[1]),
    )


def crop_disc(mask: FoodMask, center: Pixel, radius: float) -> FoodMask:
    """Mask restricted to a disc around ``center`` (plate-sized result)."""
    h, w = mask.pixels.shape
    rr, cc = np.ogrid[:h, :w]
    disc = (rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius * radius
    return FoodMask(mask.pixels & disc)


def disc_intersects_mask(center: Pixel, radius: float, mask: FoodMask) -> bool:
    """True iff a disc around ``center`` covers any set pixel of the mask."""
    return crop_disc(mask, center, radius).area > 0
