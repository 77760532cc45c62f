#!/usr/bin/env python3
"""Regenerate the plate fixtures under fixtures/.

Every fixture is authored here as code (discs, bars, strands) and written
through the package's own saver, then immediately re-loaded and planned to
assert it exercises the decision-tree branch it exists for.  Run from the
repository root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import math
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from biteplan import geometry  # noqa: E402
from biteplan.plate import (  # noqa: E402
    FoodCategory,
    FoodItem,
    FoodMask,
    PlateObservation,
    PlateState,
    load_fixture,
    save_fixture,
)
from biteplan.planner import PlannerConfig, plan_acquisition  # noqa: E402

ROOT = os.path.join(os.path.dirname(__file__), "..")
TREE_DIR = os.path.join(ROOT, "fixtures", "tree")
PLATES_DIR = os.path.join(ROOT, "fixtures", "plates")

CFG = PlannerConfig()


def blank(size: int) -> np.ndarray:
    return np.zeros((size, size), dtype=bool)


def disc(arr: np.ndarray, center: tuple[int, int], radius: float) -> None:
    h, w = arr.shape
    rr, cc = np.ogrid[:h, :w]
    arr[(rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius * radius] = True


def rect(arr: np.ndarray, top: int, left: int, height: int, width: int) -> None:
    arr[top : top + height, left : left + width] = True


def rot_bar(
    arr: np.ndarray,
    center: tuple[float, float],
    length: float,
    width: float,
    angle_deg: float,
) -> None:
    """Fill a length x width bar rotated by angle_deg about its center."""
    h, w = arr.shape
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    rad = math.radians(angle_deg)
    dy = rr - center[0]
    dx = cc - center[1]
    along = dx * math.cos(rad) + dy * math.sin(rad)
    across = -dx * math.sin(rad) + dy * math.cos(rad)
    arr[(np.abs(along) <= length / 2) & (np.abs(across) <= width / 2)] = True


def wavy_strands(
    arr: np.ndarray,
    rows: list[int],
    col_range: tuple[int, int],
    thickness: int,
    amplitude: float,
    period: float,
) -> None:
    """Sinusoidal horizontal strands, one per base row."""
    c0, c1 = col_range
    h, _ = arr.shape
    for base in rows:
        for c in range(c0, c1):
            r = int(round(base + amplitude * math.sin(2 * math.pi * c / period)))
            lo = max(0, r)
            hi = min(h, r + thickness)
            arr[lo:hi, c] = True


def plate(size: int, items: list[FoodItem], px_per_mm: float = 2.0) -> PlateState:
    return PlateState(PlateObservation(size, size, tuple(items), 0, px_per_mm))


def item(label: str, category: FoodCategory, arr: np.ndarray, iid: int) -> FoodItem:
    return FoodItem(label, category, FoodMask(arr), iid)


def diag(state: PlateState) -> str:
    parts = []
    for it in state.observation.items:
        if it.category in (FoodCategory.NOODLES, FoodCategory.SEMISOLID):
            dm = geometry.density_map(it.mask, CFG.sigma)
            ent = geometry.entropy_2d(dm)
            parts.append(
                f"{it.label}#{it.instance_id}: area={it.mask.area} "
                f"peak={dm.peak_value:.3f} entropy={ent:.3f}"
            )
        else:
            parts.append(f"{it.label}#{it.instance_id}: area={it.mask.area}")
    return "; ".join(parts)


def check(state: PlateState, expectations: dict[int, list[str]], name: str) -> None:
    obs = state.observation
    for iid, expected in expectations.items():
        target = obs.item_by_id(iid)
        others = [o for o in obs.items if o.instance_id != iid]
        seq = plan_acquisition(target, others, CFG)
        got = [k.value for k in seq.kinds]
        if got != expected:
            raise SystemExit(
                f"{name}: item {iid} ({target.label}) planned {got}, "
                f"expected {expected}\n  diag: {diag(state)}"
            )


def save_and_verify(
    state: PlateState, directory: str, name: str, expectations: dict[int, list[str]]
) -> None:
    path = os.path.join(directory, f"{name}.txt")
    save_fixture(state, path)
    reloaded = load_fixture(path)
    check(reloaded, expectations, name)
    print(f"{name}: OK  ({diag(reloaded)})")


# ---------------------------------------------------------------------------
# Decision-tree suite
# ---------------------------------------------------------------------------


def tree_fixtures() -> None:
    size = 160

    arr = blank(size)
    disc(arr, (80, 80), 9)
    save_and_verify(
        plate(size, [item("broccoli", FoodCategory.VEGETABLE, arr, 1)]),
        TREE_DIR,
        "veg_isolated",
        {1: ["skewer"]},
    )

    arr = blank(size)
    disc(arr, (70, 90), 8)
    save_and_verify(
        plate(size, [item("strawberry", FoodCategory.FRUIT, arr, 1)]),
        TREE_DIR,
        "fruit_isolated",
        {1: ["skewer"]},
    )

    arr = blank(size)
    rect(arr, 70, 60, 16, 30)
    save_and_verify(
        plate(size, [item("chicken", FoodCategory.MEAT_SEAFOOD, arr, 1)]),
        TREE_DIR,
        "meat_isolated",
        {1: ["skewer"]},
    )

    arr = blank(size)
    disc(arr, (40, 40), 13)
    save_and_verify(
        plate(size, [item("ranch", FoodCategory.SAUCE, arr, 1)]),
        TREE_DIR,
        "sauce_only",
        {1: ["dip"]},
    )

    # Dense noodle pile, nothing in the twirl footprint.
    arr = blank(size)
    disc(arr, (80, 80), 40)
    save_and_verify(
        plate(size, [item("spaghetti", FoodCategory.NOODLES, arr, 1)]),
        TREE_DIR,
        "noodles_dense_clear",
        {1: ["twirl"]},
    )

    # Dense pile with a meatball inside the twirl footprint.
    noodles = blank(size)
    disc(noodles, (80, 80), 40)
    ball = blank(size)
    disc(ball, (80, 95), 10)
    save_and_verify(
        plate(
            size,
            [
                item("spaghetti", FoodCategory.NOODLES, noodles, 1),
                item("meatball", FoodCategory.MEAT_SEAFOOD, ball, 2),
            ],
        ),
        TREE_DIR,
        "noodles_dense_topping",
        {1: ["push", "twirl"], 2: ["skewer"]},
    )

    # Spread-out strands: low peak, high entropy, grouping unobstructed.
    strands = blank(size)
    wavy_strands(
        strands,
        rows=[18, 40, 62, 84, 106, 128, 144],
        col_range=(10, 150),
        thickness=3,
        amplitude=5.0,
        period=70.0,
    )
    save_and_verify(
        plate(size, [item("spaghetti", FoodCategory.NOODLES, strands.copy(), 1)]),
        TREE_DIR,
        "noodles_sparse_clear",
        {1: ["group", "twirl"]},
    )

    # Same strands with a meatball parked on the densest point: every
    # grouping sweep ends there, so all candidates are blocked.
    dense_px = geometry.densest_point(FoodMask(strands), CFG.sigma)
    ball = blank(size)
    disc(ball, dense_px, 11)
    save_and_verify(
        plate(
            size,
            [
                item("spaghetti", FoodCategory.NOODLES, strands.copy(), 1),
                item("meatball", FoodCategory.MEAT_SEAFOOD, ball, 2),
            ],
        ),
        TREE_DIR,
        "noodles_sparse_blocked",
        {1: ["push", "group", "twirl"], 2: ["skewer"]},
    )

    # Compact thin patch: below both thresholds.  Alone -> default twirl;
    # with an overlapping topping -> push then twirl.
    patch = blank(size)
    for row in (70, 76, 82, 88):
        rect(patch, row, 66, 2, 30)
    save_and_verify(
        plate(size, [item("lo mein", FoodCategory.NOODLES, patch.copy(), 1)]),
        TREE_DIR,
        "noodles_low_clear",
        {1: ["twirl"]},
    )

    ball = blank(size)
    disc(ball, (79, 80), 8)
    save_and_verify(
        plate(
            size,
            [
                item("lo mein", FoodCategory.NOODLES, patch.copy(), 1),
                item("meatball", FoodCategory.MEAT_SEAFOOD, ball, 2),
            ],
        ),
        TREE_DIR,
        "noodles_low_topping",
        {1: ["push", "twirl"], 2: ["skewer"]},
    )

    # Dense semisolid pile, clear scoop path.
    arr = blank(size)
    disc(arr, (80, 80), 36)
    save_and_verify(
        plate(size, [item("mashed potatoes", FoodCategory.SEMISOLID, arr, 1)]),
        TREE_DIR,
        "semisolid_dense_clear",
        {1: ["scoop"]},
    )

    # Sausage across the pile center blocks every boundary-to-peak sweep.
    mash = blank(size)
    disc(mash, (80, 80), 36)
    sausage = blank(size)
    rect(sausage, 74, 50, 12, 60)
    save_and_verify(
        plate(
            size,
            [
                item("mashed potatoes", FoodCategory.SEMISOLID, mash, 1),
                item("sausage", FoodCategory.MEAT_SEAFOOD, sausage, 2),
            ],
        ),
        TREE_DIR,
        "semisolid_dense_blocked",
        {1: ["push", "scoop"], 2: ["skewer"]},
    )

    # Thin smear below the density threshold.
    smear = blank(size)
    for row in (70, 76, 82, 88):
        rect(smear, row, 62, 2, 36)
    save_and_verify(
        plate(size, [item("oatmeal", FoodCategory.SEMISOLID, smear.copy(), 1)]),
        TREE_DIR,
        "semisolid_low_clear",
        {1: ["scoop"]},
    )

    berry = blank(size)
    disc(berry, (79, 80), 8)
    save_and_verify(
        plate(
            size,
            [
                item("oatmeal", FoodCategory.SEMISOLID, smear.copy(), 1),
                item("strawberry", FoodCategory.FRUIT, berry, 2),
            ],
        ),
        TREE_DIR,
        "semisolid_low_topping",
        {1: ["push", "scoop"], 2: ["skewer"]},
    )

    # Whole banana: long axis forces a cut first.
    arr = blank(size)
    rect(arr, 74, 20, 14, 120)
    save_and_verify(
        plate(size, [item("banana", FoodCategory.CUTTABLE, arr, 1)]),
        TREE_DIR,
        "cuttable_long",
        {1: ["cut", "skewer"]},
    )

    # Banana slice: already bite-sized.
    arr = blank(size)
    rect(arr, 74, 66, 14, 30)
    save_and_verify(
        plate(size, [item("banana", FoodCategory.CUTTABLE, arr, 1)]),
        TREE_DIR,
        "cuttable_short",
        {1: ["skewer"]},
    )


# ---------------------------------------------------------------------------
# Six-plate evaluation suite
# ---------------------------------------------------------------------------


def plate_spaghetti_meatballs() -> None:
    size = 160
    noodles = blank(size)
    disc(noodles, (80, 80), 36)
    mb1 = blank(size)
    disc(mb1, (80, 92), 10)
    mb2 = blank(size)
    disc(mb2, (36, 128), 10)
    mb3 = blank(size)
    disc(mb3, (124, 128), 10)
    state = plate(
        size,
        [
            item("spaghetti", FoodCategory.NOODLES, noodles, 1),
            item("meatball", FoodCategory.MEAT_SEAFOOD, mb1, 2),
            item("meatball", FoodCategory.MEAT_SEAFOOD, mb2, 3),
            item("meatball", FoodCategory.MEAT_SEAFOOD, mb3, 4),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "spaghetti_meatballs",
        {1: ["push", "twirl"], 2: ["skewer"], 3: ["skewer"], 4: ["skewer"]},
    )


def plate_fettuccine() -> None:
    size = 160
    strands = blank(size)
    wavy_strands(
        strands,
        rows=[16, 38, 60, 82, 104, 126, 142],
        col_range=(12, 148),
        thickness=4,
        amplitude=5.0,
        period=64.0,
    )
    dense_px = geometry.densest_point(FoodMask(strands), CFG.sigma)
    chicken = blank(size)
    disc(chicken, dense_px, 12)
    br1 = blank(size)
    disc(br1, (20, 140), 8)
    br2 = blank(size)
    disc(br2, (140, 16), 8)
    state = plate(
        size,
        [
            item("fettuccine", FoodCategory.NOODLES, strands, 1),
            item("chicken", FoodCategory.MEAT_SEAFOOD, chicken, 2),
            item("broccoli", FoodCategory.VEGETABLE, br1, 3),
            item("broccoli", FoodCategory.VEGETABLE, br2, 4),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "fettuccine_chicken_broccoli",
        {
            1: ["push", "group", "twirl"],
            2: ["skewer"],
            3: ["skewer"],
            4: ["skewer"],
        },
    )


def plate_mashed_sausage() -> None:
    size = 160
    mash = blank(size)
    disc(mash, (80, 72), 34)
    sausage = blank(size)
    rect(sausage, 74, 42, 12, 60)
    state = plate(
        size,
        [
            item("mashed potatoes", FoodCategory.SEMISOLID, mash, 1),
            item("sausage", FoodCategory.MEAT_SEAFOOD, sausage, 2),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "mashed_sausage",
        {1: ["push", "scoop"], 2: ["skewer"]},
    )


def plate_oatmeal_strawberries() -> None:
    size = 140
    oats = blank(size)
    disc(oats, (70, 58), 32)
    s1 = blank(size)
    disc(s1, (28, 112), 7)
    s2 = blank(size)
    disc(s2, (104, 114), 7)
    state = plate(
        size,
        [
            item("oatmeal", FoodCategory.SEMISOLID, oats, 1),
            item("strawberry", FoodCategory.FRUIT, s1, 2),
            item("strawberry", FoodCategory.FRUIT, s2, 3),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "oatmeal_strawberries",
        {1: ["scoop"], 2: ["skewer"], 3: ["skewer"]},
    )


def plate_appetizer() -> None:
    size = 160
    c1 = blank(size)
    rect(c1, 24, 20, 8, 40)
    c2 = blank(size)
    rect(c2, 40, 24, 8, 40)
    melon = blank(size)
    disc(melon, (84, 40), 13)
    s1 = blank(size)
    disc(s1, (120, 44), 8)
    s2 = blank(size)
    disc(s2, (126, 70), 8)
    ranch = blank(size)
    disc(ranch, (40, 124), 13)
    choc = blank(size)
    disc(choc, (110, 124), 13)
    state = plate(
        size,
        [
            item("celery", FoodCategory.VEGETABLE, c1, 1),
            item("celery", FoodCategory.VEGETABLE, c2, 2),
            item("watermelon", FoodCategory.FRUIT, melon, 3),
            item("strawberry", FoodCategory.FRUIT, s1, 4),
            item("strawberry", FoodCategory.FRUIT, s2, 5),
            item("ranch", FoodCategory.SAUCE, ranch, 6),
            item("chocolate sauce", FoodCategory.SAUCE, choc, 7),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "appetizer",
        {i: ["skewer"] for i in range(1, 6)} | {6: ["dip"], 7: ["dip"]},
    )


def plate_dessert() -> None:
    size = 160
    banana = blank(size)
    rect(banana, 40, 20, 14, 120)
    b1 = blank(size)
    rect(b1, 96, 36, 18, 24)
    b2 = blank(size)
    rect(b2, 96, 84, 18, 24)
    choc = blank(size)
    disc(choc, (128, 132), 13)
    state = plate(
        size,
        [
            item("banana", FoodCategory.CUTTABLE, banana, 1),
            item("brownie", FoodCategory.CUTTABLE, b1, 2),
            item("brownie", FoodCategory.CUTTABLE, b2, 3),
            item("chocolate sauce", FoodCategory.SAUCE, choc, 4),
        ],
    )
    save_and_verify(
        state,
        PLATES_DIR,
        "dessert",
        {1: ["cut", "skewer"], 2: ["skewer"], 3: ["skewer"], 4: ["dip"]},
    )


def main() -> None:
    os.makedirs(TREE_DIR, exist_ok=True)
    os.makedirs(PLATES_DIR, exist_ok=True)
    tree_fixtures()
    plate_spaghetti_meatballs()
    plate_fettuccine()
    plate_mashed_sausage()
    plate_oatmeal_strawberries()
    plate_appetizer()
    plate_dessert()
    print("all fixtures verified")


if __name__ == "__main__":
    main()
