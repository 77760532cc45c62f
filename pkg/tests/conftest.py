import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from biteplan.plate import (
    FoodCategory,
    FoodItem,
    FoodMask,
    PlateObservation,
    PlateState,
)

REPO_ROOT = os.path.join(os.path.dirname(__file__), "..")
FIXTURES_DIR = os.path.abspath(os.path.join(REPO_ROOT, "fixtures"))
PLATES_DIR = os.path.join(FIXTURES_DIR, "plates")
TREE_DIR = os.path.join(FIXTURES_DIR, "tree")
CASSETTES_DIR = os.path.join(FIXTURES_DIR, "cassettes")
DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

PLATE_STEMS = [
    "spaghetti_meatballs",
    "fettuccine_chicken_broccoli",
    "mashed_sausage",
    "oatmeal_strawberries",
    "appetizer",
    "dessert",
]


def fixture_path(kind: str, stem: str) -> str:
    return os.path.join(FIXTURES_DIR, kind, f"{stem}.txt")


def cassette_path(name: str) -> str:
    return os.path.join(CASSETTES_DIR, name)


def make_mask(size: int, fill=None) -> FoodMask:
    arr = np.zeros((size, size), dtype=bool)
    if fill is not None:
        arr[fill] = True
    return FoodMask(arr)


def disc_mask(size: int, center, radius) -> FoodMask:
    arr = np.zeros((size, size), dtype=bool)
    rr, cc = np.ogrid[:size, :size]
    arr[(rr - center[0]) ** 2 + (cc - center[1]) ** 2 <= radius * radius] = True
    return FoodMask(arr)


def rect_mask(size: int, top, left, height, width) -> FoodMask:
    arr = np.zeros((size, size), dtype=bool)
    arr[top : top + height, left : left + width] = True
    return FoodMask(arr)


def single_item_state(
    label: str, category: FoodCategory, mask: FoodMask
) -> PlateState:
    item = FoodItem(label, category, mask, 1)
    obs = PlateObservation(mask.width, mask.height, (item,))
    return PlateState(obs)


@pytest.fixture
def planes_available():
    missing = [
        stem for stem in PLATE_STEMS if not os.path.exists(fixture_path("plates", stem))
    ]
    if missing:
        pytest.fail(f"missing plate fixtures: {missing}")
    return PLATE_STEMS
