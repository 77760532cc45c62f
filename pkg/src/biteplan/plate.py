"""Plate-domain types and the text fixture format.

A plate is a W x H pixel grid holding segmented food items.  Every item
carries a binary mask the same size as the plate; all downstream geometry
(density, axes, boundaries) is computed from these masks.  Types in this
module are immutable after construction: the simulator mutates the world
only by building new states.

Fixture file format (UTF-8 text, line oriented)::

    plate <width> <height> <px_per_mm>
    item <instance_id> <label ...> <category>
    <height lines of run-length pairs "start:len", space separated>
    end
    ...

Each item block carries exactly one line per raster row; a row with no set
pixels is an empty line.  Lines starting with ``#`` are comments.  The
writer additionally emits ``# frame: N`` and ``# eaten: <label>`` directive
comments after the header so that a mid-meal state round-trips exactly;
readers that discard comments still recover the plate geometry.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import BiteplanError


class FixtureError(BiteplanError):
    """Fixture file is missing, malformed, or violates a plate invariant."""


class PlateInvariantError(BiteplanError):
    """A constructed plate value violates one of its invariants."""


class FoodCategory(str, enum.Enum):
    MEAT_SEAFOOD = "meat_seafood"
    FRUIT = "fruit"
    VEGETABLE = "vegetable"
    SAUCE = "sauce"
    NOODLES = "noodles"
    SEMISOLID = "semisolid"
    CUTTABLE = "cuttable"


# Countable categories are stored one item per physical piece; the rest are
# one item per contiguous pile.
COUNTABLE_CATEGORIES = frozenset(
    {FoodCategory.MEAT_SEAFOOD, FoodCategory.FRUIT, FoodCategory.VEGETABLE}
)

Pixel = tuple[int, int]  # (row, col)


class FoodMask:
    """Plate-sized binary raster; the carrier of all item geometry.

    Wraps a read-only boolean array indexed ``[row, col]``.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.ascontiguousarray(np.asarray(pixels, dtype=bool))
        if arr.ndim != 2:
            raise PlateInvariantError(f"mask must be 2-D, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name, value):
        raise AttributeError("FoodMask is immutable")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def area(self) -> int:
        return int(self.pixels.sum())

    def __contains__(self, pixel: Pixel) -> bool:
        r, c = pixel
        return 0 <= r < self.height and 0 <= c < self.width and bool(self.pixels[r, c])

    def __eq__(self, other) -> bool:
        if not isinstance(other, FoodMask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    def __hash__(self):
        return hash((self.pixels.shape, self.pixels.tobytes()))

    def __repr__(self):
        return f"FoodMask({self.width}x{self.height}, area={self.area})"

    @classmethod
    def from_rle(cls, width: int, height: int, rows: list[list[tuple[int, int]]]) -> "FoodMask":
        """Decode per-row (column_start, run_length) pairs into a raster."""
        if len(rows) != height:
            raise FixtureError(f"expected {height} RLE rows, got {len(rows)}")
        arr = np.zeros((height, width), dtype=bool)
        for r, pairs in enumerate(rows):
            prev_end = 0
            for start, length in pairs:
                if length < 1:
                    raise FixtureError(f"row {r}: run length {length} < 1")
                if start < prev_end:
                    raise FixtureError(f"row {r}: run at {start} overlaps or is out of order")
                if start + length > width:
                    raise FixtureError(f"row {r}: run {start}:{length} exceeds width {width}")
                arr[r, start : start + length] = True
                prev_end = start + length
        return cls(arr)

    def rle_rows(self) -> list[list[tuple[int, int]]]:
        """Encode the raster as per-row (column_start, run_length) pairs."""
        rows = []
        for r in range(self.height):
            row = self.pixels[r]
            padded = np.concatenate(([False], row, [False]))
            starts = np.flatnonzero(~padded[:-1] & padded[1:])
            ends = np.flatnonzero(padded[:-1] & ~padded[1:])
            rows.append([(int(s), int(e - s)) for s, e in zip(starts, ends)])
        return rows


@dataclass(frozen=True)
class FoodItem:
    """One segmented food item: a semantic label, a category, and a mask."""

    label: str
    category: FoodCategory
    mask: FoodMask
    instance_id: int

    def __post_init__(self):
        if not self.label:
            raise PlateInvariantError("item label must be non-empty")
        if self.mask.area == 0:
            raise PlateInvariantError(
                f"item {self.instance_id} ({self.label!r}) has an empty mask"
            )


@dataclass(frozen=True)
class PlateObservation:
    """A snapshot of the plate: dimensions plus the detected items."""

    width: int
    height: int
    items: tuple[FoodItem, ...]
    frame_id: int = 0
    px_per_mm: float = 2.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise PlateInvariantError(f"plate {self.width}x{self.height} is not positive")
        object.__setattr__(self, "items", tuple(self.items))
        seen = set()
        for item in self.items:
            if item.instance_id in seen:
                raise PlateInvariantError(f"duplicate instance_id {item.instance_id}")
            seen.add(item.instance_id)
            if item.mask.width != self.width or item.mask.height != self.height:
                raise PlateInvariantError(
                    f"item {item.instance_id} ({item.label!r}) mask is "
                    f"{item.mask.width}x{item.mask.height}, plate is "
                    f"{self.width}x{self.height}"
                )

    def item_by_id(self, instance_id: int) -> FoodItem:
        for item in self.items:
            if item.instance_id == instance_id:
                return item
        raise KeyError(instance_id)


@dataclass(frozen=True)
class PlateState:
    """The planner's world model: an observation plus the meal history.

    ``dips_available`` is derived: every sauce-category item on the plate is
    offered as a dip.  ``consumed_history`` is append-only; new states carry
    the old history plus at most one new label.
    """

    observation: PlateObservation
    consumed_history: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "consumed_history", tuple(self.consumed_history))

    @property
    def dips_available(self) -> tuple[FoodItem, ...]:
        return tuple(
            i for i in self.observation.items if i.category == FoodCategory.SAUCE
        )

    def food_items(self) -> tuple[FoodItem, ...]:
        """Items that can be fed as bites (everything but sauces)."""
        return tuple(
            i for i in self.observation.items if i.category != FoodCategory.SAUCE
        )

    def record_bite(self, label: str) -> "PlateState":
        return PlateState(self.observation, self.consumed_history + (label,))

    def with_observation(self, observation: PlateObservation) -> "PlateState":
        return PlateState(observation, self.consumed_history)


def _parse_rle_line(text: str, lineno: int, width: int) -> list[tuple[int, int]]:
    pairs = []
    for token in text.split():
        try:
            start_s, len_s = token.split(":")
            pairs.append((int(start_s), int(len_s)))
        except ValueError:
            raise FixtureError(f"line {lineno}: bad RLE pair {token!r}") from None
    return pairs


def load_fixture(path) -> PlateState:
    """Parse a fixture file into a validated PlateState."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw_lines = fh.read().splitlines()
    except OSError as exc:
        raise FixtureError(f"cannot read fixture {path}: {exc}") from exc

    width = height = None
    px_per_mm = 2.0
    frame_id = 0
    eaten: list[str] = []
    items: list[FoodItem] = []

    i = 0
    n = len(raw_lines)

    def fail(lineno: int, msg: str):
        raise FixtureError(f"{path}: line {lineno}: {msg}")

    while i < n:
        line = raw_lines[i]
        lineno = i + 1
        stripped = line.strip()
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("frame:"):
                try:
                    frame_id = int(body[len("frame:") :].strip())
                except ValueError:
                    fail(lineno, f"bad frame directive {body!r}")
            elif body.startswith("eaten:"):
                eaten.append(body[len("eaten:") :].strip())
            i += 1
            continue
        if not stripped:
            i += 1
            continue
        fields = stripped.split()
        if fields[0] == "plate":
            if width is not None:
                fail(lineno, "duplicate plate header")
            if len(fields) != 4:
                fail(lineno, f"plate header needs 3 fields, got {len(fields) - 1}")
            try:
                width, height = int(fields[1]), int(fields[2])
                px_per_mm = float(fields[3])
            except ValueError:
                fail(lineno, f"bad plate header {stripped!r}")
            i += 1
            continue
        if fields[0] == "item":
            if width is None:
                fail(lineno, "item block before plate header")
            if len(fields) < 4:
                fail(lineno, "item line needs <instance_id> <label> <category>")
            try:
                instance_id = int(fields[1])
            except ValueError:
                fail(lineno, f"bad instance_id {fields[1]!r}")
            label = " ".join(fields[2:-1])
            try:
                category = FoodCategory(fields[-1])
            except ValueError:
                fail(lineno, f"unknown category {fields[-1]!r}")
            rows = []
            i += 1
            while len(rows) < height and i < n:
                row_line = raw_lines[i]
                if row_line.strip().startswith("#"):
                    i += 1
                    continue
                rows.append(_parse_rle_line(row_line, i + 1, width))
                i += 1
            if len(rows) < height:
                fail(i, f"item {instance_id}: expected {height} rows, file ended")
            if i >= n or raw_lines[i].strip() != "end":
                fail(i + 1, f"item {instance_id}: missing 'end' terminator")
            i += 1
            try:
                mask = FoodMask.from_rle(width, height, rows)
                items.append(FoodItem(label, category, mask, instance_id))
            except (FixtureError, PlateInvariantError) as exc:
                raise FixtureError(
                    f"{path}: item {instance_id} ({label!r}): {exc}"
                ) from exc
            continue
        fail(lineno, f"unrecognized line {stripped!r}")

    if width is None:
        raise FixtureError(f"{path}: missing plate header")
    try:
        obs = PlateObservation(width, height, tuple(items), frame_id, px_per_mm)
    except PlateInvariantError as exc:
        raise FixtureError(f"{path}: {exc}") from exc
    return PlateState(obs, tuple(eaten))


def save_fixture(state: PlateState, path) -> None:
    """Write a fixture file; load_fixture(save_fixture(s)) == s bit-exactly."""
    obs = state.observation
    lines = [f"plate {obs.width} {obs.height} {obs.px_per_mm!r}"]
    lines.append(f"# frame: {obs.frame_id}")
    for label in state.consumed_history:
        lines.append(f"# eaten: {label}")
    for item in obs.items:
        lines.append(f"item {item.instance_id} {item.label} {item.category.value}")
        for pairs in item.mask.rle_rows():
            lines.append(" ".join(f"{s}:{l}" for s, l in pairs))
        lines.append("end")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise FixtureError(f"cannot write fixture {path}: {exc}") from exc
