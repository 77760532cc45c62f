"""Closed-loop meal simulation: apply skill effects, re-perceive, re-plan.

Skill effects are geometric and deterministic by default.  Acquisitions
remove mask pixels (capped at one portion), rearrangements translate pixels
and conserve area exactly, and cuts partition a mask into two fresh
instances.  Per-skill success probabilities below 1.0 turn commands into
seeded no-ops that the re-planning loop naturally retries.

An episode runs the paper-style loop: recompute portions and efficiencies
from the current masks, ask the planner for the next bite, expand it into a
skill sequence, execute, and repeat until the plate is empty, the planner
declines, or the action cap is hit.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BiteplanError
from . import geometry, sequencer, skills
from .plate import FoodItem, FoodMask, PlateObservation, PlateState
from .planner import PlannerConfig, efficiency_of, plan_acquisition
from .portioning import estimate_portions
from .sequencer import (
    Dipped,
    NextBite,
    NoBite,
    PreferenceSpec,
    SequencerContext,
    Single,
)
from .skills import SkillCommand, SkillKind


class MissingInstanceError(BiteplanError):
    """Command targets an instance that is no longer on the plate."""


class EpisodeAbortedError(BiteplanError):
    """Planner or transport failure mid-episode; carries the partial log."""

    def __init__(self, message: str, log: "EpisodeLog"):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class SkillEffectConfig:
    """Geometry and stochasticity of simulated skill effects."""

    twirl_radius: float = 30.0
    scoop_width: float = 20.0
    success_prob: dict = field(default_factory=dict)  # SkillKind -> [0, 1]
    rng_seed: int = 0

    def probability(self, kind: SkillKind) -> float:
        p = float(self.success_prob.get(kind, 1.0))
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"success probability for {kind.value} is {p}")
        return p


@dataclass(frozen=True)
class StepRecord:
    """One executed command inside an episode."""

    index: int  # 1-based action counter
    decision: str  # the planning round's chosen bite
    command: SkillCommand
    succeeded: bool
    removed_area: int
    removed_instances: int
    bites_fed: int  # cumulative after this action
    portions_after: tuple[tuple[str, int], ...]


@dataclass
class EpisodeLog:
    planner_name: str
    fixture_name: str
    seed: int
    initial_portion_total: int
    steps: list[StepRecord] = field(default_factory=list)
    terminated_reason: str = "unterminated"
    error: str | None = None

    @property
    def actions(self) -> int:
        return len(self.steps)

    @property
    def bites_fed(self) -> int:
        return self.steps[-1].bites_fed if self.steps else 0

    def to_lines(self) -> list[str]:
        lines = [
            f"episode planner={self.planner_name} fixture={self.fixture_name} "
            f"seed={self.seed} initial_portions={self.initial_portion_total}"
        ]
        for s in self.steps:
            lines.append(
                f"step {s.index} decision='{s.decision}' ok={int(s.succeeded)} "
                f"removed_area={s.removed_area} removed_instances={s.removed_instances} "
                f"bites_fed={s.bites_fed}"
            )
            lines.extend("  " + l for l in s.command.to_lines())
            lines.append(
                "  portions "
                + " ".join(f"{label}={count}" for label, count in s.portions_after)
            )
        lines.append(
            f"terminated {self.terminated_reason} actions={self.actions} "
            f"bites={self.bites_fed}"
        )
        if self.error:
            lines.append(f"error {self.error}")
        return lines


def _replace_items(
    state: PlateState, items: tuple[FoodItem, ...]
) -> PlateState:
    obs = state.observation
    new_obs = PlateObservation(
        obs.width, obs.height, items, obs.frame_id + 1, obs.px_per_mm
    )
    return state.with_observation(new_obs)


def _drop_cleared(items, target_id, new_pixels) -> tuple[FoodItem, ...]:
    """Swap in a new mask for one item, dropping it if nothing is left."""
    out = []
    for item in items:
        if item.instance_id != target_id:
            out.append(item)
        elif new_pixels.any():
            out.append(replace(item, mask=FoodMask(new_pixels)))
    return tuple(out)


def _removal_budget(cfg: PlannerConfig) -> int:
    return max(1, int(cfg.portion_size))


def _clear_pixels_near(
    mask: FoodMask, order_key, candidate: np.ndarray, budget: int
) -> np.ndarray:
    """Clear up to ``budget`` candidate pixels, nearest-first by ``order_key``.

    Falls back to the single nearest mask pixel when no candidate overlaps
    the mask, so an acquisition always removes something.
    """
    px = mask.pixels
    hit = np.argwhere(candidate & px)
    if hit.shape[0] == 0:
        coords = np.argwhere(px)
        keys = [order_key((int(r), int(c))) for r, c in coords]
        hit = coords[np.lexsort((coords[:, 1], coords[:, 0], np.array(keys)))][:1]
    else:
        keys = [order_key((int(r), int(c))) for r, c in hit]
        hit = hit[np.lexsort((hit[:, 1], hit[:, 0], np.array(keys)))][:budget]
    out = px.copy()
    out[hit[:, 0], hit[:, 1]] = False
    return out


def _apply_skewer(state: PlateState, cmd: SkillCommand) -> PlateState:
    items = tuple(
        i for i in state.observation.items if i.instance_id != cmd.target_item
    )
    return _replace_items(state, items)


def _apply_twirl(
    state: PlateState, cmd: SkillCommand, fx: SkillEffectConfig, cfg: PlannerConfig
) -> PlateState:
    item = state.observation.item_by_id(cmd.target_item)
    x, y = cmd.params["target"]
    h, w = item.mask.pixels.shape
    rr, cc = np.ogrid[:h, :w]
    disc = (rr - y) ** 2 + (cc - x) ** 2 <= fx.twirl_radius**2
    order = lambda p: (p[0] - y) ** 2 + (p[1] - x) ** 2  # noqa: E731
    new_pixels = _clear_pixels_near(item.mask, order, disc, _removal_budget(cfg))
    return _replace_items(
        state, _drop_cleared(state.observation.items, item.instance_id, new_pixels)
    )


def _apply_scoop(
    state: PlateState, cmd: SkillCommand, fx: SkillEffectConfig, cfg: PlannerConfig
) -> PlateState:
    item = state.observation.item_by_id(cmd.target_item)
    sx, sy = cmd.params["start"]
    ex, ey = cmd.params["end"]
    h, w = item.mask.pixels.shape
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    seg = np.array([ey - sy, ex - sx], dtype=np.float64)
    seg_len2 = float(seg @ seg)
    dy = rr - sy
    dx = cc - sx
    if seg_len2 == 0:
        dist2 = dy**2 + dx**2
    else:
        t = np.clip((dy * seg[0] + dx * seg[1]) / seg_len2, 0.0, 1.0)
        dist2 = (dy - t * seg[0]) ** 2 + (dx - t * seg[1]) ** 2
    corridor = dist2 <= (fx.scoop_width / 2.0) ** 2
    order = lambda p: (p[0] - ey) ** 2 + (p[1] - ex) ** 2  # noqa: E731
    new_pixels = _clear_pixels_near(item.mask, order, corridor, _removal_budget(cfg))
    return _replace_items(
        state, _drop_cleared(state.observation.items, item.instance_id, new_pixels)
    )


def _apply_dip(state: PlateState, cmd: SkillCommand) -> PlateState:
    state.observation.item_by_id(cmd.target_item)  # raises if missing
    return _replace_items(state, state.observation.items)


def _apply_group(state: PlateState, cmd: SkillCommand) -> PlateState:
    """Slide the sparse half of the pile along the push vector to abutment."""
    item = state.observation.item_by_id(cmd.target_item)
    sx, sy = cmd.params["start"]
    ex, ey = cmd.params["end"]
    coords = np.argwhere(item.mask.pixels)
    push = np.array([ey - sy, ex - sx], dtype=np.float64)
    norm = float(np.linalg.norm(push))
    if norm == 0:
        return _replace_items(state, state.observation.items)
    unit = push / norm
    proj = (coords[:, 0] - sy) * unit[0] + (coords[:, 1] - sx) * unit[1]
    sparse_side = proj < norm / 2.0
    sparse = coords[sparse_side]
    dense = coords[~sparse_side]
    if sparse.shape[0] == 0 or dense.shape[0] == 0:
        return _replace_items(state, state.observation.items)
    h, w = item.mask.pixels.shape
    dense_set = set(map(tuple, dense))
    for d in range(int(norm), -1, -1):
        dr, dc = round(d * unit[0]), round(d * unit[1])
        moved = sparse + np.array([dr, dc])
        if (
            moved[:, 0].min() < 0
            or moved[:, 0].max() >= h
            or moved[:, 1].min() < 0
            or moved[:, 1].max() >= w
        ):
            continue
        if any((int(r), int(c)) in dense_set for r, c in moved):
            continue
        new_pixels = np.zeros_like(item.mask.pixels)
        new_pixels[dense[:, 0], dense[:, 1]] = True
        new_pixels[moved[:, 0], moved[:, 1]] = True
        return _replace_items(
            state,
            _drop_cleared(state.observation.items, item.instance_id, new_pixels),
        )
    return _replace_items(state, state.observation.items)


def _apply_push(state: PlateState, cmd: SkillCommand) -> PlateState:
    """Translate the topping so its centroid lands on the command end point.

    The displacement is clamped so the whole mask stays on the plate, which
    keeps the area exactly conserved.
    """
    item = state.observation.item_by_id(cmd.target_item)
    ex, ey = cmd.params["end"]
    center = geometry.centroid(item.mask)
    dr = round(ey - center[0])
    dc = round(ex - center[1])
    coords = np.argwhere(item.mask.pixels)
    h, w = item.mask.pixels.shape
    dr = int(np.clip(dr, -coords[:, 0].min(), h - 1 - coords[:, 0].max()))
    dc = int(np.clip(dc, -coords[:, 1].min(), w - 1 - coords[:, 1].max()))
    new_pixels = np.zeros_like(item.mask.pixels)
    new_pixels[coords[:, 0] + dr, coords[:, 1] + dc] = True
    return _replace_items(
        state, _drop_cleared(state.observation.items, item.instance_id, new_pixels)
    )


def _apply_cut(state: PlateState, cmd: SkillCommand) -> PlateState:
    """Split the mask at the cut line into two fresh instances.

    The bite-sized piece (the side holding the row-major-first extremity)
    gets the smaller of the two new ids and keeps the item's list position.
    """
    item = state.observation.item_by_id(cmd.target_item)
    x, y = cmd.params["target"]
    axis = geometry.major_axis(item.mask)
    ep0, ep1 = axis.endpoints
    u = np.array([ep1[0] - ep0[0], ep1[1] - ep0[1]], dtype=np.float64)
    u_norm = float(np.linalg.norm(u))
    if u_norm == 0:
        return _replace_items(state, state.observation.items)
    u /= u_norm
    coords = np.argwhere(item.mask.pixels)
    proj = (coords[:, 0] - y) * u[0] + (coords[:, 1] - x) * u[1]
    ep0_side = float((ep0[0] - y) * u[0] + (ep0[1] - x) * u[1])
    near_sel = proj < 0 if ep0_side < 0 else proj >= 0
    near, far = coords[near_sel], coords[~near_sel]
    if near.shape[0] == 0 or far.shape[0] == 0:
        return _replace_items(state, state.observation.items)
    next_id = max(i.instance_id for i in state.observation.items) + 1
    pieces = []
    for piece_id, piece_coords in ((next_id, near), (next_id + 1, far)):
        pixels = np.zeros_like(item.mask.pixels)
        pixels[piece_coords[:, 0], piece_coords[:, 1]] = True
        pieces.append(
            FoodItem(item.label, item.category, FoodMask(pixels), piece_id)
        )
    items = []
    for existing in state.observation.items:
        if existing.instance_id == item.instance_id:
            items.extend(pieces)
        else:
            items.append(existing)
    return _replace_items(state, tuple(items))


def apply_skill(
    state: PlateState,
    cmd: SkillCommand,
    fx: SkillEffectConfig,
    cfg: PlannerConfig | None = None,
    rng: random.Random | None = None,
) -> PlateState:
    """Apply one command's effect, returning the next plate state."""
    try:
        state.observation.item_by_id(cmd.target_item)
    except KeyError:
        raise MissingInstanceError(
            f"{cmd.kind.value} targets missing instance {cmd.target_item}"
        ) from None
    prob = fx.probability(cmd.kind)
    if prob < 1.0:
        roll = (rng or random.Random(fx.rng_seed)).random()
        if roll >= prob:
            return _replace_items(state, state.observation.items)  # slip: no effect
    cfg = cfg or PlannerConfig()
    if cmd.kind == SkillKind.SKEWER:
        return _apply_skewer(state, cmd)
    if cmd.kind == SkillKind.TWIRL:
        return _apply_twirl(state, cmd, fx, cfg)
    if cmd.kind == SkillKind.SCOOP:
        return _apply_scoop(state, cmd, fx, cfg)
    if cmd.kind == SkillKind.DIP:
        return _apply_dip(state, cmd)
    if cmd.kind == SkillKind.GROUP:
        return _apply_group(state, cmd)
    if cmd.kind == SkillKind.PUSH:
        return _apply_push(state, cmd)
    if cmd.kind == SkillKind.CUT:
        return _apply_cut(state, cmd)
    raise BiteplanError(f"unknown skill kind {cmd.kind!r}")


class EfficiencyOnlyPlanner:
    name = "efficiency_only"

    def decide(self, ctx: SequencerContext) -> NextBite:
        return sequencer.next_bite_efficiency_only(ctx)


class FlairPlanner:
    name = "flair"

    def __init__(self, llm):
        self.llm = llm

    def decide(self, ctx: SequencerContext) -> NextBite:
        return sequencer.next_bite_flair(ctx, self.llm)


class PreferenceOnlyPlanner:
    name = "preference_only"

    def __init__(self, llm):
        self.llm = llm

    def decide(self, ctx: SequencerContext) -> NextBite:
        return sequencer.next_bite_preference_only(ctx, self.llm)


def build_context(
    state: PlateState, cfg: PlannerConfig, preference: PreferenceSpec
) -> SequencerContext:
    """Re-perceive the plate: portions and efficiencies from current masks."""
    estimates = estimate_portions(state, cfg)
    labels = [e.label for e in estimates]
    portions = [e.portions for e in estimates]
    efficiencies = []
    for label in labels:
        item = next(i for i in state.food_items() if i.label == label)
        others = [o for o in state.observation.items if o.instance_id != item.instance_id]
        efficiencies.append(efficiency_of(item, others, cfg))
    dips = []
    for sauce in state.dips_available:
        if sauce.label not in dips:
            dips.append(sauce.label)
    return SequencerContext(
        items_remaining=tuple(labels),
        portions=tuple(portions),
        efficiencies=tuple(efficiencies),
        preference=preference,
        dips=tuple(dips),
        history=state.consumed_history,
    )


def _decision_text(bite: NextBite) -> str:
    if isinstance(bite, NoBite):
        return "none"
    if isinstance(bite, Single):
        return bite.label
    return f"{bite.label} dipped in {bite.dip_label}"


def _expand_bite(
    bite: NextBite, state: PlateState, cfg: PlannerConfig
) -> tuple[FoodItem, list[SkillCommand]]:
    if isinstance(bite, NoBite):
        raise BiteplanError("cannot expand an empty bite")
    item = next((i for i in state.food_items() if i.label == bite.label), None)
    if item is None:
        raise MissingInstanceError(f"no item labeled {bite.label!r} on the plate")
    others = [o for o in state.observation.items if o.instance_id != item.instance_id]
    commands = list(plan_acquisition(item, others, cfg).commands)
    if isinstance(bite, Dipped):
        sauce = next(
            (s for s in state.dips_available if s.label == bite.dip_label), None
        )
        if sauce is None:
            raise MissingInstanceError(f"no sauce labeled {bite.dip_label!r}")
        commands.append(skills.param_dip(item.instance_id, sauce))
    return item, commands


def _portions_snapshot(state: PlateState, cfg: PlannerConfig):
    return tuple((e.label, e.portions) for e in estimate_portions(state, cfg))


def _total_area(state: PlateState) -> int:
    return sum(i.mask.area for i in state.observation.items)


def run_episode(
    state: PlateState,
    planner,
    cfg: PlannerConfig,
    fx: SkillEffectConfig,
    step_cap: int,
    preference: PreferenceSpec | None = None,
    fixture_name: str = "plate",
) -> EpisodeLog:
    """Run the re-perceive / re-plan / execute loop until termination."""
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    preference = preference or PreferenceSpec.none()
    rng = random.Random(fx.rng_seed)
    log = EpisodeLog(
        planner_name=planner.name,
        fixture_name=fixture_name,
        seed=fx.rng_seed,
        initial_portion_total=sum(
            e.portions for e in estimate_portions(state, cfg)
        ),
    )
    bites_fed = 0
    actions = 0

    while True:
        if not state.food_items():
            log.terminated_reason = "plate_empty"
            return log
        if actions >= step_cap:
            log.terminated_reason = "step_cap"
            return log
        ctx = build_context(state, cfg, preference)
        try:
            bite = planner.decide(ctx)
        except BiteplanError as exc:
            log.terminated_reason = "error"
            log.error = str(exc)
            raise EpisodeAbortedError(f"planner failed: {exc}", log) from exc
        if isinstance(bite, NoBite):
            log.terminated_reason = "planner_no_bite"
            return log
        try:
            item, commands = _expand_bite(bite, state, cfg)
        except BiteplanError as exc:
            log.terminated_reason = "error"
            log.error = str(exc)
            raise EpisodeAbortedError(f"expansion failed: {exc}", log) from exc
        decision = _decision_text(bite)

        queue = list(commands)
        while queue:
            if actions >= step_cap:
                log.terminated_reason = "step_cap"
                return log
            cmd = queue.pop(0)
            area_before = _total_area(state)
            ids_before = {i.instance_id for i in state.observation.items}
            prob = fx.probability(cmd.kind)
            succeeded = True
            if prob < 1.0 and rng.random() >= prob:
                succeeded = False
                state = _replace_items(state, state.observation.items)
            else:
                state = apply_skill(
                    state, cmd, _deterministic(fx), cfg, rng=None
                )
            actions += 1
            if succeeded and cmd.kind == SkillKind.CUT:
                queue = _retarget_after_cut(queue, cmd, state, ids_before, cfg)
            if (
                succeeded
                and cmd.kind in (SkillKind.SKEWER, SkillKind.TWIRL, SkillKind.SCOOP)
            ):
                bites_fed += 1
                state = state.record_bite(bite.label)
            removed_instances = max(
                0, len(ids_before) - len(state.observation.items)
            )
            log.steps.append(
                StepRecord(
                    index=actions,
                    decision=decision,
                    command=cmd,
                    succeeded=succeeded,
                    removed_area=max(0, area_before - _total_area(state)),
                    removed_instances=removed_instances,
                    bites_fed=bites_fed,
                    portions_after=_portions_snapshot(state, cfg),
                )
            )


def _deterministic(fx: SkillEffectConfig) -> SkillEffectConfig:
    """Effect config with success rolls stripped; the episode loop rolls."""
    if not fx.success_prob:
        return fx
    return replace(fx, success_prob={})


def _retarget_after_cut(
    queue: list[SkillCommand],
    cut_cmd: SkillCommand,
    state: PlateState,
    ids_before: set[int],
    cfg: PlannerConfig,
) -> list[SkillCommand]:
    """Point the pending acquisition at the bite-sized piece born of the cut."""
    new_items = [
        i for i in state.observation.items if i.instance_id not in ids_before
    ]
    if not new_items:
        return queue
    bite_piece = min(
        new_items,
        key=lambda i: (geometry.major_axis(i.mask).axis_length, i.instance_id),
    )
    out = []
    for cmd in queue:
        if cmd.target_item == cut_cmd.target_item and cmd.kind == SkillKind.SKEWER:
            out.append(skills.param_skewer(bite_piece))
        else:
            out.append(cmd)
    return out


def pickup_curve(log: EpisodeLog) -> list[tuple[int, int]]:
    """Step function of cumulative bites fed versus executed actions."""
    return [(s.index, s.bites_fed) for s in log.steps]


def curve_csv_rows(
    log: EpisodeLog,
) -> list[str]:
    rows = ["action_index,bites_fed,planner,fixture"]
    for index, fed in pickup_curve(log):
        rows.append(f"{index},{fed},{log.planner_name},{log.fixture_name}")
    return rows
