import numpy as np
import pytest

from biteplan import geometry, skills
from biteplan.plate import (
    FoodCategory,
    FoodItem,
    FoodMask,
    PlateObservation,
    PlateState,
    load_fixture,
)
from biteplan.planner import PlannerConfig
from biteplan.portioning import estimate_portions
from biteplan.sequencer import Dipped, NoBite, PreferenceSpec, Single
from biteplan.simulator import (
    EfficiencyOnlyPlanner,
    FlairPlanner,
    MissingInstanceError,
    SkillEffectConfig,
    apply_skill,
    build_context,
    pickup_curve,
    run_episode,
)
from biteplan.skills import SkillKind
from biteplan.llm import ReplayTransport

from conftest import cassette_path, disc_mask, fixture_path, rect_mask

CFG = PlannerConfig()
FX = SkillEffectConfig(rng_seed=0)


def total_area(state):
    return sum(i.mask.area for i in state.observation.items)


def state_of(size, *items):
    return PlateState(PlateObservation(size, size, tuple(items)))


def three_skewerables():
    return state_of(
        120,
        FoodItem("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(120, (30, 30), 8), 1),
        FoodItem("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(120, (30, 80), 8), 2),
        FoodItem("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(120, (80, 55), 8), 3),
    )


class ScriptedPlanner:
    """Feeds a fixed queue of bites; used to pin exact action sequences."""

    name = "scripted"

    def __init__(self, bites):
        self.bites = list(bites)
        self.contexts = []

    def decide(self, ctx):
        self.contexts.append(ctx)
        return self.bites.pop(0) if self.bites else NoBite()


# ---------------------------------------------------------------------------
# apply_skill
# ---------------------------------------------------------------------------


def test_skewer_removes_instance():
    state = three_skewerables()
    item = state.observation.items[0]
    cmd = skills.param_skewer(item)
    after = apply_skill(state, cmd, FX, CFG)
    assert all(i.instance_id != 1 for i in after.observation.items)
    assert len(after.observation.items) == 2
    assert after.observation.frame_id == state.observation.frame_id + 1


def test_apply_missing_instance_errors():
    state = three_skewerables()
    cmd = skills.param_skewer(state.observation.items[0])
    after = apply_skill(state, cmd, FX, CFG)
    with pytest.raises(MissingInstanceError):
        apply_skill(after, cmd, FX, CFG)


def test_cut_splits_with_conserved_area():
    banana = FoodItem("banana", FoodCategory.CUTTABLE, rect_mask(160, 74, 20, 14, 120), 1)
    state = state_of(160, banana)
    cmd = skills.param_cut(banana, CFG.bite_length)
    after = apply_skill(state, cmd, FX, CFG)
    items = after.observation.items
    assert len(items) == 2
    assert {i.instance_id for i in items} == {2, 3}
    assert sum(i.mask.area for i in items) == banana.mask.area
    assert all(i.label == "banana" for i in items)
    lengths = sorted(geometry.major_axis(i.mask).axis_length for i in items)
    assert lengths[0] <= CFG.bite_length + 2  # the cut-off bite piece


def test_twirl_removes_portion_capped():
    pile = FoodItem("spaghetti", FoodCategory.NOODLES, disc_mask(160, (80, 80), 40), 1)
    state = state_of(160, pile)
    cmd = skills.param_twirl(pile, CFG.sigma, CFG.crop_radius)
    fx = SkillEffectConfig(twirl_radius=30.0)
    after = apply_skill(state, cmd, fx, CFG)
    removed = total_area(state) - total_area(after)
    x, y = cmd.params["target"]
    rr, cc = np.ogrid[:160, :160]
    disc = (rr - y) ** 2 + (cc - x) ** 2 <= 30.0**2
    expected = min(int((disc & pile.mask.pixels).sum()), int(CFG.portion_size))
    assert removed == expected == int(CFG.portion_size)


def test_twirl_small_remnant_removes_all_in_disc():
    crumb = FoodItem("spaghetti", FoodCategory.NOODLES, disc_mask(160, (80, 80), 8), 1)
    state = state_of(160, crumb)
    cmd = skills.param_twirl(crumb, CFG.sigma, CFG.crop_radius)
    after = apply_skill(state, cmd, SkillEffectConfig(), CFG)
    assert not after.observation.items  # fully cleared and dropped


def test_scoop_removes_corridor_capped():
    pile = FoodItem("mash", FoodCategory.SEMISOLID, disc_mask(160, (80, 80), 36), 1)
    state = state_of(160, pile)
    cmd = skills.param_scoop(pile, [], CFG.sigma, CFG.scoop_max_dist)
    after = apply_skill(state, cmd, SkillEffectConfig(scoop_width=20.0), CFG)
    removed = total_area(state) - total_area(after)
    assert 0 < removed <= int(CFG.portion_size)


def test_group_conserves_area_and_raises_peak():
    arr = np.zeros((160, 160), dtype=bool)
    arr[70:90, 16:36] = True
    arr[60:100, 104:144] = True
    noodles = FoodItem("spaghetti", FoodCategory.NOODLES, FoodMask(arr), 1)
    state = state_of(160, noodles)
    cmd = skills.param_group(noodles, [], CFG.sigma)
    after = apply_skill(state, cmd, FX, CFG)
    new_item = after.observation.items[0]
    assert new_item.mask.area == noodles.mask.area  # exact conservation
    before_peak = geometry.density_map(noodles.mask, CFG.sigma).peak_value
    after_peak = geometry.density_map(new_item.mask, CFG.sigma).peak_value
    assert after_peak > before_peak


def test_push_conserves_area_and_clears_bed():
    bed = FoodItem("spaghetti", FoodCategory.NOODLES, disc_mask(160, (80, 80), 36), 1)
    ball = FoodItem("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(160, (80, 92), 10), 2)
    state = state_of(160, bed, ball)
    cmd = skills.param_push(ball, bed)
    after = apply_skill(state, cmd, FX, CFG)
    moved = after.observation.item_by_id(2)
    assert moved.mask.area == ball.mask.area
    assert not (moved.mask.pixels & bed.mask.pixels).any()


def test_push_clamped_to_plate():
    bed = FoodItem("spaghetti", FoodCategory.NOODLES, disc_mask(100, (50, 50), 45), 1)
    ball = FoodItem("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(100, (50, 88), 9), 2)
    state = state_of(100, bed, ball)
    after = apply_skill(state, skills.param_push(ball, bed), FX, CFG)
    moved = after.observation.item_by_id(2)
    assert moved.mask.area == ball.mask.area  # clamping never loses pixels


def test_dip_leaves_plate_unchanged():
    sauce = FoodItem("ranch", FoodCategory.SAUCE, disc_mask(120, (30, 90), 10), 1)
    veg = FoodItem("celery", FoodCategory.VEGETABLE, rect_mask(120, 60, 20, 6, 30), 2)
    state = state_of(120, sauce, veg)
    cmd = skills.param_dip(2, sauce)
    after = apply_skill(state, cmd, FX, CFG)
    assert total_area(after) == total_area(state)
    assert len(after.observation.items) == 2


def test_failed_action_changes_nothing():
    state = three_skewerables()
    cmd = skills.param_skewer(state.observation.items[0])
    fx = SkillEffectConfig(success_prob={SkillKind.SKEWER: 0.0}, rng_seed=7)
    after = apply_skill(state, cmd, fx, CFG)
    assert len(after.observation.items) == 3


# ---------------------------------------------------------------------------
# run_episode
# ---------------------------------------------------------------------------


def test_three_skewerables_efficiency_only():
    log = run_episode(three_skewerables(), EfficiencyOnlyPlanner(), CFG, FX, step_cap=20)
    assert log.terminated_reason == "plate_empty"
    assert log.actions == 3
    assert pickup_curve(log) == [(1, 1), (2, 2), (3, 3)]


def test_pickup_curve_push_group_twirl_then_skewer():
    state = load_fixture(fixture_path("plates", "fettuccine_chicken_broccoli"))
    planner = ScriptedPlanner([Single("fettuccine"), Single("chicken")])
    log = run_episode(state, planner, CFG, FX, step_cap=4)
    assert [s.command.kind.value for s in log.steps] == [
        "push",
        "group",
        "twirl",
        "skewer",
    ]
    assert pickup_curve(log) == [(1, 0), (2, 0), (3, 1), (4, 2)]


def test_dipped_bite_costs_extra_action_without_feeding():
    state = state_of(
        120,
        FoodItem("banana", FoodCategory.CUTTABLE, rect_mask(120, 60, 40, 10, 30), 1),
        FoodItem("chocolate sauce", FoodCategory.SAUCE, disc_mask(120, (30, 90), 10), 2),
    )
    planner = ScriptedPlanner([Dipped("banana", "chocolate sauce")])
    log = run_episode(state, planner, CFG, FX, step_cap=10)
    assert [s.command.kind.value for s in log.steps] == ["skewer", "dip"]
    assert pickup_curve(log) == [(1, 1), (2, 1)]
    assert log.steps[-1].decision == "banana dipped in chocolate sauce"


def test_step_cap_terminates_mid_sequence():
    state = load_fixture(fixture_path("plates", "fettuccine_chicken_broccoli"))
    planner = ScriptedPlanner([Single("fettuccine")])
    log = run_episode(state, planner, CFG, FX, step_cap=2)
    assert log.terminated_reason == "step_cap"
    assert log.actions == 2


def test_no_bite_terminates():
    planner = ScriptedPlanner([])
    log = run_episode(three_skewerables(), planner, CFG, FX, step_cap=10)
    assert log.terminated_reason == "planner_no_bite"
    assert log.actions == 0


def test_reperception_each_round():
    state = load_fixture(fixture_path("plates", "mashed_sausage"))
    planner = ScriptedPlanner(
        [Single("mashed potatoes"), Single("mashed potatoes")]
    )
    log = run_episode(state, planner, CFG, FX, step_cap=6)
    ctx0, ctx1 = planner.contexts[0], planner.contexts[1]
    mashed0 = ctx0.portions[ctx0.items_remaining.index("mashed potatoes")]
    mashed1 = ctx1.portions[ctx1.items_remaining.index("mashed potatoes")]
    assert mashed1 == mashed0 - 1  # portions recomputed from current masks
    eff0 = ctx0.efficiencies[ctx0.items_remaining.index("mashed potatoes")]
    eff1 = ctx1.efficiencies[ctx1.items_remaining.index("mashed potatoes")]
    assert eff0 == 2  # push needed while the sausage blocks
    assert eff1 == 1  # sausage was pushed clear in round one


def test_cut_retargets_follow_up_skewer():
    state = load_fixture(fixture_path("plates", "dessert"))
    planner = ScriptedPlanner([Single("banana")])
    log = run_episode(state, planner, CFG, FX, step_cap=3)
    assert [s.command.kind.value for s in log.steps] == ["cut", "skewer"]
    skewer_step = log.steps[1]
    assert skewer_step.command.target_item not in (1,)  # a fresh piece id
    assert skewer_step.removed_instances == 1
    # one banana piece remains, two portions' worth of axis
    remaining = [
        i for i in log.steps[-1].portions_after if i[0] == "banana"
    ]
    assert remaining == [("banana", 2)]


def test_mass_never_increases_and_acquisitions_strictly_consume():
    state = load_fixture(fixture_path("plates", "spaghetti_meatballs"))
    log = run_episode(state, EfficiencyOnlyPlanner(), CFG, FX, step_cap=64)
    assert log.terminated_reason == "plate_empty"
    for step in log.steps:
        assert step.removed_area >= 0
        if step.command.kind in (SkillKind.GROUP, SkillKind.PUSH, SkillKind.CUT):
            assert step.removed_area == 0  # rearrangements conserve area
        if step.succeeded and step.command.kind in (
            SkillKind.SKEWER,
            SkillKind.TWIRL,
            SkillKind.SCOOP,
        ):
            assert step.removed_area > 0 or step.removed_instances > 0


def test_seeded_determinism_with_failures():
    fx = SkillEffectConfig(success_prob={SkillKind.SKEWER: 0.5}, rng_seed=11)
    log1 = run_episode(three_skewerables(), EfficiencyOnlyPlanner(), CFG, fx, step_cap=40)
    log2 = run_episode(three_skewerables(), EfficiencyOnlyPlanner(), CFG, fx, step_cap=40)
    assert log1.to_lines() == log2.to_lines()
    assert any(not s.succeeded for s in log1.steps)  # seed 11 rolls a failure
    assert log1.terminated_reason == "plate_empty"  # retries recover


def test_flair_replay_episode_deterministic():
    path = cassette_path("spaghetti_meatballs.flair.cassette")
    logs = []
    for _ in range(2):
        state = load_fixture(fixture_path("plates", "spaghetti_meatballs"))
        planner = FlairPlanner(ReplayTransport(path, strict=True))
        logs.append(
            run_episode(
                state, planner, CFG, FX, step_cap=32, fixture_name="spaghetti_meatballs"
            )
        )
    assert logs[0].to_lines() == logs[1].to_lines()
    assert logs[0].terminated_reason == "plate_empty"


def test_no_meatballs_preference_episode():
    path = cassette_path("spaghetti_meatballs.flair.no_meatballs.cassette")
    state = load_fixture(fixture_path("plates", "spaghetti_meatballs"))
    planner = FlairPlanner(ReplayTransport(path, strict=True))
    log = run_episode(
        state,
        planner,
        CFG,
        FX,
        step_cap=32,
        preference=PreferenceSpec("Please don't feed me meatballs."),
        fixture_name="spaghetti_meatballs",
    )
    first_fed = next(s for s in log.steps if s.bites_fed == 1)
    assert first_fed.decision == "spaghetti"
    assert first_fed.command.kind == SkillKind.TWIRL
    assert log.steps[0].command.kind == SkillKind.PUSH  # meatball pushed aside
    assert log.terminated_reason == "planner_no_bite"
    assert all(s.decision != "meatball" for s in log.steps)


def test_build_context_orders_and_lengths():
    state = load_fixture(fixture_path("plates", "appetizer"))
    ctx = build_context(state, CFG, PreferenceSpec.none())
    assert ctx.items_remaining == ("celery", "watermelon", "strawberry")
    assert len(ctx.portions) == len(ctx.efficiencies) == 3
    assert ctx.dips == ("ranch", "chocolate sauce")
