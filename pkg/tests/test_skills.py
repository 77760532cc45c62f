import math

import numpy as np
import pytest

from biteplan import geometry, skills
from biteplan.plate import FoodCategory, FoodItem, FoodMask
from biteplan.skills import (
    ACQUISITION_KINDS,
    NoHeldItemError,
    NonSauceTargetError,
    SkillKind,
    ZLevel,
)

from conftest import disc_mask, make_mask, rect_mask
from test_geometry import angle_distance_mod180, rotated_bar_mask


def food(label, category, mask, iid=1):
    return FoodItem(label, category, mask, iid)


def test_skewer_horizontal_carrot():
    carrot = food("carrot", FoodCategory.VEGETABLE, rect_mask(100, 45, 30, 10, 40))
    cmd = skills.param_skewer(carrot)
    assert cmd.kind == SkillKind.SKEWER
    assert cmd.params["gamma_deg"] == pytest.approx(90.0)
    cy, cx = geometry.centroid(carrot.mask)
    assert cmd.params["target"] == (cx, cy)


def test_skewer_single_pixel_degenerate_gamma():
    pea = food("pea", FoodCategory.VEGETABLE, make_mask(64, (10, 20)))
    cmd = skills.param_skewer(pea)
    assert cmd.params["gamma_deg"] == pytest.approx(90.0)
    assert cmd.params["target"] == (20, 10)


def test_skewer_rotated_bar_gamma():
    bar = food("carrot", FoodCategory.VEGETABLE, rotated_bar_mask(128, (64, 64), 50, 10, 30))
    cmd = skills.param_skewer(bar)
    assert angle_distance_mod180(cmd.params["gamma_deg"], 120.0) <= 2.0


def test_skewer_waypoints_shape():
    carrot = food("carrot", FoodCategory.VEGETABLE, rect_mask(100, 45, 30, 10, 40))
    wps = skills.param_skewer(carrot).waypoints
    assert wps[0].z == ZLevel.APPROACH
    assert wps[-1].z == ZLevel.LIFT
    assert wps[0].beta_deg == skills.TINES_VERTICAL_BETA
    assert wps[-1].beta_deg == skills.TINES_HORIZONTAL_BETA  # post-acquisition tilt


def test_twirl_band_center_and_gamma():
    arr = np.zeros((120, 120), dtype=bool)
    arr[40:51, :] = True
    noodles = food("spaghetti", FoodCategory.NOODLES, FoodMask(arr))
    cmd = skills.param_twirl(noodles, sigma=10.0, crop_radius=30.0)
    x, y = cmd.params["target"]
    dense = geometry.densest_point(noodles.mask, 10.0)
    assert (y, x) == dense
    assert y == 45  # band center row
    assert angle_distance_mod180(cmd.params["gamma_deg"], 90.0) <= 2.0
    assert cmd.params["twirl_revolutions"] == 2


def test_twirl_dirac_blob():
    noodles = food("spaghetti", FoodCategory.NOODLES, make_mask(80, (33, 44)))
    cmd = skills.param_twirl(noodles, sigma=5.0, crop_radius=20.0)
    assert cmd.params["target"] == (44, 33)
    assert cmd.params["twirl_revolutions"] == 2


def test_scoop_runs_sparse_to_dense():
    arr = np.zeros((100, 100), dtype=bool)
    arr[48:53, 10:80] = True
    arr[40:61, 60:80] = True  # dense block on the right
    mash = food("mash", FoodCategory.SEMISOLID, FoodMask(arr))
    cmd = skills.param_scoop(mash, [], sigma=8.0, max_dist=200.0)
    sx, sy = cmd.params["start"]
    ex, ey = cmd.params["end"]
    assert sx < ex  # left to right
    dense = geometry.densest_point(mash.mask, 8.0)
    assert (round(ey), round(ex)) == dense
    assert cmd.waypoints[0].beta_deg == skills.TINES_HORIZONTAL_BETA


def test_scoop_truncated_to_max_dist():
    arr = np.zeros((100, 100), dtype=bool)
    arr[48:53, 10:80] = True
    arr[40:61, 60:80] = True
    mash = food("mash", FoodCategory.SEMISOLID, FoodMask(arr))
    cmd = skills.param_scoop(mash, [], sigma=8.0, max_dist=30.0)
    sx, sy = cmd.params["start"]
    ex, ey = cmd.params["end"]
    assert math.dist((sy, sx), (ey, ex)) == pytest.approx(30.0, abs=1e-9)


def test_scoop_start_relocates_around_obstruction():
    arr = np.zeros((100, 100), dtype=bool)
    arr[48:53, 10:80] = True
    arr[40:61, 60:80] = True  # dense block right, so the sparse end is left
    bar = food("mash", FoodCategory.SEMISOLID, FoodMask(arr))
    wall = food(
        "sausage", FoodCategory.MEAT_SEAFOOD, rect_mask(100, 38, 30, 26, 4), 2
    )
    free = skills.param_scoop(bar, [], sigma=8.0, max_dist=200.0)
    blocked = skills.param_scoop(bar, [wall], sigma=8.0, max_dist=200.0)
    assert free.params["start"] != blocked.params["start"]
    bx, by = blocked.params["start"]
    dense = geometry.densest_point(bar.mask, 8.0)
    assert not geometry.segment_intersects_mask(
        (round(by), round(bx)), dense, wall.mask
    )


def test_dip_targets_sauce_centroid():
    sauce = food("chocolate sauce", FoodCategory.SAUCE, disc_mask(60, (30, 40), 8), 5)
    cmd = skills.param_dip(held_item=3, sauce=sauce)
    assert cmd.kind == SkillKind.DIP
    assert cmd.target_item == 5
    assert cmd.params["held_item"] == 3
    cy, cx = geometry.centroid(sauce.mask)
    assert cmd.params["target"] == (cx, cy)
    assert all(wp.beta_deg == skills.TINES_HORIZONTAL_BETA for wp in cmd.waypoints)


def test_dip_requires_held_item():
    sauce = food("ranch", FoodCategory.SAUCE, disc_mask(60, (30, 40), 8), 5)
    with pytest.raises(NoHeldItemError):
        skills.param_dip(held_item=None, sauce=sauce)


def test_dip_rejects_non_sauce():
    veg = food("broccoli", FoodCategory.VEGETABLE, disc_mask(60, (30, 40), 8), 5)
    with pytest.raises(NonSauceTargetError):
        skills.param_dip(held_item=3, sauce=veg)


def test_group_two_blob_geometry():
    arr = np.zeros((120, 120), dtype=bool)
    arr[50:70, 20:40] = True  # sparse blob
    arr[40:80, 70:110] = True  # dense blob
    noodles = food("spaghetti", FoodCategory.NOODLES, FoodMask(arr))
    cmd = skills.param_group(noodles, [], sigma=10.0)
    sx, sy = cmd.params["start"]
    ex, ey = cmd.params["end"]
    dense = geometry.densest_point(noodles.mask, 10.0)
    assert (ey, ex) == dense
    assert sx < 45  # start on the sparse blob's side
    # push direction is (densest - sparsest)
    assert ex > sx


def test_group_dirac_degenerate():
    noodles = food("spaghetti", FoodCategory.NOODLES, make_mask(60, (20, 20)))
    cmd = skills.param_group(noodles, [], sigma=5.0)
    assert cmd.params["start"] == cmd.params["end"]


def test_group_endpoints_inside_plate():
    arr = np.zeros((90, 90), dtype=bool)
    arr[2:10, 2:10] = True
    arr[70:88, 70:88] = True
    noodles = food("spaghetti", FoodCategory.NOODLES, FoodMask(arr))
    cmd = skills.param_group(noodles, [], sigma=6.0)
    for key in ("start", "end"):
        x, y = cmd.params[key]
        assert 0 <= x < 90 and 0 <= y < 90


def test_push_end_clears_the_bed():
    bed = food("spaghetti", FoodCategory.NOODLES, disc_mask(160, (80, 80), 40))
    ball = food("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(160, (80, 90), 10), 2)
    cmd = skills.param_push(ball, bed)
    ex, ey = cmd.params["end"]
    assert (round(ey), round(ex)) not in bed.mask
    assert cmd.params["bed_item"] == 1
    assert cmd.waypoints[-1].z == ZLevel.SURFACE  # push ends at the surface


def test_push_topping_outside_bed_degenerate_ok():
    bed = food("spaghetti", FoodCategory.NOODLES, disc_mask(160, (80, 80), 30))
    ball = food("meatball", FoodCategory.MEAT_SEAFOOD, disc_mask(160, (20, 20), 6), 2)
    cmd = skills.param_push(ball, bed)
    assert cmd.kind == SkillKind.PUSH  # no crash; zero-ish sweep allowed


def test_cut_banana_geometry():
    banana = food("banana", FoodCategory.CUTTABLE, rect_mask(160, 74, 20, 14, 120))
    cmd = skills.param_cut(banana, bite_length=40.0)
    x, y = cmd.params["target"]
    assert abs(x - (20 + 40)) <= 1  # 40 px from the first extremity
    assert cmd.waypoints[0].beta_deg == 90.0
    assert cmd.waypoints[0].gamma_deg == 90.0
    assert cmd.waypoints[-1].z == ZLevel.SURFACE


def test_cut_too_short_propagates():
    slice_ = food("banana", FoodCategory.CUTTABLE, rect_mask(64, 30, 10, 10, 30))
    with pytest.raises(geometry.TooShortAxisError):
        skills.param_cut(slice_, bite_length=40.0)


def test_acquisition_waypoint_levels():
    carrot = food("carrot", FoodCategory.VEGETABLE, rect_mask(100, 45, 30, 10, 40))
    noodles = food("spag", FoodCategory.NOODLES, disc_mask(100, (50, 50), 20), 2)
    sauce = food("ranch", FoodCategory.SAUCE, disc_mask(100, (20, 80), 8), 3)
    mash = food("mash", FoodCategory.SEMISOLID, disc_mask(100, (60, 40), 18), 4)
    commands = [
        skills.param_skewer(carrot),
        skills.param_twirl(noodles, 8.0, 25.0),
        skills.param_scoop(mash, [], 8.0, 60.0),
        skills.param_dip(1, sauce),
    ]
    for cmd in commands:
        assert cmd.kind in ACQUISITION_KINDS
        assert cmd.waypoints[0].z == ZLevel.APPROACH
        assert cmd.waypoints[-1].z == ZLevel.LIFT
        assert cmd.waypoints[-1].beta_deg == skills.TINES_HORIZONTAL_BETA


def test_gamma_translation_invariance():
    base = rotated_bar_mask(128, (50, 50), 40, 8, 40)
    moved = FoodMask(np.roll(base.pixels, (12, 9), axis=(0, 1)))
    g1 = skills.param_skewer(food("c", FoodCategory.VEGETABLE, base)).params["gamma_deg"]
    g2 = skills.param_skewer(food("c", FoodCategory.VEGETABLE, moved)).params["gamma_deg"]
    assert g1 == pytest.approx(g2, abs=1e-9)


@pytest.mark.parametrize("phi", [10, 30, 60, 120])
def test_gamma_rotation_equivariance(phi):
    a = rotated_bar_mask(160, (80, 80), 60, 10, 20)
    b = rotated_bar_mask(160, (80, 80), 60, 10, 20 + phi)
    ga = skills.param_skewer(food("c", FoodCategory.VEGETABLE, a)).params["gamma_deg"]
    gb = skills.param_skewer(food("c", FoodCategory.VEGETABLE, b)).params["gamma_deg"]
    assert angle_distance_mod180(gb - ga, phi) <= 2.0


def test_command_serialization_format():
    carrot = food("carrot", FoodCategory.VEGETABLE, rect_mask(100, 45, 30, 10, 40))
    lines = skills.param_skewer(carrot).to_lines()
    assert lines[0].startswith("skill skewer item=1 ")
    assert "gamma_deg=90" in lines[0]
    assert len(lines) == 4
    for wp_line in lines[1:]:
        fields = wp_line.split()
        assert fields[0] == "wp"
        assert fields[3] in ("approach", "surface", "lift")
