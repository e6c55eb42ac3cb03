"""Toy capacity model tests.

Small enough to check everything against first-principles oracles: balls by
direct distance arithmetic, independence by pairwise rule checks, maximality
by trying every candidate extension, and the branch-and-bound against naive
subset enumeration wherever that is feasible.
"""

import itertools
import math

import pytest

from wmx.toymodel import (
    ToyConfig,
    conflicts,
    naive_max_independent,
    quality_ball,
    tolerance_related,
    toy_coexistence,
    watermark_sets,
)

CUBE = ToyConfig()  # 3 values, 3 levels, ball_overlap radius 1
CUBE_ADJ = ToyConfig(conflict_rule="adjacent")


def independent_by_oracle(points, cfg):
    return all(
        not conflicts(a, b, cfg) for a, b in itertools.combinations(points, 2)
    )


def maximal_by_oracle(points, ball, cfg):
    members = set(points)
    for candidate in ball:
        if candidate in members:
            continue
        if all(not conflicts(candidate, p, cfg) for p in points):
            return False
    return True


# -- config geometry -----------------------------------------------------------


def test_default_config_geometry():
    assert CUBE.dims == 3
    assert CUBE.step == pytest.approx(0.5)
    assert CUBE.center == (1, 1, 1)
    assert CUBE.epsilon == pytest.approx(math.sqrt(3 * 10 ** (-0.5)))


def test_config_validation():
    with pytest.raises(ValueError):
        ToyConfig(levels=1)
    with pytest.raises(ValueError):
        ToyConfig(channels=0)
    with pytest.raises(ValueError):
        ToyConfig(conflict_rule="nearest")
    with pytest.raises(ValueError):
        ToyConfig(conflict_radius=0)
    with pytest.raises(ValueError):
        ToyConfig(center=(1, 1))
    with pytest.raises(ValueError):
        ToyConfig(center=(0, 0, 3))
    with pytest.raises(ValueError):
        ToyConfig(min_psnr=float("inf"))


def test_explicit_center_is_respected():
    cfg = ToyConfig(center=(0, 0, 0), min_psnr=10.78)
    ball = quality_ball(cfg)
    assert (0, 0, 0) in ball
    assert len(ball) == 4  # corner keeps only the three in-grid neighbors


# -- quality ball --------------------------------------------------------------


def test_ball_shrinks_to_center_under_strict_quality():
    assert quality_ball(ToyConfig(min_psnr=200.0)) == [(1, 1, 1)]
    assert quality_ball(ToyConfig(min_psnr=10.8)) == [(1, 1, 1)]


def test_ball_grows_one_step_at_the_threshold():
    # epsilon crosses one grid step between 10.80 and 10.78 dB.
    ball = quality_ball(ToyConfig(min_psnr=10.78))
    assert len(ball) == 7
    assert (1, 1, 1) in ball
    for point in ball:
        assert sum(abs(p - 1) for p in point) <= 1


def test_ball_covers_whole_cube_at_default_quality():
    ball = quality_ball(CUBE)
    assert len(ball) == 27
    eps_steps = CUBE.epsilon / CUBE.step
    for point in itertools.product(range(3), repeat=3):
        d2 = sum((p - 1) ** 2 for p in point)
        assert (d2 <= eps_steps**2) == (point in ball)


def test_ball_enumeration_is_capped():
    with pytest.raises(ValueError):
        quality_ball(ToyConfig(channels=5, levels=40))


def test_watermark_sets_ball_cap():
    with pytest.raises(ValueError):
        watermark_sets(ToyConfig(levels=28, min_psnr=0.0))


# -- conflict rules ------------------------------------------------------------


def test_tolerance_related_pairs():
    assert tolerance_related((0, 0, 0), (0, 1, 0))
    assert not tolerance_related((0, 0, 0), (0, 0, 0))
    assert not tolerance_related((0, 0, 0), (0, 2, 0))
    assert not tolerance_related((0, 0, 0), (1, 1, 0))
    with pytest.raises(ValueError):
        tolerance_related((0, 0), (0, 0, 0))


def test_ball_rule_is_l1_threshold():
    cfg = ToyConfig(conflict_radius=1)
    assert conflicts((0, 0, 0), (0, 1, 1), cfg)  # L1 = 2
    assert not conflicts((0, 0, 0), (0, 1, 2), cfg)  # L1 = 3
    assert not conflicts((0, 0, 0), (0, 0, 0), cfg)
    wide = ToyConfig(conflict_radius=2)
    assert conflicts((0, 0, 0), (0, 2, 2), wide)  # L1 = 4 <= 2 * 2


# -- exact searches ------------------------------------------------------------


def test_adjacent_rule_maximum_is_fourteen():
    result = watermark_sets(CUBE_ADJ)
    assert result["max_size"] == 14
    assert result["capacity_bits"] == pytest.approx(math.log2(14))
    assert len(result["maximum_set"]) == 14
    assert independent_by_oracle(result["maximum_set"], CUBE_ADJ)


def test_ball_rule_maximum_is_five():
    result = watermark_sets(CUBE)
    assert result["max_size"] == 5
    assert result["maximum_set"] == (
        (0, 0, 0), (0, 1, 2), (1, 2, 0), (2, 0, 1), (2, 2, 2),
    )
    assert independent_by_oracle(result["maximum_set"], CUBE)
    assert result["capacity_bits"] == pytest.approx(math.log2(5))
    assert result["rule"] == "ball_overlap"
    assert result["radius"] == 1
    assert result["ball_size"] == 27


def test_branch_and_bound_matches_naive_enumeration():
    star = ToyConfig(min_psnr=10.78)
    ball = quality_ball(star)
    assert len(ball) == 7
    for cfg in (star, ToyConfig(min_psnr=10.78, conflict_rule="adjacent")):
        assert naive_max_independent(ball, cfg) == watermark_sets(cfg)["max_size"]


def test_star_ball_extremes():
    # Outer points of the 7-point star are pairwise non-adjacent but their
    # radius-1 balls all meet, so the two rules give opposite extremes.
    assert watermark_sets(ToyConfig(min_psnr=10.78, conflict_rule="adjacent"))["max_size"] == 6
    assert watermark_sets(ToyConfig(min_psnr=10.78))["max_size"] == 1


def test_naive_enumeration_is_capped():
    ball = quality_ball(CUBE)
    with pytest.raises(ValueError):
        naive_max_independent(ball, CUBE)


# -- maximal set families ------------------------------------------------------


def test_maximal_family_census_on_cube():
    result = watermark_sets(CUBE)
    sizes = {}
    for entry in result["maximal_sets"]:
        sizes[entry["size"]] = sizes.get(entry["size"], 0) + 1
    assert sizes == {5: 22, 4: 60, 3: 7}
    assert result["maximal_sets"][0]["size"] == 5  # sorted largest first


def test_every_emitted_set_is_maximal_and_independent():
    result = watermark_sets(CUBE)
    ball = quality_ball(CUBE)
    for entry in result["maximal_sets"]:
        points = entry["points"]
        assert independent_by_oracle(points, CUBE)
        assert maximal_by_oracle(points, ball, CUBE)
        assert entry["capacity_bits"] == pytest.approx(math.log2(len(points)))


def test_size_four_maximal_sets_carry_two_bits():
    result = watermark_sets(CUBE)
    fours = [e for e in result["maximal_sets"] if e["size"] == 4]
    assert fours
    assert all(e["capacity_bits"] == 2.0 for e in fours)


def test_natural_tetrad_is_independent_but_not_maximal():
    # The four even corners keep pairwise L1 = 4, yet the grid center can
    # always join them, so greedy extension never stops at this set.
    tetrad = [(0, 0, 0), (0, 2, 2), (2, 0, 2), (2, 2, 0)]
    ball = quality_ball(CUBE)
    assert independent_by_oracle(tetrad, CUBE)
    assert not maximal_by_oracle(tetrad, ball, CUBE)
    emitted = {e["points"] for e in watermark_sets(CUBE)["maximal_sets"]}
    assert tuple(sorted(tetrad)) not in emitted
    assert tuple(sorted(tetrad + [(1, 1, 1)])) in emitted


# -- composition ---------------------------------------------------------------


def test_composition_with_center_is_identity():
    set_a = [(0, 0, 0), (0, 1, 2), (2, 2, 2)]
    result = toy_coexistence(set_a, [CUBE.center], CUBE)
    assert result["composed"] == sorted(set_a)
    assert result["overlap_with_a"] == 3
    assert result["ball_exits"] == 0


def test_composition_clamps_to_grid():
    result = toy_coexistence([(2, 2, 2)], [(2, 2, 2)], CUBE)
    assert result["composed"] == [(2, 2, 2)]
    assert result["composed_size"] == 1


def test_composition_counts_conflicts_and_overlaps():
    set_a = [(0, 0, 0), (2, 2, 2)]
    set_b = [(1, 1, 1), (1, 1, 2)]
    result = toy_coexistence(set_a, set_b, CUBE)
    # residuals 0 and +1 on the last axis applied to both members of A
    assert result["composed"] == [(0, 0, 0), (0, 0, 1), (2, 2, 2)]
    assert result["overlap_with_a"] == 2
    assert result["overlap_with_b"] == 0
    assert result["conflict_violations"] == 1  # (0,0,0) vs (0,0,1)


def test_composition_counts_ball_exits():
    tight = ToyConfig(min_psnr=10.78)  # ball = center plus unit neighbors
    result = toy_coexistence([(0, 1, 1)], [(1, 1, 0)], tight)
    assert result["composed"] == [(0, 1, 0)]
    assert result["ball_exits"] == 1


def test_composition_validates_points():
    with pytest.raises(ValueError):
        toy_coexistence([(0, 0)], [(1, 1, 1)], CUBE)
    with pytest.raises(ValueError):
        toy_coexistence([(0, 0, 3)], [(1, 1, 1)], CUBE)
