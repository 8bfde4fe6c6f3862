"""
Tests for the collision checker and the planning, motion and detection metrics.
"""

import math

import numpy as np
import pytest

from ssmdrive.errors import ContractError
from ssmdrive.evaluation import (
    boxes_overlap,
    cipo_mask,
    collision_check,
    detection_metrics,
    match_centres,
    merge_motion,
    motion_metrics,
    plan_collisions,
    planning_metrics,
    recall_hits,
    waypoint_yaws,
)

EGO = (2.0, 4.0, 1.5)
CELL = 0.5


def _raster(box, cell=CELL):
    """Grid cells touched by an oriented box, sampled densely including its edges."""
    x, y, w, length, yaw = box
    u, v = np.meshgrid(np.linspace(-length / 2, length / 2, 81), np.linspace(-w / 2, w / 2, 81))
    c, s = math.cos(yaw), math.sin(yaw)
    px = x + c * u - s * v
    py = y + s * u + c * v
    return set(zip(np.floor(px / cell).astype(int).ravel(), np.floor(py / cell).astype(int).ravel(), strict=True))


def _grid_collision(a, b):
    return bool(_raster(a) & _raster(b))


def test_identical_and_distant_boxes():
    box = np.array([1.0, 2.0, 2.0, 4.0, 0.3])
    assert collision_check(box, box[None])
    assert not collision_check(box, np.array([[101.0, 2.0, 2.0, 4.0, 0.3]]))
    assert not collision_check(box, np.zeros((0, 5)))


def test_touching_boxes_collide():
    a = np.array([0.0, 0.0, 2.0, 4.0, 0.0])
    b = np.array([4.0, 0.0, 2.0, 4.0, 0.0])
    assert boxes_overlap(a, b)
    assert not boxes_overlap(a, b + [1e-6, 0, 0, 0, 0])


def test_oriented_check_avoids_grid_false_positives():
    ego = np.array([0.0, 0.0, 2.0, 4.0, 0.0])
    pole = np.array([0.0, 1.1, 0.1, 0.1, 0.0])
    assert _grid_collision(ego, pole)
    assert not collision_check(ego, pole[None])


def test_rotated_boxes_need_the_second_box_axes():
    # axis-aligned bounding boxes overlap, the diamond's own edges separate them
    square = np.array([0.0, 0.0, 2.0, 2.0, 0.0])
    diamond = np.array([2.3, 2.3, 2.0, 2.0, math.pi / 4])
    assert not boxes_overlap(square, diamond)
    assert not boxes_overlap(diamond, square)


def test_collision_is_symmetric_and_rigid(rng):
    for _ in range(200):
        a = np.array([*rng.uniform(-4, 4, 2), *rng.uniform(0.5, 4, 2), rng.uniform(-math.pi, math.pi)])
        b = np.array([*rng.uniform(-4, 4, 2), *rng.uniform(0.5, 4, 2), rng.uniform(-math.pi, math.pi)])
        overlap = boxes_overlap(a, b)
        assert overlap == boxes_overlap(b, a)
        theta, shift = rng.uniform(-math.pi, math.pi), rng.uniform(-10, 10, 2)
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])

        def move(box, rot=rot, shift=shift, theta=theta):
            return np.array([*(rot @ box[:2] + shift), box[2], box[3], box[4] + theta])

        assert boxes_overlap(move(a), move(b)) == overlap


def test_point_boxes_use_containment():
    box = np.array([0.0, 0.0, 2.0, 4.0, 0.0])
    assert boxes_overlap(np.array([1.9, 0.9, 0.0, 0.0, 0.0]), box)
    assert not boxes_overlap(box, np.array([2.1, 0.0, 0.0, 0.0, 0.0]))


def test_waypoint_yaws():
    waypoints = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 1.0], [0.0, 1.0]])
    np.testing.assert_allclose(waypoint_yaws(waypoints, 0.2), [0.2, math.pi / 2, math.pi / 2, math.pi])


def test_plan_collisions_per_step():
    waypoints = np.array([[2.0, 0.0], [4.0, 0.0], [6.0, 0.0]])
    obstacles = np.zeros((3, 1, 5))
    obstacles[:, 0] = [30.0, 0.0, 2.0, 4.0, 0.0]
    obstacles[1, 0, :2] = [7.0, 0.0]
    np.testing.assert_array_equal(plan_collisions(waypoints, obstacles, EGO), [False, True, False])


def _straight(samples, offset=0.0):
    base = np.stack([np.arange(1, 7, dtype=float) * 2.0, np.full(6, offset)], axis=-1)
    return np.repeat(base[None], samples, axis=0)


def _far_obstacles(samples):
    obs = np.zeros((samples, 6, 1, 5))
    obs[..., :] = [50.0, 20.0, 2.0, 4.0, 0.0]
    return obs


def test_perfect_plan_scores_zero():
    gt = _straight(3)
    metrics = planning_metrics(gt, gt, list(_far_obstacles(3)), EGO)
    assert metrics.l2 == {"1s": 0.0, "2s": 0.0, "3s": 0.0, "avg": 0.0}
    assert metrics.collision["avg"] == 0.0


def test_lateral_offset_l2():
    metrics = planning_metrics(_straight(4, 1.0), _straight(4), list(_far_obstacles(4)), EGO)
    for horizon in ("1s", "2s", "3s", "avg"):
        assert metrics.l2[horizon] == pytest.approx(1.0)


def test_collision_rate_over_samples():
    gt = _straight(10)
    obstacles = _far_obstacles(10)
    # sample 3 meets a car at the third waypoint (t = 1.5 s)
    obstacles[3, 2, 0] = [gt[3, 2, 0], 0.0, 2.0, 4.0, 0.0]
    metrics = planning_metrics(gt, gt, list(obstacles), EGO)
    assert metrics.collision["1s"] == 0.0
    assert metrics.collision["2s"] == pytest.approx(10.0)
    assert metrics.collision["3s"] == pytest.approx(10.0)
    assert metrics.collision["avg"] == pytest.approx((0.0 + 10.0 + 10.0) / 3)
    assert metrics.samples == 10


def test_planning_metrics_are_pure():
    pred = _straight(5, 0.3)
    gt = _straight(5)
    obstacles = list(_far_obstacles(5))
    assert planning_metrics(pred, gt, obstacles, EGO) == planning_metrics(pred, gt, obstacles, EGO)


def test_planning_metrics_reject_misaligned_inputs():
    with pytest.raises(ContractError):
        planning_metrics(_straight(2), _straight(3), list(_far_obstacles(2)), EGO)
    with pytest.raises(ContractError):
        planning_metrics(_straight(2)[:, :4], _straight(2)[:, :4], list(_far_obstacles(2)), EGO)
    with pytest.raises(ContractError):
        planning_metrics(_straight(2), _straight(2), list(_far_obstacles(1)), EGO)


def test_motion_metrics_fixtures():
    gt = np.stack([np.arange(1, 7, dtype=float), np.zeros(6)], axis=-1)[None]
    perfect = motion_metrics(gt[:, None], gt, [(0, 0)])
    assert (perfect.min_ade, perfect.min_fde, perfect.miss_rate) == (0.0, 0.0, 0.0)
    off = motion_metrics((gt + [0.0, 3.0])[:, None], gt, [(0, 0)])
    assert off.min_fde == pytest.approx(3.0)
    assert off.min_ade == pytest.approx(3.0)
    assert off.miss_rate == 1.0


def test_extra_modes_never_hurt(rng):
    gt = rng.normal(size=(1, 6, 2))
    modes = gt[:, None] + rng.normal(size=(1, 2, 6, 2))
    worse = np.concatenate([modes, gt[:, None] + 10.0], axis=1)
    assert motion_metrics(worse, gt, [(0, 0)]).min_ade <= motion_metrics(modes, gt, [(0, 0)]).min_ade


def test_motion_metrics_without_matches_are_absent():
    empty = motion_metrics(np.zeros((2, 1, 6, 2)), np.zeros((0, 6, 2)), [])
    assert empty.min_ade is None and empty.matched == 0
    merged = merge_motion([empty, motion_metrics(np.zeros((1, 1, 6, 2)), np.zeros((1, 6, 2)), [(0, 0)])])
    assert merged.min_ade == 0.0 and merged.matched == 1


def test_centre_matching_threshold():
    pred = np.array([[0.0, 0.0], [10.0, 0.0]])
    gt = np.array([[0.5, 0.0], [11.5, 0.0]])
    assert match_centres(pred, gt, 1.0) == [(0, 0)]
    assert match_centres(pred, gt, 2.0) == [(0, 0), (1, 1)]
    assert match_centres(np.zeros((0, 2)), gt) == []


def test_recall_and_cipo():
    gt = np.array([[3.0, 0.0], [10.0, 8.0]])
    pred = np.array([[3.5, 0.0], [10.0, 8.5]])
    hits = recall_hits(pred, np.array([0.9, 0.1]), gt, score_threshold=0.3)
    np.testing.assert_array_equal(hits, [True, False])
    ego_future = np.stack([np.arange(1, 7, dtype=float) * 2.0, np.zeros(6)], axis=-1)
    cipo = cipo_mask(gt, ego_future)
    np.testing.assert_array_equal(cipo, [True, False])
    metrics = detection_metrics([hits], [cipo])
    assert metrics.recall == 0.5
    assert metrics.cipo_recall == 1.0
    assert detection_metrics([], []).recall is None
