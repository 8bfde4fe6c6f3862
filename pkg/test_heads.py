"""
Tests for the task heads, target matching, losses, planning constraints and
rigid augmentation.
"""

import itertools
import math

import numpy as np
import pytest

from ssmdrive.errors import ContractError
from ssmdrive.heads import (
    MapOutput,
    RigidAugment,
    TaskHeads,
    apply_augment,
    box_signed_distance,
    chamfer_distance,
    decode_boxes,
    depth_loss,
    encode_boxes,
    focal_loss,
    match_maps,
    match_targets,
    plan_constraints,
    residual_combine,
    winner_mode,
)
from ssmdrive.tensor import Parameter, Tensor, backward, ops, recording
from ssmdrive.tokens import TaskQueryLayout, TokenKind, backproject_tokens
from ssmdrive.world.dataset import build_sample
from ssmdrive.world.poses import transfer_points
from ssmdrive.world.render import render


def _brute_force(cost):
    n_pred, n_gt = cost.shape
    if n_pred >= n_gt:
        return min(sum(cost[p, g] for g, p in enumerate(rows)) for rows in itertools.permutations(range(n_pred), n_gt))
    return min(sum(cost[p, g] for p, g in enumerate(cols)) for cols in itertools.permutations(range(n_gt), n_pred))


def test_matching_is_optimal(rng):
    for shape in [(5, 3), (4, 4), (2, 5), (6, 1)]:
        for _ in range(10):
            cost = rng.uniform(0.0, 10.0, size=shape)
            match = match_targets(cost)
            assert match.cost == pytest.approx(_brute_force(cost))
            assert len(match) == min(shape)
            assert len(set(match.pred.tolist())) == len(match)
            assert len(match) + len(match.unmatched_gt) == shape[1]


def test_matching_edge_cases():
    empty = match_targets(np.zeros((4, 0)))
    assert len(empty) == 0 and empty.cost == 0.0
    none_predicted = match_targets(np.zeros((0, 3)))
    np.testing.assert_array_equal(none_predicted.unmatched_gt, [0, 1, 2])
    with pytest.raises(ContractError):
        match_targets(np.array([[1.0, np.inf]]))
    with pytest.raises(ContractError):
        match_targets(np.zeros(3))


def test_map_cost_ignores_polyline_direction(rng):
    points = rng.normal(size=(2, 5, 2))
    pred = MapOutput(points=Tensor(points), logits=Tensor(np.zeros((2, 3))))
    gt = points[::-1] + 0.1
    forward = match_maps(pred, gt, np.array([0, 1]))
    reverse = match_maps(pred, gt[:, ::-1], np.array([0, 1]))
    assert forward.cost == pytest.approx(reverse.cost)
    assert forward.pairs() == [(0, 1), (1, 0)]


def test_chamfer_is_symmetric(rng):
    a, b = rng.normal(size=(4, 2)), rng.normal(size=(7, 2))
    assert chamfer_distance(a, b) == pytest.approx(chamfer_distance(b, a))
    assert chamfer_distance(a, a) == 0.0


def test_box_codes_decode_back(rng):
    boxes = np.column_stack(
        [rng.normal(size=(5, 3)), rng.uniform(0.5, 5.0, size=(5, 3)), rng.uniform(-math.pi, math.pi, size=5)]
    )
    np.testing.assert_allclose(decode_boxes(encode_boxes(boxes)), boxes, atol=1e-12)


def test_fresh_heads_reproduce_the_references(rng):
    layout = TaskQueryLayout(agents=3, map_instances=2, points_per_instance=4, waypoints=6)
    heads = TaskHeads(8, layout, rng)
    feats = Tensor(rng.normal(size=(layout.total, 8)))
    refs = np.concatenate([rng.uniform(-10.0, 10.0, size=(layout.total, 2)), np.zeros((layout.total, 1))], axis=1)
    out = heads(feats, refs)
    sl = layout.slices()
    np.testing.assert_allclose(out.detection.centres, refs[sl[TokenKind.AGENT], :2])
    np.testing.assert_allclose(out.plan.waypoints.data, refs[sl[TokenKind.WAYPOINT], :2])
    np.testing.assert_allclose(out.map.points.data.reshape(-1, 2), refs[sl[TokenKind.MAP], :2])
    assert np.all(out.detection.scores() < 0.02)
    assert out.motion.displacements.shape == (3, 6, 6, 2)
    np.testing.assert_allclose(out.motion.probabilities().sum(axis=1), 1.0)
    np.testing.assert_allclose(out.refined_refs(refs, layout), refs)


def test_residual_combine_checks_widths():
    with pytest.raises(ContractError):
        residual_combine(Tensor(np.zeros((2, 4))), Tensor(np.zeros((2, 3))))
    np.testing.assert_array_equal(residual_combine(Tensor(np.ones((2, 3))), None).data, np.ones((2, 3)))


def test_focal_loss_values():
    positive = focal_loss(Tensor(np.array([[0.0]])), np.array([[1.0]]))
    assert positive.item() == pytest.approx(math.log(2.0) * 0.25 * 0.25)
    negative = focal_loss(Tensor(np.array([[0.0]])), np.array([[0.0]]))
    assert negative.item() == pytest.approx(math.log(2.0) * 0.25 * 0.75)
    confident = focal_loss(Tensor(np.array([[12.0, -12.0]])), np.array([[1.0, 0.0]]))
    assert confident.item() < 1e-9


def test_winner_mode_prefers_the_first_tie():
    gt = np.zeros((3, 2))
    modes = np.stack([np.ones((3, 2)), np.full((3, 2), 0.5), np.full((3, 2), -0.5)])
    assert winner_mode(modes, gt) == 1


def test_depth_loss_is_masked():
    loss = depth_loss(Tensor(np.array([1.0, 2.0, 3.0])), np.array([1.0, 0.0, 5.0]), np.array([True, False, True]))
    assert loss.item() == pytest.approx(1.0)
    assert depth_loss(Tensor(np.ones(3)), np.zeros(3), np.zeros(3, dtype=bool)).item() == 0.0


def test_box_signed_distance():
    # one car-sized box at the origin facing +x: width 2, length 4
    boxes = np.array([[[0.0, 0.0, 2.0, 4.0, 0.0]]] * 3)
    points = Tensor(np.array([[0.0, 0.0], [5.0, 0.0], [2.0 + 3.0, 1.0 + 4.0]]))
    dist = box_signed_distance(points, boxes).data[:, 0]
    np.testing.assert_allclose(dist, [-1.0, 3.0, 5.0])
    rotated = np.array([[[0.0, 0.0, 2.0, 4.0, math.pi / 2]]])
    assert box_signed_distance(Tensor(np.array([[0.0, 5.0]])), rotated).data[0, 0] == pytest.approx(3.0)


def test_box_signed_distance_is_exact_inside():
    boxes = np.array([[[0.0, 0.0, 2.0, 4.0, 0.0]]] * 2)
    points = Parameter(np.array([[0.5, 0.25], [1.0, 0.0]]))
    with recording():
        dist = box_signed_distance(points, boxes)
        total = ops.sum(dist)
    backward(total)
    # nearest side is the long one at y = 1, then a tie at 1 m from both sides
    np.testing.assert_array_equal(dist.data[:, 0], [-0.75, -1.0])
    assert np.all(np.isfinite(points.grad))
    np.testing.assert_array_equal(points.grad[0], [0.0, 1.0])


def test_collision_and_overstep_penalties():
    obstacles = np.array([[[0.0, 0.0, 2.0, 4.0, 0.0]], [[10.0, 0.0, 2.0, 4.0, 0.0]]])
    boundary = np.array([[-10.0, 5.0], [10.0, 5.0]])
    inside = plan_constraints(Tensor(np.array([[0.0, 0.0], [0.0, 6.0]])), obstacles, [boundary])
    # margin 1 minus signed distance -1, plus the second waypoint 1 m past the boundary
    assert inside.collision.item() == pytest.approx(2.0)
    assert inside.overstep.item() == pytest.approx(1.0)
    clear = plan_constraints(Tensor(np.array([[0.0, 4.0], [0.0, 4.5]])), obstacles, [boundary])
    assert clear.collision.item() == 0.0
    assert clear.overstep.item() == 0.0


def test_direction_penalty_follows_the_lane():
    divider = np.array([[-20.0, 1.75], [20.0, 1.75]])
    along = plan_constraints(Tensor(np.array([[1.0, 0.0], [2.0, 0.0]])), np.zeros((2, 0, 5)), [], [divider])
    assert along.direction.item() == 0.0
    across = plan_constraints(Tensor(np.array([[0.0, 1.0], [0.0, 2.0]])), np.zeros((2, 0, 5)), [], [divider])
    assert across.direction.item() == pytest.approx(2.0 * math.cos(math.radians(30.0)))
    standing = plan_constraints(Tensor(np.zeros((2, 2))), np.zeros((2, 0, 5)), [], [divider])
    assert standing.direction.item() == 0.0


def test_identity_augment_changes_nothing(tiny_episode):
    same = apply_augment(tiny_episode, RigidAugment.identity())
    rendered = render(tiny_episode, None, 1)
    a = build_sample(tiny_episode, 1, rendered).targets
    b = build_sample(same, 1, rendered).targets
    np.testing.assert_allclose(a.boxes, b.boxes, atol=1e-12)
    np.testing.assert_allclose(a.ego_future, b.ego_future, atol=1e-12)
    np.testing.assert_allclose(same.rig.rotations, tiny_episode.rig.rotations, atol=1e-12)


def test_flipping_twice_restores_the_episode(tiny_episode):
    flip = RigidAugment(flip_y=True)
    back = apply_augment(apply_augment(tiny_episode, flip), flip)
    np.testing.assert_allclose(back.frame_transform, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(back.rig.rotations, tiny_episode.rig.rotations, atol=1e-12)
    assert back.commands == tiny_episode.commands
    np.testing.assert_allclose(back.canbus, tiny_episode.canbus)


def test_augmented_targets_and_cameras_move_together(tiny_episode, rng):
    transform = RigidAugment(rotation=0.3, translation=(1.0, -0.5), flip_y=True)
    aug = apply_augment(tiny_episode, transform)
    rendered = render(tiny_episode, None, 0)
    plain = build_sample(tiny_episode, 0, rendered).targets
    moved = build_sample(aug, 0, rendered).targets

    def move(xy):
        return xy @ transform.linear().T + np.array(transform.translation)

    np.testing.assert_allclose(moved.ego_future, move(plain.ego_future), atol=1e-9)
    np.testing.assert_allclose(moved.obstacles[..., :2], move(plain.obstacles[..., :2]), atol=1e-9)
    depth = rng.uniform(2.0, 30.0, size=tiny_episode.rig.num_tokens)
    before = backproject_tokens(depth, tiny_episode.rig)
    after = backproject_tokens(depth, aug.rig)
    expected = before @ transform.linear3().T + np.array([*transform.translation, 0.0])
    np.testing.assert_allclose(after, expected, atol=1e-9)


def test_augmented_frame_poses_stay_rigid(tiny_episode):
    aug = apply_augment(tiny_episode, RigidAugment(rotation=-0.2, translation=(0.5, 0.5), flip_y=True))
    world = np.array([[12.0, 3.0], [-4.0, 7.5]])
    for t0, t1 in [(0, 1), (1, 3)]:
        carried = transfer_points(aug.to_local(t0, world), aug.frame_pose(t0), aug.frame_pose(t1))
        np.testing.assert_allclose(carried, aug.to_local(t1, world), atol=1e-9)
