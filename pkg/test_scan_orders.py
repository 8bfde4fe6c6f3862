"""
Tests for the scan orders, the spiral index and trajectory-guided importance.
"""

import numpy as np
import pytest

from ssmdrive.errors import ContractError
from ssmdrive.scan import (
    ScanOrder,
    SpatialStrategy,
    axis_order,
    build_schedule,
    ego_local2global_order,
    path_distances,
    resample_waypoints,
    spiral_index,
    spiral_indices,
    temporal_order,
    trajectory_importance,
    trajectory_local2global_order,
)
from ssmdrive.scan.orders import TemporalMode, bev_cells
from ssmdrive.tokens import PerceptionRange, TokenKind


def _ring_walk(n):
    """Cells of an n-by-n grid in concentric-ring order, built by walking each ring."""
    seen, walk = set(), []

    def visit(cell):
        if cell not in seen:
            seen.add(cell)
            walk.append(cell)

    for ring in range((n + 1) // 2):
        lo, hi = ring, n - 1 - ring
        for y in range(lo, hi + 1):
            visit((lo, y))
        for x in range(lo + 1, hi + 1):
            visit((x, hi))
        for y in range(hi - 1, lo - 1, -1):
            visit((hi, y))
        for x in range(hi - 1, lo, -1):
            visit((x, lo))
    return walk


def test_spiral_fixture_for_three():
    expected = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0), (1, 1)]
    assert [spiral_index(x, y, 3) for x, y in expected] == list(range(9))
    assert spiral_index(0, 0, 1) == 0


@pytest.mark.parametrize("n", range(1, 17))
def test_spiral_matches_a_ring_walk(n):
    walk = _ring_walk(n)
    assert len(walk) == n * n
    xs, ys = np.array(walk).T
    np.testing.assert_array_equal(spiral_indices(xs, ys, n), np.arange(n * n))
    assert [spiral_index(x, y, n) for x, y in walk] == list(range(n * n))


def test_spiral_rejects_cells_off_the_grid():
    with pytest.raises(ContractError):
        spiral_index(3, 0, 3)
    with pytest.raises(ContractError):
        spiral_indices(np.array([0]), np.array([-1]), 3)


def test_scan_order_requires_a_permutation():
    order = ScanOrder.from_perm(np.array([2, 0, 1]))
    assert order.is_valid()
    np.testing.assert_array_equal(order.inv[order.perm], np.arange(3))
    with pytest.raises(ContractError):
        ScanOrder.from_perm(np.array([0, 0, 1]))


def test_axis_orders():
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(axis_order(xy, "horizontal").perm, [0, 2, 1])
    np.testing.assert_array_equal(axis_order(xy, "vertical").perm, [0, 1, 2])
    np.testing.assert_array_equal(axis_order(xy[:1], "horizontal").perm, [0])
    np.testing.assert_array_equal(axis_order(xy[[0, 2, 1]], "horizontal").perm, [0, 1, 2])


STRATEGIES = ("horizontal", "vertical", "spatial_first", "temporal_first", "ego_spiral", "trajectory")


def _random_tasks(rng, n):
    xy = rng.uniform(-35.0, 35.0, size=(n, 2)) * [1.0, 0.5]
    t = rng.integers(0, 5, size=n)
    kinds = rng.choice([TokenKind.AGENT, TokenKind.MAP], size=n)
    block = rng.permutation(n)[: min(n, 7)]
    kinds[block[0]] = TokenKind.EGO
    kinds[block[1:]] = TokenKind.WAYPOINT
    return xy, t, kinds


def _ordered(strategy, xy, t, kinds, waypoints):
    """The order a strategy builds, with the per-token key it sorts on."""
    if strategy in ("horizontal", "vertical"):
        return axis_order(xy, strategy), xy
    if strategy in ("spatial_first", "temporal_first"):
        return temporal_order(xy, t, strategy), np.column_stack([xy, t])
    if strategy == "ego_spiral":
        return ego_local2global_order(xy), np.column_stack(bev_cells(xy, 50, PerceptionRange()))
    importance = trajectory_importance(xy, waypoints)
    ego_block = np.isin(kinds, [TokenKind.EGO, TokenKind.WAYPOINT])
    return trajectory_local2global_order(kinds, importance), np.column_stack([kinds, np.where(ego_block, 0.0, importance)])


@pytest.mark.parametrize("strategy", STRATEGIES)
def test_orders_are_storage_independent_bijections(strategy):
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n = {0: 10_000, 1: 1}.get(seed, int(rng.integers(2, 10_001)))
        xy, t, kinds = _random_tasks(rng, n)
        waypoints = np.cumsum(rng.uniform(0.0, 4.0, size=(6, 2)) * [1.0, 0.3], axis=0)
        order, key = _ordered(strategy, xy, t, kinds, waypoints)
        assert len(order) == n and order.is_valid()
        np.testing.assert_array_equal(order.inv[order.perm], np.arange(n))
        np.testing.assert_array_equal(order.perm[order.inv], np.arange(n))
        # reshuffled storage yields the same sequence up to tied keys
        shuffle = rng.permutation(n)
        moved, moved_key = _ordered(strategy, xy[shuffle], t[shuffle], kinds[shuffle], waypoints)
        np.testing.assert_array_equal(key[order.perm], moved_key[moved.perm])


def test_ego_spiral_puts_the_origin_first():
    xy = np.array([[20.0, 10.0], [-25.0, -12.0], [0.0, 0.0], [5.0, -3.0]])
    order = ego_local2global_order(xy, grid=50)
    assert order.perm[0] == 2
    outward = ego_local2global_order(xy, grid=50, orientation="border_first")
    assert outward.perm[-1] == 2


def test_ego_spiral_does_not_depend_on_storage(rng):
    cells = rng.choice(50 * 50, size=40, replace=False)
    xy = np.stack([-30.0 + (cells // 50 + 0.5) * 1.2, -15.0 + (cells % 50 + 0.5) * 0.6], axis=-1)
    shuffle = rng.permutation(40)
    base = ego_local2global_order(xy, grid=50)
    moved = ego_local2global_order(xy[shuffle], grid=50)
    np.testing.assert_array_equal(xy[base.perm], xy[shuffle][moved.perm])


def test_ego_spiral_keeps_one_cell_in_index_order():
    xy = np.array([[0.1, 0.1], [0.2, 0.1], [0.15, 0.2]])
    np.testing.assert_array_equal(ego_local2global_order(xy, grid=50).perm, [0, 1, 2])


def test_ego_spiral_clamps_far_tokens():
    xy = np.array([[500.0, 0.0], [29.9, 0.0]])
    assert ego_local2global_order(xy, grid=50).is_valid()


def test_trajectory_importance_fixture():
    queries = np.array([[0.0, 1.0], [0.0, 5.0]])
    waypoints = np.array([[0.0, 1.0], [0.0, 2.0]])
    np.testing.assert_allclose(trajectory_importance(queries, waypoints), [1.0, 0.0])


def test_trajectory_importance_degenerate_cases():
    assert trajectory_importance(np.array([[0.0, 3.0]]), np.array([[0.0, 0.0], [0.0, 1.0]]))[0] == 0.0
    on_path = np.array([[0.0, 0.0], [0.0, 1.0]])
    np.testing.assert_array_equal(trajectory_importance(on_path, np.array([[0.0, 0.0], [0.0, 1.0]])), [1.0, 1.0])
    with pytest.raises(ContractError):
        trajectory_importance(np.zeros((0, 2)), np.zeros((2, 2)))


def test_trajectory_importance_on_random_scenes():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        queries = rng.uniform(-30.0, 30.0, size=(int(rng.integers(1, 40)), 2))
        waypoints = np.cumsum(rng.normal(0.0, 2.0, size=(6, 2)), axis=0)
        w = trajectory_importance(queries, waypoints)
        assert np.all((w >= 0.0) & (w <= 1.0))
        dist = path_distances(queries, resample_waypoints(waypoints))
        if np.count_nonzero(dist == dist.min()) == 1:
            assert np.argmax(w) == np.argmin(dist)


def test_trajectory_order_ignores_scene_scale(rng):
    kinds = np.array([TokenKind.EGO, *[TokenKind.WAYPOINT] * 6, *[TokenKind.AGENT] * 20, *[TokenKind.MAP] * 20])
    for _ in range(20):
        queries = rng.uniform(-30.0, 30.0, size=(len(kinds), 2))
        waypoints = np.cumsum(rng.uniform(0.0, 4.0, size=(6, 2)), axis=0)
        base = trajectory_local2global_order(kinds, trajectory_importance(queries, waypoints))
        for scale in (0.125, 0.5, 4.0, 1024.0):
            scaled = trajectory_local2global_order(kinds, trajectory_importance(queries * scale, waypoints * scale))
            np.testing.assert_array_equal(scaled.perm, base.perm)


def test_resampling_keeps_endpoints():
    dense = resample_waypoints(np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 2.0]]), 5)
    np.testing.assert_allclose(dense, [[0, 0], [0, 1], [0, 2], [2, 2], [4, 2]])


def test_trajectory_order_puts_the_ego_block_first():
    kinds = np.array([TokenKind.AGENT, TokenKind.AGENT, TokenKind.EGO, TokenKind.WAYPOINT, TokenKind.WAYPOINT])
    order = trajectory_local2global_order(kinds, np.array([0.0, 1.0, 0.3, 0.9, 0.1]))
    np.testing.assert_array_equal(order.perm, [2, 3, 4, 1, 0])
    ties = trajectory_local2global_order(kinds, np.array([0.5, 0.5, 0.0, 0.0, 0.0]))
    np.testing.assert_array_equal(ties.perm, [2, 3, 4, 0, 1])
    with pytest.raises(ContractError):
        trajectory_local2global_order(kinds, np.zeros(3))


def test_temporal_modes():
    one_frame = np.array([[3.0, 0.0], [1.0, 0.0], [2.0, 1.0]])
    spatial = axis_order(one_frame, "horizontal").perm
    for mode in TemporalMode:
        np.testing.assert_array_equal(temporal_order(one_frame, np.zeros(3), mode).perm, spatial)
    # one token per frame, newest stored first
    np.testing.assert_array_equal(temporal_order(np.zeros((2, 2)), np.array([5, 4])).perm, [1, 0])


def test_temporal_first_walks_each_cells_history():
    xy = np.array([[0.0, 0.0], [20.0, 0.0], [0.1, 0.1], [20.1, 0.1]])
    t = np.array([1, 1, 0, 0])
    np.testing.assert_array_equal(temporal_order(xy, t, "temporal_first", grid=10).perm, [2, 0, 3, 1])
    np.testing.assert_array_equal(temporal_order(xy, t, "spatial_first").perm, [2, 3, 0, 1])


def test_hybrid_schedule_alternates_axes():
    schedule = build_schedule(4)
    assert [layer.vcl for layer in schedule.layers] == [
        SpatialStrategy.HORIZONTAL,
        SpatialStrategy.VERTICAL,
        SpatialStrategy.HORIZONTAL,
        SpatialStrategy.VERTICAL,
    ]
    assert all(layer.trm is SpatialStrategy.TRAJECTORY for layer in schedule.layers)
    assert {layer.vcl for layer in build_schedule(3, vcl="ego_spiral").layers} == {SpatialStrategy.EGO_SPIRAL}
