"""Rotated-box overlap, IoU, and the distance-IoU association cost."""

import math

import numpy as np
import pytest

from radarkit.geometry import (
    as_boxes_array,
    bev_corners,
    corners_3d,
    diou_cost,
    diou_cost_matrix,
    iou_3d,
    iou_3d_matrix,
    iou_bev,
    iou_bev_matrix,
    overlap_bev,
    vertical_overlap,
)
from radarkit.grid import Box3D
from radarkit.sim import oracle_iou

UNIT_CUBE = Box3D(0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0)


class TestCorners:
    def test_axis_aligned_footprint(self):
        box = Box3D(1.0, 2.0, 0.0, 4.0, 2.0, 1.0, 0.0)
        got = {tuple(np.round(c, 9)) for c in bev_corners(box)}
        assert got == {(3.0, 3.0), (-1.0, 3.0), (-1.0, 1.0), (3.0, 1.0)}

    def test_quarter_turn_swaps_extents(self):
        box = Box3D(0.0, 0.0, 0.0, 4.0, 2.0, 1.0, math.pi / 2)
        corners = bev_corners(box)
        assert np.ptp(corners[:, 0]) == pytest.approx(2.0)
        assert np.ptp(corners[:, 1]) == pytest.approx(4.0)

    def test_corners_3d_faces(self):
        box = Box3D(0.0, 0.0, 5.0, 2.0, 2.0, 3.0, 0.3)
        pts = corners_3d(box)
        assert pts.shape == (8, 3)
        np.testing.assert_allclose(pts[:4, 2], 3.5)
        np.testing.assert_allclose(pts[4:, 2], 6.5)
        np.testing.assert_allclose(pts[:4, :2], pts[4:, :2])


class TestAsBoxesArray:
    def test_stacks_box_objects(self):
        arr = as_boxes_array([UNIT_CUBE, Box3D(1, 2, 3, 4, 5, 6, 0.5)])
        assert arr.shape == (2, 7)
        np.testing.assert_allclose(arr[1], [1, 2, 3, 4, 5, 6, 0.5])

    def test_passes_through_valid_array(self):
        arr = np.arange(14, dtype=float).reshape(2, 7) + 1.0
        np.testing.assert_array_equal(as_boxes_array(arr), arr)

    def test_rejects_bad_array_shape(self):
        with pytest.raises(ValueError):
            as_boxes_array(np.ones((2, 6)))


class TestIouBev:
    def test_identical_boxes(self):
        box = Box3D(3.0, -1.0, 0.5, 4.2, 1.8, 1.5, 0.7)
        assert iou_bev(box, box) == pytest.approx(1.0, abs=1e-9)

    def test_offset_unit_squares(self):
        a = UNIT_CUBE
        b = Box3D(0.5, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0)
        assert iou_bev(a, b) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_disjoint_is_exactly_zero(self):
        a = UNIT_CUBE
        b = Box3D(10.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.4)
        assert iou_bev(a, b) == 0.0
        assert overlap_bev(a, b) == 0.0

    def test_symmetry(self, rng, make_overlapping_pair):
        for _ in range(50):
            a, b = make_overlapping_pair(rng)
            assert iou_bev(a, b) == pytest.approx(iou_bev(b, a), abs=1e-12)

    def test_contained_box(self):
        # 1x1 footprint fully inside 4x4, any yaw: IoU = 1/16
        outer = Box3D(0.0, 0.0, 0.0, 4.0, 4.0, 1.0, 0.0)
        inner = Box3D(0.2, -0.3, 0.0, 1.0, 1.0, 1.0, 1.1)
        assert iou_bev(outer, inner) == pytest.approx(1.0 / 16.0, abs=1e-9)

    def test_rotated_pairs_match_sampling_oracle(self, rng, make_overlapping_pair):
        for _ in range(8):
            a, b = make_overlapping_pair(rng)
            estimate, half_width = oracle_iou(a, b, samples=200_000, mode="bev")
            assert abs(iou_bev(a, b) - estimate) <= half_width + 5e-3


class TestVerticalOverlap:
    def test_half_overlap(self):
        a = Box3D(0, 0, 0.0, 1, 1, 1.0, 0)
        b = Box3D(0, 0, 0.5, 1, 1, 1.0, 0)
        assert vertical_overlap(a, b) == pytest.approx(0.5)

    def test_disjoint_heights(self):
        a = Box3D(0, 0, 0.0, 1, 1, 1.0, 0)
        b = Box3D(0, 0, 5.0, 1, 1, 1.0, 0)
        assert vertical_overlap(a, b) == 0.0


class TestIou3d:
    def test_identical_boxes(self):
        box = Box3D(3.0, -1.0, 0.5, 4.2, 1.8, 1.5, 0.7)
        assert iou_3d(box, box) == pytest.approx(1.0, abs=1e-9)

    def test_same_footprint_half_height_overlap(self):
        a = Box3D(0.0, 0.0, 0.0, 2.0, 2.0, 1.0, 0.4)
        b = Box3D(0.0, 0.0, 0.5, 2.0, 2.0, 1.0, 0.4)
        assert iou_3d(a, b) == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_vertical_separation_zeroes_iou(self):
        a = UNIT_CUBE
        b = Box3D(0.0, 0.0, 3.0, 1.0, 1.0, 1.0, 0.0)
        assert iou_3d(a, b) == 0.0

    def test_random_pairs_match_sampling_oracle(self, rng, make_overlapping_pair):
        for _ in range(8):
            a, b = make_overlapping_pair(rng)
            estimate, half_width = oracle_iou(a, b, samples=200_000, mode="3d")
            assert abs(iou_3d(a, b) - estimate) <= half_width + 5e-3

    def test_bounded_by_unit_interval(self, rng, make_random_box):
        for _ in range(100):
            a = make_random_box(rng, center_span=4.0)
            b = make_random_box(rng, center_span=4.0)
            value = iou_3d(a, b)
            assert 0.0 <= value <= 1.0


class TestDiouCost:
    def test_identical_boxes_cost_zero(self):
        box = Box3D(1.0, 2.0, 3.0, 4.0, 2.0, 1.5, 0.9)
        assert diou_cost(box, box) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_unit_cubes_hand_case(self):
        a = UNIT_CUBE
        b = Box3D(10.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0)
        # enclosing axis-aligned box from the 16 corners: 11 x 1 x 1
        pts = np.vstack([corners_3d(a), corners_3d(b)])
        span = pts.max(axis=0) - pts.min(axis=0)
        np.testing.assert_allclose(span, [11.0, 1.0, 1.0])
        c_sq = float((span**2).sum())
        assert c_sq == pytest.approx(123.0)
        assert diou_cost(a, b) == pytest.approx(1.0 + 100.0 / 123.0, abs=1e-3)

    def test_same_center_quarter_turn_square(self):
        # squares rotated by pi/2 coincide: no center penalty, cost = 1 - IoU
        a = Box3D(0.0, 0.0, 0.0, 2.0, 2.0, 1.0, 0.0)
        b = Box3D(0.0, 0.0, 0.0, 2.0, 2.0, 1.0, math.pi / 2)
        estimate, half_width = oracle_iou(a, b, samples=1_000_000, mode="3d")
        assert diou_cost(a, b) == pytest.approx(1.0 - estimate, abs=half_width + 1e-2)

    def test_symmetry(self, rng, make_overlapping_pair):
        for _ in range(50):
            a, b = make_overlapping_pair(rng)
            assert diou_cost(a, b) == pytest.approx(diou_cost(b, a), abs=1e-12)

    def test_never_below_one_minus_iou(self, rng, make_random_box):
        for _ in range(100):
            a = make_random_box(rng, center_span=6.0)
            b = make_random_box(rng, center_span=6.0)
            assert diou_cost(a, b) >= 1.0 - iou_3d(a, b) - 1e-12

    def test_cost_grows_with_separation_when_disjoint(self):
        costs = [
            diou_cost(UNIT_CUBE, Box3D(d, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0))
            for d in (2.0, 4.0, 8.0, 16.0)
        ]
        assert all(b > a for a, b in zip(costs, costs[1:]))
        assert all(0.0 <= c < 2.0 for c in costs)

    def test_degenerate_coincident_points_guarded(self):
        # zero-size boxes share a center: penalty denominator is floored,
        # so the cost stays finite
        with pytest.raises(ValueError):
            Box3D(0, 0, 0, 0.0, 1.0, 1.0, 0)  # zero extent is not a box


class TestMatrixForms:
    def test_matrix_matches_scalar_entries(self, rng, make_random_box):
        boxes_a = [make_random_box(rng, center_span=6.0) for _ in range(4)]
        boxes_b = [make_random_box(rng, center_span=6.0) for _ in range(3)]
        bev = iou_bev_matrix(boxes_a, boxes_b)
        vol = iou_3d_matrix(boxes_a, boxes_b)
        cost = diou_cost_matrix(boxes_a, boxes_b)
        assert bev.shape == vol.shape == cost.shape == (4, 3)
        for i, a in enumerate(boxes_a):
            for j, b in enumerate(boxes_b):
                assert bev[i, j] == pytest.approx(iou_bev(a, b), abs=1e-12)
                assert vol[i, j] == pytest.approx(iou_3d(a, b), abs=1e-12)
                assert cost[i, j] == pytest.approx(diou_cost(a, b), abs=1e-12)

    def test_empty_inputs_yield_empty_matrices(self):
        assert iou_bev_matrix([], [UNIT_CUBE]).shape == (0, 1)
        assert iou_3d_matrix([UNIT_CUBE], []).shape == (1, 0)
        assert diou_cost_matrix([], []).shape == (0, 0)

    def test_accepts_stacked_arrays(self, rng, make_random_box):
        boxes = [make_random_box(rng) for _ in range(3)]
        arr = as_boxes_array(boxes)
        np.testing.assert_allclose(
            iou_bev_matrix(arr, arr), iou_bev_matrix(boxes, boxes), atol=1e-12
        )
