"""Rotated-box geometry: BEV overlap, 3D IoU, and the distance-IoU cost.

Boxes live in world coordinates with yaw about the vertical axis; the
bird's-eye-view footprint is the (x, y) rectangle and the vertical extent
is [cz - h/2, cz + h/2].  Pairwise footprint overlap runs on the compiled
kernel when available.

Matrix entry points accept either a sequence of ``Box3D`` or an already
stacked (k, 7) float array of [cx, cy, cz, l, w, h, yaw] rows; the
tracker feeds arrays to keep its per-frame cost off the Python heap.
"""

from __future__ import annotations

import numpy as np

from radarkit import _kernels
from radarkit.grid import Box3D

#: Floor for the enclosing-box diagonal in the DIoU penalty.
_MIN_ENCLOSING_DIAG = 1e-9

_BEV_SIGNS = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def as_boxes_array(boxes) -> np.ndarray:
    """Stack boxes into (k, 7) rows of [cx, cy, cz, l, w, h, yaw]."""
    if isinstance(boxes, np.ndarray):
        arr = np.asarray(boxes, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 7:
            raise ValueError(f"box array must have shape (k, 7), got {arr.shape}")
        return arr
    out = np.empty((len(boxes), 7))
    for i, b in enumerate(boxes):
        out[i] = (b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw)
    return out


def _rects(arr: np.ndarray) -> np.ndarray:
    """(k, 7) box rows -> (k, 5) BEV rects (cx, cy, l, w, yaw)."""
    return np.ascontiguousarray(arr[:, [0, 1, 3, 4, 6]])


def bev_corners(box: Box3D) -> np.ndarray:
    """(4, 2) CCW footprint corners of a box."""
    c, s = np.cos(box.yaw), np.sin(box.yaw)
    rot = np.array([[c, -s], [s, c]])
    local = _BEV_SIGNS * [box.l * 0.5, box.w * 0.5]
    return local @ rot.T + [box.cx, box.cy]


def corners_3d(box: Box3D) -> np.ndarray:
    """(8, 3) corners: the BEV ring at the bottom face, then the top face."""
    ring = bev_corners(box)
    out = np.empty((8, 3))
    out[:4, :2] = ring
    out[4:, :2] = ring
    out[:4, 2] = box.cz - box.h * 0.5
    out[4:, 2] = box.cz + box.h * 0.5
    return out


def overlap_bev_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise BEV intersection areas."""
    a = as_boxes_array(boxes_a)
    b = as_boxes_array(boxes_b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    return _kernels.rect_overlap_matrix(_rects(a), _rects(b))


def overlap_bev(a: Box3D, b: Box3D) -> float:
    """Intersection area of two BEV footprints."""
    return float(overlap_bev_matrix([a], [b])[0, 0])


def _vertical_overlap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    lo_a = (a[:, 2] - a[:, 5] * 0.5)[:, None]
    hi_a = (a[:, 2] + a[:, 5] * 0.5)[:, None]
    lo_b = (b[:, 2] - b[:, 5] * 0.5)[None, :]
    hi_b = (b[:, 2] + b[:, 5] * 0.5)[None, :]
    return np.maximum(0.0, np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b))


def vertical_overlap(a: Box3D, b: Box3D) -> float:
    """Length of the overlap of two vertical extents."""
    return float(_vertical_overlap(as_boxes_array([a]), as_boxes_array([b]))[0, 0])


def iou_bev_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise BEV IoU."""
    a = as_boxes_array(boxes_a)
    b = as_boxes_array(boxes_b)
    inter = overlap_bev_matrix(a, b)
    if inter.size == 0:
        return inter
    area_a = (a[:, 3] * a[:, 4])[:, None]
    area_b = (b[:, 3] * b[:, 4])[None, :]
    return np.clip(inter / (area_a + area_b - inter), 0.0, 1.0)


def iou_bev(a: Box3D, b: Box3D) -> float:
    """Bird's-eye-view IoU of two rotated footprints, in [0, 1]."""
    return float(iou_bev_matrix([a], [b])[0, 0])


def iou_3d_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise 3D IoU (BEV overlap times vertical overlap over union)."""
    a = as_boxes_array(boxes_a)
    b = as_boxes_array(boxes_b)
    inter = overlap_bev_matrix(a, b)
    if inter.size == 0:
        return inter
    inter = inter * _vertical_overlap(a, b)
    vol_a = (a[:, 3] * a[:, 4] * a[:, 5])[:, None]
    vol_b = (b[:, 3] * b[:, 4] * b[:, 5])[None, :]
    return np.clip(inter / (vol_a + vol_b - inter), 0.0, 1.0)


def iou_3d(a: Box3D, b: Box3D) -> float:
    """3D IoU of two oriented boxes, in [0, 1]."""
    return float(iou_3d_matrix([a], [b])[0, 0])


def _aabb(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds (k, 3 mins) and (k, 3 maxes) of oriented boxes."""
    cos_y = np.abs(np.cos(arr[:, 6]))
    sin_y = np.abs(np.sin(arr[:, 6]))
    half = np.empty((arr.shape[0], 3))
    half[:, 0] = 0.5 * (arr[:, 3] * cos_y + arr[:, 4] * sin_y)
    half[:, 1] = 0.5 * (arr[:, 3] * sin_y + arr[:, 4] * cos_y)
    half[:, 2] = 0.5 * arr[:, 5]
    centers = arr[:, :3]
    return centers - half, centers + half


def diou_cost_matrix(boxes_a, boxes_b) -> np.ndarray:
    """Pairwise distance-IoU cost: 1 - IoU3D + d^2 / c^2.

    ``d`` is the 3D center separation and ``c`` the diagonal of the
    axis-aligned box enclosing both oriented boxes (floored to avoid a
    degenerate denominator).  Values lie in [0, 2).
    """
    a = as_boxes_array(boxes_a)
    b = as_boxes_array(boxes_b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    iou = iou_3d_matrix(a, b)
    min_a, max_a = _aabb(a)
    min_b, max_b = _aabb(b)
    dist_sq = np.zeros_like(iou)
    diag_sq = np.zeros_like(iou)
    for d in range(3):
        delta = np.subtract.outer(a[:, d], b[:, d])
        dist_sq += delta * delta
        span = np.maximum.outer(max_a[:, d], max_b[:, d])
        span -= np.minimum.outer(min_a[:, d], min_b[:, d])
        diag_sq += span * span
    np.maximum(diag_sq, _MIN_ENCLOSING_DIAG**2, out=diag_sq)
    dist_sq /= diag_sq
    dist_sq += 1.0
    dist_sq -= iou
    return dist_sq


def diou_cost(a: Box3D, b: Box3D) -> float:
    """Distance-IoU association cost between two boxes, in [0, 2)."""
    return float(diou_cost_matrix([a], [b])[0, 0])
