"""Detection training targets: soft center heatmaps and box regression.

Objects are rasterized on the BEV cell grid implied by a cartesian spec
(x along columns ``u``, y along rows ``v``).  A box center at world
(cx, cy) lands on continuous cell coordinates

    u = (cx - x_min) / s_u - 0.5        v = (cy - y_min) / s_v - 0.5

so integer coordinates coincide with cell centers.  Each object paints an
anisotropic Gaussian scaled by its visibility weight; overlapping objects
of one class combine by elementwise maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from radarkit.grid import Box3D, CartesianGridSpec
from radarkit.types import LabelObject


@dataclass(frozen=True)
class HeatmapConfig:
    """Soft-label shaping parameters.

    ``alpha`` scales the Gaussian footprint relative to the box's BEV
    axis-aligned extents (sigma = alpha * extent / 6, floored at
    ``min_sigma`` cells).  Visibility weight saturates at ``n_ref``
    extracted points and never drops below ``w_min``.
    """

    num_classes: int = 2
    alpha: float = 1.0
    min_sigma: float = 0.5
    n_ref: int = 20
    w_min: float = 0.1

    def __post_init__(self):
        if int(self.num_classes) < 1:
            raise ValueError("num_classes must be >= 1")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.min_sigma <= 0.0:
            raise ValueError("min_sigma must be positive")
        if int(self.n_ref) < 1:
            raise ValueError("n_ref must be >= 1")
        if not 0.0 <= self.w_min <= 1.0:
            raise ValueError("w_min must lie in [0, 1]")


def visibility_weight(
    cfar_count: int | None, config: "HeatmapConfig | None" = None
) -> float:
    """Training weight from the number of radar points on the object.

    Ramps linearly to 1 at ``config.n_ref`` points and is floored at
    ``config.w_min``; an unmeasured count (None) is treated as fully
    visible.
    """
    config = config or HeatmapConfig()
    if cfar_count is None:
        return 1.0
    if int(cfar_count) < 0:
        raise ValueError("cfar_count must be non-negative")
    return max(
        float(config.w_min), min(1.0, float(cfar_count) / float(config.n_ref))
    )


def gaussian_sigma(
    box: Box3D,
    cell_size: tuple[float, float],
    alpha: float = 1.0,
    min_sigma: float = 0.5,
) -> tuple[float, float]:
    """Per-axis Gaussian sigmas (cells) from a box's BEV footprint.

    The footprint is the axis-aligned bounding rectangle of the rotated
    box, converted to cells via ``cell_size`` = (s_u, s_v).
    """
    cos_y = abs(math.cos(box.yaw))
    sin_y = abs(math.sin(box.yaw))
    extent_u = (box.l * cos_y + box.w * sin_y) / float(cell_size[0])
    extent_v = (box.l * sin_y + box.w * cos_y) / float(cell_size[1])
    sigma_u = max(float(min_sigma), float(alpha) * extent_u / 6.0)
    sigma_v = max(float(min_sigma), float(alpha) * extent_v / 6.0)
    return sigma_u, sigma_v


@dataclass(frozen=True)
class Heatmap:
    """Rendered soft labels: (num_classes, ny, nx) values in [0, 1]."""

    data: np.ndarray
    skipped: int


def center_cell_coords(
    box: Box3D, grid: CartesianGridSpec
) -> tuple[float, float]:
    """Continuous heatmap cell coordinates (u, v) of a box center."""
    x_min, _, y_min, _, _, _ = grid.extents
    _, s_v, s_u = grid.voxel_size
    return (box.cx - x_min) / s_u - 0.5, (box.cy - y_min) / s_v - 0.5


def _center_in_grid(box: Box3D, grid: CartesianGridSpec) -> bool:
    x_min, x_max, y_min, y_max, _, _ = grid.extents
    return x_min <= box.cx < x_max and y_min <= box.cy < y_max


def render_heatmap(
    labels: list[LabelObject],
    grid: CartesianGridSpec,
    config: HeatmapConfig | None = None,
) -> Heatmap:
    """Paint per-class soft-label heatmaps for one frame of labels.

    Objects whose center falls outside the grid's (x, y) extents are
    skipped and counted in ``Heatmap.skipped``.
    """
    config = config or HeatmapConfig()
    heat = np.zeros((config.num_classes, grid.ny, grid.nx))
    us = np.arange(grid.nx, dtype=float)
    vs = np.arange(grid.ny, dtype=float)
    skipped = 0
    for obj in labels:
        if not 0 <= obj.class_id < config.num_classes:
            raise ValueError(
                f"class_id {obj.class_id} outside [0, {config.num_classes})"
            )
        if not _center_in_grid(obj.box, grid):
            skipped += 1
            continue
        cu, cv = center_cell_coords(obj.box, grid)
        sigma_u, sigma_v = gaussian_sigma(
            obj.box, (grid.voxel_size[2], grid.voxel_size[1]), config.alpha, config.min_sigma
        )
        weight = visibility_weight(obj.cfar_count, config)
        gu = np.exp(-((us - cu) ** 2) / (2.0 * sigma_u * sigma_u))
        gv = np.exp(-((vs - cv) ** 2) / (2.0 * sigma_v * sigma_v))
        np.maximum(
            heat[obj.class_id], weight * gv[:, None] * gu[None, :], out=heat[obj.class_id]
        )
    return Heatmap(data=heat, skipped=skipped)


@dataclass(frozen=True)
class RegressionTarget:
    """Per-object box regression target at its center cell.

    ``offset`` is the sub-cell remainder in [0, 1) along (u, v); sizes are
    log-encoded; yaw is the (sin, cos) pair.
    """

    class_id: int
    cell: tuple[int, int]  # (iv, iu)
    offset: tuple[float, float]  # (du, dv)
    z: float
    log_size: tuple[float, float, float]  # log(l), log(w), log(h)
    yaw_sin: float
    yaw_cos: float
    weight: float = 1.0


def encode_regression_targets(
    labels: list[LabelObject],
    grid: CartesianGridSpec,
    config: HeatmapConfig | None = None,
) -> list[RegressionTarget]:
    """Encode labels into center-cell regression targets.

    Objects centered outside the grid are skipped, mirroring the heatmap
    renderer.
    """
    config = config or HeatmapConfig()
    x_min, _, y_min, _, _, _ = grid.extents
    _, s_v, s_u = grid.voxel_size
    out = []
    for obj in labels:
        if not _center_in_grid(obj.box, grid):
            continue
        fu = (obj.box.cx - x_min) / s_u
        fv = (obj.box.cy - y_min) / s_v
        iu = min(int(fu), grid.nx - 1)
        iv = min(int(fv), grid.ny - 1)
        out.append(
            RegressionTarget(
                class_id=obj.class_id,
                cell=(iv, iu),
                offset=(fu - iu, fv - iv),
                z=obj.box.cz,
                log_size=(
                    math.log(obj.box.l),
                    math.log(obj.box.w),
                    math.log(obj.box.h),
                ),
                yaw_sin=math.sin(obj.box.yaw),
                yaw_cos=math.cos(obj.box.yaw),
                weight=visibility_weight(obj.cfar_count, config),
            )
        )
    return out


def decode_regression_target(
    target: RegressionTarget, grid: CartesianGridSpec
) -> Box3D:
    """Invert ``encode_regression_targets`` for one target."""
    x_min, _, y_min, _, _, _ = grid.extents
    _, s_v, s_u = grid.voxel_size
    iv, iu = target.cell
    du, dv = target.offset
    return Box3D(
        cx=x_min + (iu + du) * s_u,
        cy=y_min + (iv + dv) * s_v,
        cz=target.z,
        l=math.exp(target.log_size[0]),
        w=math.exp(target.log_size[1]),
        h=math.exp(target.log_size[2]),
        yaw=math.atan2(target.yaw_sin, target.yaw_cos),
    )
