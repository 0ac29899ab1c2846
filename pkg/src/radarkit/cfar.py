"""Cell-averaging CFAR point extraction and per-box visibility scoring.

Operates on linear power volumes (post-detection magnitude squared), so
thresholds scale with the data and the extracted point set is invariant
to any fixed positive rescaling of the input.

The detector slides a cubic window over the doppler-collapsed cartesian
volume: for the cell under test, training cells are the surrounding cube
of halfwidth ``n + g`` minus the guard cube of halfwidth ``g`` (the guard
cube covers the cell under test), and the cell fires when its power
strictly exceeds ``alpha1 * mean + alpha2 * std`` of the training cells
(population std, normalized by the actual training count).  Cells within
``n + g`` of any volume face are skipped: they never fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from radarkit import _kernels
from radarkit.grid import Box3D, CartesianGridSpec, RadarTensor, doppler_collapse
from radarkit.types import LabelObject


class BoundaryError(ValueError):
    """Raised when a cell under test lacks a complete CFAR window."""


@dataclass(frozen=True)
class CfarConfig:
    """CFAR window geometry and threshold scaling.

    ``n`` is the training halfwidth, ``g`` the guard halfwidth (cells);
    the full window spans ``2 * (n + g) + 1`` cells per axis.  The doppler
    axis is collapsed with ``collapse_mode`` before the spatial scan.
    """

    n: int = 15
    g: int = 5
    alpha1: float = 1.0
    alpha2: float = 3.0
    collapse_mode: str = "max"

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if int(self.g) < 0:
            raise ValueError(f"g must be >= 0, got {self.g}")
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ValueError("alpha1 and alpha2 must be non-negative")
        if self.collapse_mode not in ("max", "mean", "sum"):
            raise ValueError(f"unknown collapse mode {self.collapse_mode!r}")

    @property
    def margin(self) -> int:
        """Boundary margin: cells closer than this to a face are skipped."""
        return int(self.n) + int(self.g)


@dataclass(frozen=True)
class CfarPointSet:
    """Extracted radar points: voxel indices, world positions, power."""

    indices: np.ndarray  # (k, 3) int64 rows of (iz, iy, ix)
    xyz: np.ndarray  # (k, 3) float64 rows of (x, y, z) in meters
    power: np.ndarray  # (k,) float64

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, 3)
        xyz = np.asarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        power = np.asarray(self.power, dtype=np.float64).reshape(-1)
        if not (len(indices) == len(xyz) == len(power)):
            raise ValueError("indices, xyz, and power must have matching lengths")
        if len(indices) and len(np.unique(indices, axis=0)) != len(indices):
            raise ValueError("duplicate voxel indices in point set")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "xyz", xyz)
        object.__setattr__(self, "power", power)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    @classmethod
    def empty(cls) -> "CfarPointSet":
        return cls(np.empty((0, 3), np.int64), np.empty((0, 3)), np.empty(0))


def cfar_threshold(volume: np.ndarray, cell, config: CfarConfig) -> float:
    """Detection threshold for one cell of a 3-D power volume.

    Direct two-pass computation over the training cells; raises
    BoundaryError when the window of halfwidth ``n + g`` does not fit.
    Singleton axes carry no window extent, so the cube kernel degrades
    to the 2-D/1-D form of the algorithm on lower-dimensional volumes.
    """
    vol = np.asarray(volume, dtype=np.float64)
    if vol.ndim != 3:
        raise ValueError(f"expected a 3-D volume, got shape {vol.shape}")
    iz, iy, ix = (int(v) for v in cell)
    r = config.margin
    g = int(config.g)
    margins = tuple(0 if n == 1 else r for n in vol.shape)
    guards = tuple(0 if n == 1 else g for n in vol.shape)
    for i, n, m in zip((iz, iy, ix), vol.shape, margins):
        if not m <= i < n - m:
            raise BoundaryError(
                f"cell {(iz, iy, ix)} lacks a complete window of halfwidth {r} "
                f"in volume {vol.shape}"
            )
    rz, ry, rx = margins
    gz, gy, gx = guards
    window = vol[iz - rz : iz + rz + 1, iy - ry : iy + ry + 1, ix - rx : ix + rx + 1]
    guard = vol[iz - gz : iz + gz + 1, iy - gy : iy + gy + 1, ix - gx : ix + gx + 1]
    count = window.size - guard.size
    if count == 0:
        raise BoundaryError(f"volume {vol.shape} leaves no training cells")
    mean = (window.sum() - guard.sum()) / count
    sq = ((window - mean) ** 2).sum() - ((guard - mean) ** 2).sum()
    var = max(sq / count, 0.0)
    return float(config.alpha1 * mean + config.alpha2 * math.sqrt(var))


def cfar_detect(tensor: RadarTensor, config: CfarConfig | None = None) -> CfarPointSet:
    """Extract radar points from a cartesian power tensor.

    The doppler axis is collapsed first; every interior cell whose power
    strictly exceeds its threshold becomes a point.  Points come out in
    canonical (iz, iy, ix) order.
    """
    config = config or CfarConfig()
    if not tensor.is_cartesian:
        raise ValueError("cfar_detect requires a cartesian tensor")
    spec: CartesianGridSpec = tensor.spec
    collapsed = doppler_collapse(tensor, config.collapse_mode)
    vol = collapsed.data[0].astype(np.float64)
    size = 2 * config.margin + 1
    if min(vol.shape) < size:
        raise ValueError(
            f"volume {vol.shape} smaller than the {size}-cell CFAR window"
        )
    thresholds = _kernels.cfar_scan(vol, config.n, config.g, config.alpha1, config.alpha2)
    mask = vol > thresholds
    indices = np.argwhere(mask)  # C order == sorted by (iz, iy, ix)
    if indices.size == 0:
        return CfarPointSet.empty()
    xs = spec.axis_centers("x")[indices[:, 2]]
    ys = spec.axis_centers("y")[indices[:, 1]]
    zs = spec.axis_centers("z")[indices[:, 0]]
    return CfarPointSet(
        indices=indices,
        xyz=np.column_stack([xs, ys, zs]),
        power=vol[mask],
    )


def count_points_in_box(points: CfarPointSet, box: Box3D) -> int:
    """Number of points inside a box (boundary inclusive)."""
    if len(points) == 0:
        return 0
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    dx = points.xyz[:, 0] - box.cx
    dy = points.xyz[:, 1] - box.cy
    dz = points.xyz[:, 2] - box.cz
    local_x = dx * c + dy * s
    local_y = -dx * s + dy * c
    inside = (
        (np.abs(local_x) <= box.l * 0.5)
        & (np.abs(local_y) <= box.w * 0.5)
        & (np.abs(dz) <= box.h * 0.5)
    )
    return int(inside.sum())


def annotate_point_counts(
    labels: list[LabelObject], points: CfarPointSet
) -> list[LabelObject]:
    """Return labels with ``cfar_count`` filled from the point set."""
    return [
        LabelObject(
            box=obj.box,
            class_id=obj.class_id,
            track_id=obj.track_id,
            cfar_count=count_points_in_box(points, obj.box),
        )
        for obj in labels
    ]


def filter_invisible(
    labels: list[LabelObject], points: CfarPointSet
) -> list[LabelObject]:
    """Drop labels with no extracted point inside their box."""
    return [obj for obj in labels if count_points_in_box(points, obj.box) > 0]


@dataclass(frozen=True)
class VisibilityHistogram:
    """Distribution of per-object point counts.

    ``zero`` counts the invisible objects; bin ``i`` covers counts in
    (i * bin_size, (i + 1) * bin_size], left-exclusive right-inclusive.
    """

    zero: int
    bins: np.ndarray
    bin_size: int

    @property
    def total(self) -> int:
        return int(self.zero + self.bins.sum())


def visibility_histogram(counts, bin_size: int = 5) -> VisibilityHistogram:
    """Histogram of point counts with a dedicated zero bucket."""
    if int(bin_size) < 1:
        raise ValueError(f"bin_size must be >= 1, got {bin_size}")
    counts = np.asarray(list(counts), dtype=np.int64)
    if counts.size and counts.min() < 0:
        raise ValueError("counts must be non-negative")
    zero = int((counts == 0).sum())
    positive = counts[counts > 0]
    if positive.size == 0:
        return VisibilityHistogram(zero=zero, bins=np.zeros(0, np.int64), bin_size=bin_size)
    slots = (positive - 1) // bin_size
    bins = np.bincount(slots).astype(np.int64)
    return VisibilityHistogram(zero=zero, bins=bins, bin_size=int(bin_size))
