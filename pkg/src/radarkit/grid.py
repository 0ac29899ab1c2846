"""Dense 4D radar tensors, 7-DoF boxes, and grid coordinate transforms.

Two grid layouts are supported:

* polar: axes (doppler, range, azimuth, elevation), bin ``i`` of an axis
  centered at ``offset + i * resolution``.  Azimuth is measured from the
  +x boresight toward +y; elevation is positive upward.
* cartesian: axes (doppler, z, y, x) with the x axis fastest in memory.
  Voxel ``(iz, iy, ix)`` is centered at ``min + (i + 0.5) * voxel_size``.

Tensor values are linear power: finite and non-negative.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default cartesian coverage (x_min, x_max, y_min, y_max, z_min, z_max) in
#: meters, paired with a 0.4 m voxel: 72 m ahead, +/-15 m across, -2..7.6 m up.
DEFAULT_EXTENTS = (0.0, 72.0, -15.0, 15.0, -2.0, 7.6)
DEFAULT_VOXEL_SIZE = 0.4


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle in radians to (-pi, pi]."""
    return -((-yaw + math.pi) % TWO_PI - math.pi)


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D box: center (m), extents (m), yaw about the vertical axis.

    ``l`` runs along the heading direction, ``w`` across it, ``h`` up.
    Yaw is stored normalized to (-pi, pi]; 0 points along +x.
    """

    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    yaw: float = 0.0

    def __post_init__(self):
        if not (self.l > 0.0 and self.w > 0.0 and self.h > 0.0):
            raise ValueError(
                f"box extents must be positive, got {(self.l, self.w, self.h)}"
            )
        object.__setattr__(self, "yaw", float(normalize_yaw(float(self.yaw))))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz], dtype=float)

    @property
    def volume(self) -> float:
        return self.l * self.w * self.h

    def to_array(self) -> np.ndarray:
        """Return [cx, cy, cz, l, w, h, yaw] as float64."""
        return np.array(
            [self.cx, self.cy, self.cz, self.l, self.w, self.h, self.yaw],
            dtype=float,
        )

    @classmethod
    def from_array(cls, values) -> "Box3D":
        cx, cy, cz, l, w, h, yaw = (float(v) for v in values)
        return cls(cx, cy, cz, l, w, h, yaw)


@dataclass(frozen=True)
class PolarGridSpec:
    """Polar measurement grid.

    Bin ``i`` of each axis is centered at ``offset + i * res``.  Angles are
    radians; ranges are meters.  The spanned azimuth sector must not exceed
    a full turn and the elevation sector must fit in half a turn.
    """

    range_bins: int
    range_res: float
    azimuth_bins: int
    azimuth_res: float
    elevation_bins: int
    elevation_res: float
    doppler_bins: int = 1
    range_offset: float = 0.0
    azimuth_offset: float = 0.0
    elevation_offset: float = 0.0

    def __post_init__(self):
        for name in ("range_bins", "azimuth_bins", "elevation_bins", "doppler_bins"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("range_res", "azimuth_res", "elevation_res"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.range_offset < 0.0:
            raise ValueError("range_offset must be non-negative")
        if self.azimuth_bins * self.azimuth_res > TWO_PI + 1e-9:
            raise ValueError("azimuth span exceeds a full turn")
        if self.elevation_bins * self.elevation_res > math.pi + 1e-9:
            raise ValueError("elevation span exceeds half a turn")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """(doppler, range, azimuth, elevation)."""
        return (
            self.doppler_bins,
            self.range_bins,
            self.azimuth_bins,
            self.elevation_bins,
        )

    def bin_centers(self, axis: str) -> np.ndarray:
        """Center coordinates of every bin along 'range'|'azimuth'|'elevation'."""
        bins = getattr(self, f"{axis}_bins")
        res = getattr(self, f"{axis}_res")
        offset = getattr(self, f"{axis}_offset")
        return offset + res * np.arange(bins)


@dataclass(frozen=True)
class CartesianGridSpec:
    """Axis-aligned voxel grid.

    ``extents`` is (x_min, x_max, y_min, y_max, z_min, z_max) in meters and
    ``voxel_size`` is (vz, vy, vx) in meters; a scalar voxel size applies to
    all three axes.  Grid dimensions round the covered span up to whole
    voxels, so the last voxel may overhang ``max``.
    """

    voxel_size: tuple[float, float, float] = (
        DEFAULT_VOXEL_SIZE,
        DEFAULT_VOXEL_SIZE,
        DEFAULT_VOXEL_SIZE,
    )
    extents: tuple[float, float, float, float, float, float] = DEFAULT_EXTENTS
    doppler_bins: int = 1

    def __post_init__(self):
        vs = self.voxel_size
        if np.isscalar(vs):
            vs = (float(vs),) * 3
        else:
            vs = tuple(float(v) for v in vs)
            if len(vs) != 3:
                raise ValueError("voxel_size must be a scalar or 3 values (vz, vy, vx)")
        if any(not v > 0.0 for v in vs):
            raise ValueError(f"voxel sizes must be positive, got {vs}")
        object.__setattr__(self, "voxel_size", vs)
        ext = tuple(float(v) for v in self.extents)
        if len(ext) != 6:
            raise ValueError("extents must be (x_min, x_max, y_min, y_max, z_min, z_max)")
        for lo, hi, axis in ((ext[0], ext[1], "x"), (ext[2], ext[3], "y"), (ext[4], ext[5], "z")):
            if not hi > lo:
                raise ValueError(f"{axis} extent must satisfy max > min, got ({lo}, {hi})")
        object.__setattr__(self, "extents", ext)
        if int(self.doppler_bins) < 1:
            raise ValueError("doppler_bins must be >= 1")

    @staticmethod
    def _dim(lo: float, hi: float, voxel: float) -> int:
        # Tolerate float noise in spans that divide evenly.
        return max(1, int(math.ceil((hi - lo) / voxel - 1e-9)))

    @property
    def nx(self) -> int:
        return self._dim(self.extents[0], self.extents[1], self.voxel_size[2])

    @property
    def ny(self) -> int:
        return self._dim(self.extents[2], self.extents[3], self.voxel_size[1])

    @property
    def nz(self) -> int:
        return self._dim(self.extents[4], self.extents[5], self.voxel_size[0])

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """(doppler, z, y, x); x is fastest in memory."""
        return (self.doppler_bins, self.nz, self.ny, self.nx)

    def axis_centers(self, axis: str) -> np.ndarray:
        """World coordinates of voxel centers along 'x', 'y', or 'z'."""
        idx = {"x": (0, 2, self.nx), "y": (2, 1, self.ny), "z": (4, 0, self.nz)}[axis]
        lo = self.extents[idx[0]]
        voxel = self.voxel_size[idx[1]]
        return lo + (np.arange(idx[2]) + 0.5) * voxel


GridSpec = PolarGridSpec | CartesianGridSpec


def world_to_voxel(
    spec: CartesianGridSpec, point
) -> tuple[int, int, int] | None:
    """Map a world point (x, y, z) to its voxel index (iz, iy, ix).

    Returns None when the point falls outside the grid extents (the
    out-of-grid signal); min edges are inclusive, max edges exclusive.
    """
    x, y, z = (float(v) for v in point)
    x_min, x_max, y_min, y_max, z_min, z_max = spec.extents
    if not (x_min <= x < x_max and y_min <= y < y_max and z_min <= z < z_max):
        return None
    vz, vy, vx = spec.voxel_size
    iz = min(int((z - z_min) / vz), spec.nz - 1)
    iy = min(int((y - y_min) / vy), spec.ny - 1)
    ix = min(int((x - x_min) / vx), spec.nx - 1)
    return iz, iy, ix


def voxel_to_world(spec: CartesianGridSpec, index) -> tuple[float, float, float]:
    """World coordinates (x, y, z) of the center of voxel (iz, iy, ix)."""
    iz, iy, ix = (int(v) for v in index)
    if not (0 <= iz < spec.nz and 0 <= iy < spec.ny and 0 <= ix < spec.nx):
        raise IndexError(f"voxel index {(iz, iy, ix)} outside grid {spec.shape[1:]}")
    x_min, _, y_min, _, z_min, _ = spec.extents
    vz, vy, vx = spec.voxel_size
    return (
        x_min + (ix + 0.5) * vx,
        y_min + (iy + 0.5) * vy,
        z_min + (iz + 0.5) * vz,
    )


@dataclass(frozen=True)
class RadarTensor:
    """A dense power tensor bound to its grid spec.

    Data shape must equal ``spec.shape``; values must be finite and >= 0.
    """

    spec: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.shape != self.spec.shape:
            raise ValueError(
                f"data shape {data.shape} does not match grid shape {self.spec.shape}"
            )
        if not np.isfinite(data).all():
            raise ValueError("tensor values must be finite")
        if data.size and float(data.min()) < 0.0:
            raise ValueError("tensor values must be non-negative")
        object.__setattr__(self, "data", data)

    @property
    def is_polar(self) -> bool:
        return isinstance(self.spec, PolarGridSpec)

    @property
    def is_cartesian(self) -> bool:
        return isinstance(self.spec, CartesianGridSpec)


def doppler_collapse(tensor: RadarTensor, mode: str = "max") -> RadarTensor:
    """Reduce the doppler axis to a single bin with 'max', 'mean', or 'sum'."""
    if mode not in ("max", "mean", "sum"):
        raise ValueError(f"unknown collapse mode {mode!r}")
    reducer = {"max": np.max, "mean": np.mean, "sum": np.sum}[mode]
    collapsed = reducer(tensor.data, axis=0, keepdims=True)
    spec = dataclasses.replace(tensor.spec, doppler_bins=1)
    return RadarTensor(spec=spec, data=collapsed)


def _axis_fraction(f: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split fractional bin coordinates into (base index, weight, validity).

    A single-bin axis accepts coordinates within half a bin of its center
    and contributes no interpolation.
    """
    if bins == 1:
        valid = np.abs(f) <= 0.5
        i0 = np.zeros_like(f, dtype=np.int64)
        return i0, np.zeros_like(f), valid
    valid = (f >= 0.0) & (f <= bins - 1.0)
    i0 = np.clip(np.floor(f).astype(np.int64), 0, bins - 2)
    return i0, f - i0, valid


def polar_to_cartesian(
    tensor: RadarTensor,
    target: CartesianGridSpec,
    method: str = "trilinear",
) -> RadarTensor:
    """Resample a polar tensor onto a cartesian voxel grid.

    Each target voxel center is converted to (range, azimuth, elevation)
    and the polar tensor is sampled there, trilinearly by default or with
    nearest-neighbor lookup when ``method='nearest'``.  Voxels outside the
    sensed field of view are zero.  The doppler axis carries through
    unchanged, so the target must declare the same number of doppler bins.
    """
    if not tensor.is_polar:
        raise ValueError("polar_to_cartesian requires a polar tensor")
    if method not in ("trilinear", "nearest"):
        raise ValueError(f"unknown resampling method {method!r}")
    spec = tensor.spec
    if target.doppler_bins != spec.doppler_bins:
        raise ValueError(
            f"target doppler_bins {target.doppler_bins} != source {spec.doppler_bins}"
        )

    xs = target.axis_centers("x")
    ys = target.axis_centers("y")
    zs = target.axis_centers("z")
    z, y, x = np.meshgrid(zs, ys, xs, indexing="ij")
    rng = np.sqrt(x * x + y * y + z * z)
    azimuth = np.arctan2(y, x)
    elevation = np.arcsin(np.clip(z / np.maximum(rng, 1e-30), -1.0, 1.0))

    fr = (rng - spec.range_offset) / spec.range_res
    fa = (azimuth - spec.azimuth_offset) / spec.azimuth_res
    fe = (elevation - spec.elevation_offset) / spec.elevation_res

    out = np.zeros(target.shape, dtype=np.float32)
    data = tensor.data.astype(np.float64)

    if method == "nearest":
        ir = np.rint(fr).astype(np.int64)
        ia = np.rint(fa).astype(np.int64)
        ie = np.rint(fe).astype(np.int64)
        valid = (
            (ir >= 0) & (ir < spec.range_bins)
            & (ia >= 0) & (ia < spec.azimuth_bins)
            & (ie >= 0) & (ie < spec.elevation_bins)
            & (np.abs(fr - ir) <= 0.5) & (np.abs(fa - ia) <= 0.5)
            & (np.abs(fe - ie) <= 0.5)
        )
        ir, ia, ie = ir[valid], ia[valid], ie[valid]
        for d in range(spec.doppler_bins):
            out[d][valid] = data[d][ir, ia, ie]
        return RadarTensor(spec=target, data=out)

    ir0, wr, okr = _axis_fraction(fr, spec.range_bins)
    ia0, wa, oka = _axis_fraction(fa, spec.azimuth_bins)
    ie0, we, oke = _axis_fraction(fe, spec.elevation_bins)
    valid = okr & oka & oke
    ir0, wr = ir0[valid], wr[valid]
    ia0, wa = ia0[valid], wa[valid]
    ie0, we = ie0[valid], we[valid]

    acc = np.zeros((spec.doppler_bins, int(valid.sum())), dtype=np.float64)
    for dr in (0, 1):
        cr = np.minimum(ir0 + dr, spec.range_bins - 1)
        fw_r = wr if dr else 1.0 - wr
        for da in (0, 1):
            ca = np.minimum(ia0 + da, spec.azimuth_bins - 1)
            fw_a = wa if da else 1.0 - wa
            for de in (0, 1):
                ce = np.minimum(ie0 + de, spec.elevation_bins - 1)
                fw_e = we if de else 1.0 - we
                weight = fw_r * fw_a * fw_e
                for d in range(spec.doppler_bins):
                    acc[d] += weight * data[d][cr, ca, ce]
    for d in range(spec.doppler_bins):
        out[d][valid] = acc[d]
    return RadarTensor(spec=target, data=out)
