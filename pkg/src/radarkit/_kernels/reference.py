"""Pure-numpy implementations of the hot kernels.

Same contract as the compiled extension; selected at import time when the
extension is missing or disabled via RADARKIT_DISABLE_EXTENSION=1.  The
overlap kernel here gathers corner/intersection candidates and runs an
angular-sort shoelace, deliberately a different construction from the
compiled Sutherland-Hodgman clipper so the two paths cross-check.
"""

from __future__ import annotations

import numpy as np

_EPS_INSIDE = 1e-9
_EPS_PARAM = 1e-9
_EPS_DENOM = 1e-12


def _corners(rects: np.ndarray) -> np.ndarray:
    """CCW corner rings (k, 4, 2) of rects given as (cx, cy, l, w, yaw)."""
    c = np.cos(rects[:, 4])
    s = np.sin(rects[:, 4])
    ux = np.stack([c, s], axis=-1)  # heading axis, carries l
    uy = np.stack([-s, c], axis=-1)
    half_l = rects[:, 2, None] * 0.5
    half_w = rects[:, 3, None] * 0.5
    signs = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    return (
        rects[:, None, :2]
        + signs[None, :, 0, None] * (ux * half_l)[:, None, :]
        + signs[None, :, 1, None] * (uy * half_w)[:, None, :]
    )


def _contained(points: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Mask of points (p, 4, 2) inside matching rects (p, 5), boundary in."""
    c = np.cos(rects[:, 4])[:, None]
    s = np.sin(rects[:, 4])[:, None]
    dx = points[..., 0] - rects[:, None, 0]
    dy = points[..., 1] - rects[:, None, 1]
    local_x = dx * c + dy * s
    local_y = -dx * s + dy * c
    return (np.abs(local_x) <= rects[:, None, 2] * 0.5 + _EPS_INSIDE) & (
        np.abs(local_y) <= rects[:, None, 3] * 0.5 + _EPS_INSIDE
    )


def rect_overlap_matrix(rects_a: np.ndarray, rects_b: np.ndarray) -> np.ndarray:
    """Pairwise intersection areas of rotated rectangles.

    Args:
        rects_a: (n, 5) float64 rows of (cx, cy, length, width, yaw).
        rects_b: (m, 5) float64, same layout.

    Returns:
        (n, m) float64 intersection areas.
    """
    rects_a = np.ascontiguousarray(rects_a, dtype=np.float64)
    rects_b = np.ascontiguousarray(rects_b, dtype=np.float64)
    n, m = rects_a.shape[0], rects_b.shape[0]
    if n == 0 or m == 0:
        return np.zeros((n, m))

    pairs_a = np.repeat(rects_a, m, axis=0)  # (p, 5)
    pairs_b = np.tile(rects_b, (n, 1))
    ca = _corners(pairs_a)  # (p, 4, 2)
    cb = _corners(pairs_b)
    p = n * m

    # Candidate vertices of the intersection polygon: corners of one rect
    # inside the other, plus every edge-edge crossing (<= 24 per pair).
    cand = np.empty((p, 24, 2))
    valid = np.zeros((p, 24), dtype=bool)
    cand[:, 0:4] = ca
    valid[:, 0:4] = _contained(ca, pairs_b)
    cand[:, 4:8] = cb
    valid[:, 4:8] = _contained(cb, pairs_a)

    a0 = ca
    da = np.roll(ca, -1, axis=1) - ca  # (p, 4, 2)
    b0 = cb
    db = np.roll(cb, -1, axis=1) - cb
    denom = (
        da[:, :, None, 0] * db[:, None, :, 1] - da[:, :, None, 1] * db[:, None, :, 0]
    )  # (p, 4, 4)
    diff = b0[:, None, :, :] - a0[:, :, None, :]
    t_num = diff[..., 0] * db[:, None, :, 1] - diff[..., 1] * db[:, None, :, 0]
    u_num = diff[..., 0] * da[:, :, None, 1] - diff[..., 1] * da[:, :, None, 0]
    cross = np.abs(denom) > _EPS_DENOM
    safe = np.where(cross, denom, 1.0)
    t = t_num / safe
    u = u_num / safe
    hit = (
        cross
        & (t >= -_EPS_PARAM)
        & (t <= 1.0 + _EPS_PARAM)
        & (u >= -_EPS_PARAM)
        & (u <= 1.0 + _EPS_PARAM)
    )
    points = a0[:, :, None, :] + t[..., None] * da[:, :, None, :]
    cand[:, 8:24] = points.reshape(p, 16, 2)
    valid[:, 8:24] = hit.reshape(p, 16)

    counts = valid.sum(axis=1)
    areas = np.zeros(p)
    live = counts >= 3
    if live.any():
        pts = cand[live]
        ok = valid[live]
        k = counts[live].astype(float)
        center = (pts * ok[..., None]).sum(axis=1) / k[:, None]
        ang = np.arctan2(pts[..., 1] - center[:, None, 1], pts[..., 0] - center[:, None, 0])
        ang = np.where(ok, ang, np.inf)  # invalid slots sort last
        order = np.argsort(ang, axis=1, kind="stable")
        ring = np.take_along_axis(pts, order[..., None], axis=1)
        slot = np.arange(24)[None, :] < counts[live][:, None]
        ring = np.where(slot[..., None], ring, ring[:, 0:1, :])  # pad with first vertex
        nxt = np.roll(ring, -1, axis=1)
        areas[live] = 0.5 * np.abs(
            (ring[..., 0] * nxt[..., 1] - nxt[..., 0] * ring[..., 1]).sum(axis=1)
        )
    return areas.reshape(n, m)


def cfar_scan(
    volume: np.ndarray, n_train: int, n_guard: int, alpha1: float, alpha2: float
) -> np.ndarray:
    """Per-cell detection thresholds over a 3-D power volume.

    For each cell far enough from the boundary, the training set is the
    cubic window of halfwidth ``n_train + n_guard`` minus the guard cube of
    halfwidth ``n_guard`` (cell under test included in the exclusion); the
    threshold is ``alpha1 * mean + alpha2 * std`` with the population std
    of the training cells.  Boundary cells, which lack a full window, get
    +inf so they can never fire.

    The statistics come from summed-volume tables built on globally
    mean-centered data, which keeps the variance free of catastrophic
    cancellation while remaining algebraically the plain two-pass form.
    """
    vol = np.ascontiguousarray(volume, dtype=np.float64)
    if vol.ndim != 3:
        raise ValueError(f"cfar_scan needs a 3-D volume, got shape {vol.shape}")
    n = int(n_train)
    g = int(n_guard)
    if n < 1 or g < 0:
        raise ValueError(f"need n_train >= 1 and n_guard >= 0, got ({n}, {g})")
    r = n + g
    nz, ny, nx = vol.shape
    if min(nz, ny, nx) < 2 * r + 1:
        raise ValueError(
            f"volume {vol.shape} smaller than the {2 * r + 1}-cell CFAR window"
        )

    shift = vol.mean()
    centered = vol - shift

    def prefix(arr: np.ndarray) -> np.ndarray:
        table = np.zeros((nz + 1, ny + 1, nx + 1))
        table[1:, 1:, 1:] = arr.cumsum(0).cumsum(1).cumsum(2)
        return table

    def box_sums(table: np.ndarray, half: int) -> np.ndarray:
        # inclusion-exclusion over the 8 corners of each (2*half+1)^3 cube,
        # evaluated for every cell whose cube fits inside the volume
        hi_z, hi_y, hi_x = nz - 2 * half, ny - 2 * half, nx - 2 * half
        size = 2 * half + 1
        z0, z1 = slice(0, hi_z), slice(size, size + hi_z)
        y0, y1 = slice(0, hi_y), slice(size, size + hi_y)
        x0, x1 = slice(0, hi_x), slice(size, size + hi_x)
        return (
            table[z1, y1, x1]
            - table[z0, y1, x1]
            - table[z1, y0, x1]
            - table[z1, y1, x0]
            + table[z0, y0, x1]
            + table[z0, y1, x0]
            + table[z1, y0, x0]
            - table[z0, y0, x0]
        )

    sums = prefix(centered)
    sq_sums = prefix(centered * centered)

    outer_sum = box_sums(sums, r)
    outer_sq = box_sums(sq_sums, r)
    trim = slice(r - g, -(r - g))  # guard cubes evaluated at interior cells only
    guard_sum = box_sums(sums, g)[trim, trim, trim]
    guard_sq = box_sums(sq_sums, g)[trim, trim, trim]

    count = float((2 * r + 1) ** 3 - (2 * g + 1) ** 3)
    mean_c = (outer_sum - guard_sum) / count
    var = (outer_sq - guard_sq) / count - mean_c * mean_c
    np.maximum(var, 0.0, out=var)
    interior = alpha1 * (mean_c + shift) + alpha2 * np.sqrt(var)

    out = np.full(vol.shape, np.inf)
    out[r : nz - r, r : ny - r, r : nx - r] = interior
    return out
