# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: rotated-rectangle overlap and the CA-CFAR scan.

Contract-identical to the pure-numpy module next to this one; the overlap
here uses Sutherland-Hodgman polygon clipping so the two implementations
cross-validate each other.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, cos, fabs, sin, sqrt

cnp.import_array()


cdef inline double _side(double ex0, double ey0, double ex1, double ey1,
                         double px, double py) nogil:
    # > 0 when p lies left of the directed edge e0 -> e1
    return (ex1 - ex0) * (py - ey0) - (ey1 - ey0) * (px - ex0)


cdef void _rect_corners(const double* rect, double* cx, double* cy) nogil:
    cdef double c = cos(rect[4])
    cdef double s = sin(rect[4])
    cdef double hl = 0.5 * rect[2]
    cdef double hw = 0.5 * rect[3]
    # CCW ring: (+l,+w), (-l,+w), (-l,-w), (+l,-w) in the box frame
    cx[0] = rect[0] + hl * c - hw * s
    cy[0] = rect[1] + hl * s + hw * c
    cx[1] = rect[0] - hl * c - hw * s
    cy[1] = rect[1] - hl * s + hw * c
    cx[2] = rect[0] - hl * c + hw * s
    cy[2] = rect[1] - hl * s - hw * c
    cx[3] = rect[0] + hl * c + hw * s
    cy[3] = rect[1] + hl * s - hw * c


cdef void _corner_bounds(const double* cx, const double* cy,
                         double* bounds) nogil:
    cdef Py_ssize_t i
    bounds[0] = cx[0]
    bounds[1] = cx[0]
    bounds[2] = cy[0]
    bounds[3] = cy[0]
    for i in range(1, 4):
        if cx[i] < bounds[0]:
            bounds[0] = cx[i]
        if cx[i] > bounds[1]:
            bounds[1] = cx[i]
        if cy[i] < bounds[2]:
            bounds[2] = cy[i]
        if cy[i] > bounds[3]:
            bounds[3] = cy[i]


cdef double _clip_overlap(const double* acx, const double* acy,
                          const double* bcx, const double* bcy) nogil:
    cdef double ax[16]
    cdef double ay[16]
    cdef double ox[16]
    cdef double oy[16]
    cdef Py_ssize_t count = 4
    cdef Py_ssize_t out_count, e, i, j
    cdef double e0x, e0y, e1x, e1y, cur_s, nxt_s, t, area

    for i in range(4):
        ax[i] = acx[i]
        ay[i] = acy[i]

    # Clip ring A against each CCW edge of rect B (Sutherland-Hodgman).
    for e in range(4):
        e0x = bcx[e]
        e0y = bcy[e]
        e1x = bcx[(e + 1) & 3]
        e1y = bcy[(e + 1) & 3]
        out_count = 0
        for i in range(count):
            j = i + 1 if i + 1 < count else 0
            cur_s = _side(e0x, e0y, e1x, e1y, ax[i], ay[i])
            nxt_s = _side(e0x, e0y, e1x, e1y, ax[j], ay[j])
            if cur_s >= 0.0:
                ox[out_count] = ax[i]
                oy[out_count] = ay[i]
                out_count += 1
            if (cur_s >= 0.0) != (nxt_s >= 0.0):
                t = cur_s / (cur_s - nxt_s)
                ox[out_count] = ax[i] + t * (ax[j] - ax[i])
                oy[out_count] = ay[i] + t * (ay[j] - ay[i])
                out_count += 1
        count = out_count
        if count == 0:
            return 0.0
        for i in range(count):
            ax[i] = ox[i]
            ay[i] = oy[i]

    area = 0.0
    for i in range(count):
        j = i + 1 if i + 1 < count else 0
        area += ax[i] * ay[j] - ax[j] * ay[i]
    return 0.5 * fabs(area)


def rect_overlap_matrix(rects_a, rects_b):
    """Pairwise intersection areas of rotated rectangles.

    Corners and axis-aligned bounds are computed once per rectangle; pairs
    whose bounds do not meet skip the polygon clip (their overlap is exactly
    zero, so the shortcut changes nothing).

    Args:
        rects_a: (n, 5) float64 rows of (cx, cy, length, width, yaw).
        rects_b: (m, 5) float64, same layout.

    Returns:
        (n, m) float64 intersection areas.
    """
    a = np.ascontiguousarray(rects_a, dtype=np.float64)
    b = np.ascontiguousarray(rects_b, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 5 or b.ndim != 2 or b.shape[1] != 5:
        raise ValueError("rects must have shape (k, 5)")
    cdef const double[:, ::1] av = a
    cdef const double[:, ::1] bv = b
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t m = bv.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] ov = out

    corners_a = np.empty((n, 2, 4), dtype=np.float64)
    corners_b = np.empty((m, 2, 4), dtype=np.float64)
    bounds_a = np.empty((n, 4), dtype=np.float64)  # xmin, xmax, ymin, ymax
    bounds_b = np.empty((m, 4), dtype=np.float64)
    cdef double[:, :, ::1] ca = corners_a
    cdef double[:, :, ::1] cb = corners_b
    cdef double[:, ::1] ba = bounds_a
    cdef double[:, ::1] bb = bounds_b

    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            _rect_corners(&av[i, 0], &ca[i, 0, 0], &ca[i, 1, 0])
            _corner_bounds(&ca[i, 0, 0], &ca[i, 1, 0], &ba[i, 0])
        for j in range(m):
            _rect_corners(&bv[j, 0], &cb[j, 0, 0], &cb[j, 1, 0])
            _corner_bounds(&cb[j, 0, 0], &cb[j, 1, 0], &bb[j, 0])
        for i in range(n):
            for j in range(m):
                if (ba[i, 1] < bb[j, 0] or bb[j, 1] < ba[i, 0]
                        or ba[i, 3] < bb[j, 2] or bb[j, 3] < ba[i, 2]):
                    continue
                ov[i, j] = _clip_overlap(&ca[i, 0, 0], &ca[i, 1, 0],
                                         &cb[j, 0, 0], &cb[j, 1, 0])
    return out


cdef inline double _box_sum(const double[:, :, ::1] t,
                            Py_ssize_t z0, Py_ssize_t z1,
                            Py_ssize_t y0, Py_ssize_t y1,
                            Py_ssize_t x0, Py_ssize_t x1) nogil:
    return (t[z1, y1, x1] - t[z0, y1, x1] - t[z1, y0, x1] - t[z1, y1, x0]
            + t[z0, y0, x1] + t[z0, y1, x0] + t[z1, y0, x0] - t[z0, y0, x0])


def cfar_scan(volume, n_train, n_guard, double alpha1, double alpha2):
    """Per-cell detection thresholds over a 3-D power volume.

    Training cells are the cube of halfwidth n_train + n_guard around each
    cell minus the guard cube of halfwidth n_guard (which covers the cell
    under test); the threshold is alpha1 * mean + alpha2 * population std.
    Cells without a complete window get +inf.  Statistics use summed-volume
    tables over globally mean-centered data for numerical stability.
    """
    vol = np.ascontiguousarray(volume, dtype=np.float64)
    if vol.ndim != 3:
        raise ValueError(f"cfar_scan needs a 3-D volume, got shape {vol.shape}")
    cdef Py_ssize_t n = int(n_train)
    cdef Py_ssize_t g = int(n_guard)
    if n < 1 or g < 0:
        raise ValueError(f"need n_train >= 1 and n_guard >= 0, got ({n}, {g})")
    cdef Py_ssize_t r = n + g
    cdef Py_ssize_t nz = vol.shape[0]
    cdef Py_ssize_t ny = vol.shape[1]
    cdef Py_ssize_t nx = vol.shape[2]
    if min(nz, ny, nx) < 2 * r + 1:
        raise ValueError(
            f"volume {vol.shape} smaller than the {2 * r + 1}-cell CFAR window"
        )

    cdef const double[:, :, ::1] v = vol
    sums_arr = np.zeros((nz + 1, ny + 1, nx + 1), dtype=np.float64)
    sq_arr = np.zeros((nz + 1, ny + 1, nx + 1), dtype=np.float64)
    out_arr = np.full((nz, ny, nx), np.inf, dtype=np.float64)
    cdef double[:, :, ::1] s = sums_arr
    cdef double[:, :, ::1] q = sq_arr
    cdef double[:, :, ::1] o = out_arr

    cdef double shift = 0.0
    cdef double count = <double> ((2 * r + 1) ** 3 - (2 * g + 1) ** 3)
    cdef double d, mean_c, var, outer_s, outer_q, guard_s, guard_q
    cdef Py_ssize_t i, j, k

    with nogil:
        for i in range(nz):
            for j in range(ny):
                for k in range(nx):
                    shift += v[i, j, k]
        shift /= <double> (nz * ny * nx)

        for i in range(nz):
            for j in range(ny):
                for k in range(nx):
                    d = v[i, j, k] - shift
                    s[i + 1, j + 1, k + 1] = (d
                        + s[i, j + 1, k + 1] + s[i + 1, j, k + 1] + s[i + 1, j + 1, k]
                        - s[i, j, k + 1] - s[i, j + 1, k] - s[i + 1, j, k]
                        + s[i, j, k])
                    q[i + 1, j + 1, k + 1] = (d * d
                        + q[i, j + 1, k + 1] + q[i + 1, j, k + 1] + q[i + 1, j + 1, k]
                        - q[i, j, k + 1] - q[i, j + 1, k] - q[i + 1, j, k]
                        + q[i, j, k])

        for i in range(r, nz - r):
            for j in range(ny - 2 * r):
                for k in range(nx - 2 * r):
                    outer_s = _box_sum(s, i - r, i + r + 1, j, j + 2 * r + 1,
                                       k, k + 2 * r + 1)
                    outer_q = _box_sum(q, i - r, i + r + 1, j, j + 2 * r + 1,
                                       k, k + 2 * r + 1)
                    guard_s = _box_sum(s, i - g, i + g + 1, j + r - g, j + r + g + 1,
                                       k + r - g, k + r + g + 1)
                    guard_q = _box_sum(q, i - g, i + g + 1, j + r - g, j + r + g + 1,
                                       k + r - g, k + r + g + 1)
                    mean_c = (outer_s - guard_s) / count
                    var = (outer_q - guard_q) / count - mean_c * mean_c
                    if var < 0.0:
                        var = 0.0
                    o[i, j + r, k + r] = alpha1 * (mean_c + shift) + alpha2 * sqrt(var)
    return out_arr
