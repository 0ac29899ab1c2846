"""Synthetic radar scenarios: moving boxes, polar tensor rendering, and
measurement corruption for end-to-end pipeline tests.

Determinism contract: every random quantity derives from a caller seed
through a fixed ``numpy.random.SeedSequence`` stream layout, so a given
(seed, frame, track) triple always produces the same noise regardless of
how many frames or objects were generated before it:

* object layout        SeedSequence([seed, 0x0B])
* per-frame sensor noise   SeedSequence([seed, 0xF0, frame])
* per-track scatterers     SeedSequence([seed, 0x5C, track_id])
* per-frame corruption     SeedSequence([seed, 0xDE, frame])
* per-track embeddings     SeedSequence([seed, 0xE0, track_id])
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from radarkit.grid import DEFAULT_EXTENTS, Box3D, PolarGridSpec, RadarTensor
from radarkit.types import Detection, LabelObject

if TYPE_CHECKING:  # import cycle guard: tracker imports nothing from sim
    from radarkit.tracker import Assignment

_STREAM_OBJECTS = 0x0B
_STREAM_NOISE = 0xF0
_STREAM_SCATTER = 0x5C
_STREAM_DETS = 0xDE
_STREAM_EMB = 0xE0

_CLASS_SIZE_RANGES = {
    0: ((4.2, 5.2), (1.7, 2.0), (1.4, 1.8)),  # passenger-car sized
    1: ((6.5, 11.0), (2.3, 2.8), (2.5, 3.4)),  # truck/bus sized
}


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


@dataclass(frozen=True)
class ScenarioConfig:
    """Random-scene parameters: population, motion, and world bounds."""

    num_objects: int = 10
    num_frames: int = 100
    dt: float = 0.1
    seed: int = 0
    x_range: tuple[float, float] = (10.0, 62.0)
    y_range: tuple[float, float] = (-12.0, 12.0)
    z_range: tuple[float, float] = (-0.5, 2.0)
    speed_range: tuple[float, float] = (0.5, 3.0)
    class_mix: tuple[float, ...] = (0.7, 0.3)
    min_separation: float = 5.0
    bounds: tuple[float, float, float, float, float, float] = DEFAULT_EXTENTS

    def __post_init__(self):
        if int(self.num_objects) < 0 or int(self.num_frames) < 1:
            raise ValueError("need num_objects >= 0 and num_frames >= 1")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        for name in ("x_range", "y_range", "z_range", "speed_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} must be (lo, hi) with hi >= lo")
        if not self.class_mix or any(p < 0 for p in self.class_mix):
            raise ValueError("class_mix must be non-negative weights")
        if sum(self.class_mix) <= 0:
            raise ValueError("class_mix must have positive total weight")


@dataclass(frozen=True)
class Scenario:
    """Generated ground truth: per-frame labels plus per-track velocities."""

    frames: list[list[LabelObject]]
    velocities: dict[int, tuple[float, float, float]]
    dt: float
    seed: int

    @property
    def num_frames(self) -> int:
        return len(self.frames)

    def labels_by_frame(self) -> dict[int, list[LabelObject]]:
        return {i: list(objs) for i, objs in enumerate(self.frames)}


def _sample_sizes(rng: np.random.Generator, class_id: int) -> tuple[float, float, float]:
    ranges = _CLASS_SIZE_RANGES.get(class_id, _CLASS_SIZE_RANGES[0])
    return tuple(float(rng.uniform(lo, hi)) for lo, hi in ranges)


def generate_scenario(config: ScenarioConfig | None = None) -> Scenario:
    """Sample a scene of constant-velocity objects that stay in bounds.

    Spawn points keep ``min_separation`` meters apart (best effort via
    rejection); each velocity is scaled down just enough that the object
    remains inside the spawn ranges for the whole duration, so no object
    ever exits mid-scenario.
    """
    config = config or ScenarioConfig()
    rng = _rng(config.seed, _STREAM_OBJECTS)
    weights = np.asarray(config.class_mix, dtype=float)
    weights = weights / weights.sum()
    duration = (config.num_frames - 1) * config.dt

    centers: list[np.ndarray] = []
    objects = []
    for track_id in range(1, config.num_objects + 1):
        class_id = int(rng.choice(len(weights), p=weights))
        l, w, h = _sample_sizes(rng, class_id)
        for _ in range(200):
            pos = np.array(
                [
                    rng.uniform(*config.x_range),
                    rng.uniform(*config.y_range),
                    rng.uniform(*config.z_range),
                ]
            )
            if all(np.linalg.norm(pos[:2] - c[:2]) >= config.min_separation for c in centers):
                break
        centers.append(pos)
        speed = rng.uniform(*config.speed_range)
        heading = rng.uniform(-math.pi, math.pi)
        vel = np.array([speed * math.cos(heading), speed * math.sin(heading), 0.0])
        # Shrink velocity components so the endpoint stays inside the range.
        if duration > 0:
            for axis, (lo, hi) in enumerate((config.x_range, config.y_range)):
                end = pos[axis] + vel[axis] * duration
                if end > hi:
                    vel[axis] = (hi - pos[axis]) / duration
                elif end < lo:
                    vel[axis] = (lo - pos[axis]) / duration
        yaw = math.atan2(vel[1], vel[0]) if np.hypot(vel[0], vel[1]) > 0.1 else heading
        objects.append((track_id, class_id, pos, vel, (l, w, h), yaw))

    frames = []
    for k in range(config.num_frames):
        t = k * config.dt
        frame = [
            LabelObject(
                box=Box3D(
                    cx=float(pos[0] + vel[0] * t),
                    cy=float(pos[1] + vel[1] * t),
                    cz=float(pos[2] + vel[2] * t),
                    l=l,
                    w=w,
                    h=h,
                    yaw=yaw,
                ),
                class_id=class_id,
                track_id=track_id,
            )
            for track_id, class_id, pos, vel, (l, w, h), yaw in objects
        ]
        frames.append(frame)
    velocities = {
        track_id: (float(v[0]), float(v[1]), float(v[2]))
        for track_id, _, _, v, _, _ in objects
    }
    return Scenario(frames=frames, velocities=velocities, dt=config.dt, seed=config.seed)


def crossing_scenario(
    seed: int,
    num_frames: int = 40,
    dt: float = 0.1,
    relative_speed: float = 6.0,
    class_id: int = 0,
) -> Scenario:
    """Two objects on near-mirror paths that cross mid-sequence.

    The pair closes at ``relative_speed`` (>= 5 m/s stresses association)
    and passes within roughly a box width, which is the regime where
    overlap-only matching goes ambiguous.
    """
    if relative_speed <= 0.0:
        raise ValueError("relative_speed must be positive")
    rng = _rng(seed, _STREAM_OBJECTS)
    half_v = relative_speed / 2.0
    x_mid = float(rng.uniform(26.0, 42.0))
    gap = float(rng.uniform(0.4, 1.4))  # closest lateral approach
    reach = half_v * (num_frames - 1) * dt / 2.0
    drift_a = float(rng.uniform(-0.6, 0.6))
    drift_b = float(rng.uniform(-0.6, 0.6))
    sizes = [_sample_sizes(_rng(seed, _STREAM_OBJECTS, tid), class_id) for tid in (1, 2)]

    starts = [
        np.array([x_mid - gap / 2.0 - drift_a * reach / half_v, -reach, 0.4]),
        np.array([x_mid + gap / 2.0 - drift_b * reach / half_v, reach, 0.4]),
    ]
    vels = [
        np.array([drift_a, half_v, 0.0]),
        np.array([drift_b, -half_v, 0.0]),
    ]
    frames = []
    for k in range(num_frames):
        t = k * dt
        frame = []
        for tid, (start, vel, (l, w, h)) in enumerate(zip(starts, vels, sizes), start=1):
            pos = start + vel * t
            frame.append(
                LabelObject(
                    box=Box3D(
                        cx=float(pos[0]),
                        cy=float(pos[1]),
                        cz=float(pos[2]),
                        l=l,
                        w=w,
                        h=h,
                        yaw=math.atan2(vel[1], vel[0]),
                    ),
                    class_id=class_id,
                    track_id=tid,
                )
            )
        frames.append(frame)
    velocities = {
        tid: (float(v[0]), float(v[1]), float(v[2]))
        for tid, v in zip((1, 2), vels)
    }
    return Scenario(frames=frames, velocities=velocities, dt=dt, seed=seed)


# ---------------------------------------------------------------------------
# Polar tensor rendering


@dataclass(frozen=True)
class RenderConfig:
    """Sensor model for rasterizing labels into a polar power tensor.

    The noise floor is exponentially distributed (power of complex
    Gaussian receiver noise); each object carries a persistent set of
    point scatterers whose returns peak at ``peak_snr`` times the floor.
    Doppler bin = zero bin + radial speed / velocity resolution.
    """

    noise_floor: float = 1.0
    peak_snr: float = 60.0
    scatterers: int = 6
    doppler_vres: float = 0.5  # m/s per doppler bin
    splat_sigma_bins: float = 0.8

    def __post_init__(self):
        if self.noise_floor <= 0.0 or self.peak_snr <= 0.0:
            raise ValueError("noise_floor and peak_snr must be positive")
        if int(self.scatterers) < 1:
            raise ValueError("scatterers must be >= 1")
        if self.doppler_vres <= 0.0 or self.splat_sigma_bins <= 0.0:
            raise ValueError("doppler_vres and splat_sigma_bins must be positive")


def _track_scatterers(
    seed: int, track_id: int, box: Box3D, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """Persistent per-track scatterer layout: local offsets and amplitudes."""
    rng = _rng(seed, _STREAM_SCATTER, track_id)
    local = rng.uniform(-0.5, 0.5, size=(count, 3)) * [box.l, box.w, box.h]
    amps = rng.uniform(0.4, 1.0, size=count)
    amps[0] = 1.0  # guarantee one full-strength return
    return local, amps


def render_polar_tensor(
    labels: list[LabelObject],
    spec: PolarGridSpec,
    config: RenderConfig | None = None,
    velocities: dict[int, tuple[float, float, float]] | None = None,
    frame: int = 0,
    seed: int = 0,
) -> RadarTensor:
    """Render one frame of labels into a noisy polar power tensor."""
    config = config or RenderConfig()
    velocities = velocities or {}
    noise_rng = _rng(seed, _STREAM_NOISE, frame)
    data = noise_rng.exponential(
        scale=config.noise_floor, size=spec.shape
    )

    zero_bin = (spec.doppler_bins - 1) / 2.0
    peak = config.peak_snr * config.noise_floor
    for obj in labels:
        box = obj.box
        local, amps = _track_scatterers(seed, obj.track_id, box, config.scatterers)
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        world = np.empty_like(local)
        world[:, 0] = box.cx + local[:, 0] * c - local[:, 1] * s
        world[:, 1] = box.cy + local[:, 0] * s + local[:, 1] * c
        world[:, 2] = box.cz + local[:, 2]
        vel = np.asarray(velocities.get(obj.track_id, (0.0, 0.0, 0.0)), dtype=float)
        for point, amp in zip(world, amps):
            rng_m = float(np.linalg.norm(point))
            if rng_m < 1e-6:
                continue
            radial = float(point @ vel) / rng_m
            fr = (rng_m - spec.range_offset) / spec.range_res
            fa = (math.atan2(point[1], point[0]) - spec.azimuth_offset) / spec.azimuth_res
            fe = (math.asin(point[2] / rng_m) - spec.elevation_offset) / spec.elevation_res
            fd = zero_bin + radial / config.doppler_vres
            _splat(data, (fd, fr, fa, fe), peak * amp, config.splat_sigma_bins)
    return RadarTensor(spec=spec, data=data)


def _splat(data: np.ndarray, center: tuple, power: float, sigma: float) -> None:
    """Add a truncated Gaussian bump at fractional bin coordinates."""
    nd, nr, na, ne = data.shape
    fd, fr, fa, fe = center
    di = int(round(fd))
    if not (-1 <= di <= nd):
        return  # moving faster than the doppler window covers
    di = min(max(di, 0), nd - 1)
    reach = max(1, int(math.ceil(3.0 * sigma)))

    def window(f: float, n: int) -> tuple[int, int] | None:
        lo = int(math.floor(f - reach))
        hi = int(math.ceil(f + reach))
        lo, hi = max(lo, 0), min(hi, n - 1)
        return (lo, hi) if lo <= hi else None

    wr = window(fr, nr)
    wa = window(fa, na)
    we = window(fe, ne)
    if wr is None or wa is None or we is None:
        return
    r_idx = np.arange(wr[0], wr[1] + 1)
    a_idx = np.arange(wa[0], wa[1] + 1)
    e_idx = np.arange(we[0], we[1] + 1)
    inv = 1.0 / (2.0 * sigma * sigma)
    gr = np.exp(-((r_idx - fr) ** 2) * inv)
    ga = np.exp(-((a_idx - fa) ** 2) * inv)
    ge = np.exp(-((e_idx - fe) ** 2) * inv)
    bump = power * gr[:, None, None] * ga[None, :, None] * ge[None, None, :]
    data[di, wr[0] : wr[1] + 1, wa[0] : wa[1] + 1, we[0] : we[1] + 1] += bump


# ---------------------------------------------------------------------------
# Detection corruption


@dataclass(frozen=True)
class CorruptionConfig:
    """Measurement degradation applied to ground truth.

    All-zero rates and sigmas reproduce the labels exactly (score 1.0).
    ``fp_rate`` adds ``round(fp_rate * num_objects)`` clutter detections
    per frame; ``emb_jitter`` rotates each persistent track embedding by
    that angle (radians) in a random plane every frame.
    """

    pos_sigma: float = 0.0
    size_sigma: float = 0.0
    yaw_sigma: float = 0.0
    score_sigma: float = 0.0
    fn_rate: float = 0.0
    fp_rate: float = 0.0
    embeddings: bool = False
    emb_dim: int = 32
    emb_jitter: float = 0.0
    fp_score_range: tuple[float, float] = (0.5, 0.9)
    min_size: float = 0.1

    def __post_init__(self):
        for name in ("pos_sigma", "size_sigma", "yaw_sigma", "score_sigma", "emb_jitter"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("fn_rate", "fp_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if int(self.emb_dim) < 2:
            raise ValueError("emb_dim must be >= 2")
        lo, hi = self.fp_score_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise ValueError("fp_score_range must be ordered within [0, 1]")
        if self.min_size <= 0.0:
            raise ValueError("min_size must be positive")


class EmbeddingBank:
    """Persistent per-track unit embeddings with exact-angle jitter."""

    def __init__(self, dim: int = 32, seed: int = 0):
        if int(dim) < 2:
            raise ValueError("dim must be >= 2")
        self.dim = int(dim)
        self.seed = int(seed)
        self._base: dict[int, np.ndarray] = {}

    def base(self, track_id: int) -> np.ndarray:
        """The track's persistent unit embedding."""
        if track_id not in self._base:
            rng = _rng(self.seed, _STREAM_EMB, track_id)
            v = rng.standard_normal(self.dim)
            self._base[track_id] = v / np.linalg.norm(v)
        return self._base[track_id]

    def sample(
        self, track_id: int, jitter: float, rng: np.random.Generator
    ) -> np.ndarray:
        """Base embedding rotated by exactly ``jitter`` radians.

        The rotation plane is spanned by the base vector and a random
        orthogonal direction; jitter 0 returns the base itself.
        """
        base = self.base(track_id)
        if jitter == 0.0:
            return base.copy()
        g = rng.standard_normal(self.dim)
        g -= (g @ base) * base
        norm = float(np.linalg.norm(g))
        if norm < 1e-12:
            return base.copy()
        ortho = g / norm
        return math.cos(jitter) * base + math.sin(jitter) * ortho


def corrupt_detections(
    labels: list[LabelObject],
    config: CorruptionConfig,
    rng: np.random.Generator,
    bank: EmbeddingBank | None = None,
) -> list[Detection]:
    """Degrade one frame of labels into detector-like measurements.

    Labels drop independently at ``fn_rate``; survivors get Gaussian
    position/size/yaw noise and a score of 1 minus folded Gaussian noise.
    Clutter false positives (uniform boxes, mid-range scores) append
    after the true detections.
    """
    detections = []
    for obj in labels:
        if rng.random() < config.fn_rate:
            continue
        box = obj.box
        cx, cy, cz = (
            box.cx + rng.normal(0.0, config.pos_sigma),
            box.cy + rng.normal(0.0, config.pos_sigma),
            box.cz + rng.normal(0.0, config.pos_sigma),
        )
        l, w, h = (
            max(config.min_size, box.l + rng.normal(0.0, config.size_sigma)),
            max(config.min_size, box.w + rng.normal(0.0, config.size_sigma)),
            max(config.min_size, box.h + rng.normal(0.0, config.size_sigma)),
        )
        yaw = box.yaw + rng.normal(0.0, config.yaw_sigma)
        score = float(np.clip(1.0 - abs(rng.normal(0.0, config.score_sigma)), 0.0, 1.0))
        embedding = None
        if config.embeddings and bank is not None:
            embedding = bank.sample(obj.track_id, config.emb_jitter, rng)
        detections.append(
            Detection(
                box=Box3D(cx, cy, cz, l, w, h, yaw),
                score=score,
                class_id=obj.class_id,
                embedding=embedding,
            )
        )

    num_fp = int(round(config.fp_rate * len(labels)))
    classes = sorted({obj.class_id for obj in labels}) or [0]
    for _ in range(num_fp):
        x_min, x_max, y_min, y_max, z_min, z_max = DEFAULT_EXTENTS
        box = Box3D(
            cx=rng.uniform(x_min + 2.0, x_max - 2.0),
            cy=rng.uniform(y_min + 2.0, y_max - 2.0),
            cz=rng.uniform(z_min + 1.0, z_max - 1.0),
            l=rng.uniform(3.5, 6.0),
            w=rng.uniform(1.5, 2.5),
            h=rng.uniform(1.2, 2.2),
            yaw=rng.uniform(-math.pi, math.pi),
        )
        embedding = None
        if config.embeddings:
            v = rng.standard_normal(config.emb_dim)
            embedding = v / np.linalg.norm(v)
        detections.append(
            Detection(
                box=box,
                score=float(rng.uniform(*config.fp_score_range)),
                class_id=int(classes[rng.integers(len(classes))]),
                embedding=embedding,
            )
        )
    return detections


def corrupt_scenario(
    scenario: Scenario,
    config: CorruptionConfig,
    seed: int | None = None,
) -> dict[int, list[Detection]]:
    """Corrupt every frame of a scenario with per-frame derived streams."""
    seed = scenario.seed if seed is None else int(seed)
    bank = EmbeddingBank(config.emb_dim, seed) if config.embeddings else None
    out: dict[int, list[Detection]] = {}
    for frame, labels in enumerate(scenario.frames):
        rng = _rng(seed, _STREAM_DETS, frame)
        out[frame] = corrupt_detections(labels, config, rng, bank)
    return out


# ---------------------------------------------------------------------------
# Brute-force oracles used by the test suite and the demo report


def oracle_assignment(
    cost_matrix: np.ndarray, gate: float = math.inf
) -> "Assignment":
    """Optimal gated matching by exhaustive search; cross-checks ``assign``.

    Among all matchings over feasible entries (finite and <= ``gate``),
    returns one of maximum cardinality and, within that, minimum total
    cost; ties resolve to the lexicographically smallest pair list.
    Rejects matrices larger than 9x9 (factorial search).
    """
    from radarkit.tracker import Assignment

    C = np.asarray(cost_matrix, dtype=float)
    if C.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {C.shape}")
    n, m = C.shape
    if n > 9 or m > 9:
        raise ValueError(f"oracle limited to 9x9 matrices, got {n}x{m}")
    feasible = np.isfinite(C) & (C <= gate)

    transposed = n > m
    if transposed:
        C, feasible = C.T, feasible.T
        n, m = m, n

    best: tuple[int, float, list[tuple[int, int]]] | None = None
    if bool(feasible.all()) and n > 0:
        # Full-cardinality permutations dominate; scan them vectorized.
        perms = np.array(list(itertools.permutations(range(m), n)))
        totals = C[np.arange(n), perms].sum(axis=1)
        cols = perms[int(np.argmin(totals))]  # first = lexicographic min
        best = (n, float(totals.min()), [(r, int(c)) for r, c in enumerate(cols)])
    else:
        used = [False] * m

        def walk(row: int, count: int, total: float, pairs: list[tuple[int, int]]):
            nonlocal best
            if row == n:
                key = (-count, total, pairs)
                if best is None or key < (-best[0], best[1], best[2]):
                    best = (count, total, list(pairs))
                return
            if best is not None and count + (n - row) < best[0]:
                return  # cannot reach the best cardinality any more
            for col in range(m):
                if not used[col] and feasible[row, col]:
                    used[col] = True
                    pairs.append((row, col))
                    walk(row + 1, count + 1, total + float(C[row, col]), pairs)
                    pairs.pop()
                    used[col] = False
            walk(row + 1, count, total, pairs)  # leave this row unmatched

        walk(0, 0, 0.0, [])

    pairs = best[2] if best is not None else []
    if transposed:
        n, m = m, n
        pairs = sorted((c, r) for r, c in pairs)
    matched_r = {r for r, _ in pairs}
    matched_c = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in range(n) if r not in matched_r],
        unmatched_cols=[c for c in range(m) if c not in matched_c],
    )


def oracle_iou(
    a: Box3D,
    b: Box3D,
    samples: int = 100_000,
    seed: int = 0,
    mode: str = "3d",
) -> tuple[float, float]:
    """Sampling estimate of IoU with a 99% half-width.

    Points are drawn uniformly over the joint axis-aligned bounding box;
    IoU is estimated as the ratio of intersection hits to union hits.
    The confidence interval is only meaningful at sample counts >= 1e4,
    which is enforced.
    """
    if samples < 10_000:
        raise ValueError("samples must be >= 10_000 for a usable interval")
    if mode not in ("3d", "bev"):
        raise ValueError(f"unknown IoU mode {mode!r}")
    rng = _rng(seed, 0x10)
    dims = 3 if mode == "3d" else 2

    def bounds(box: Box3D) -> tuple[np.ndarray, np.ndarray]:
        cos_y, sin_y = abs(math.cos(box.yaw)), abs(math.sin(box.yaw))
        half = np.array(
            [
                0.5 * (box.l * cos_y + box.w * sin_y),
                0.5 * (box.l * sin_y + box.w * cos_y),
                0.5 * box.h,
            ]
        )[:dims]
        center = np.array([box.cx, box.cy, box.cz])[:dims]
        return center - half, center + half

    lo_a, hi_a = bounds(a)
    lo_b, hi_b = bounds(b)
    lo = np.minimum(lo_a, lo_b)
    hi = np.maximum(hi_a, hi_b)
    pts = rng.uniform(lo, hi, size=(samples, dims))

    def member(box: Box3D) -> np.ndarray:
        c, s = math.cos(box.yaw), math.sin(box.yaw)
        dx = pts[:, 0] - box.cx
        dy = pts[:, 1] - box.cy
        inside = (np.abs(dx * c + dy * s) <= box.l * 0.5) & (
            np.abs(-dx * s + dy * c) <= box.w * 0.5
        )
        if dims == 3:
            inside &= np.abs(pts[:, 2] - box.cz) <= box.h * 0.5
        return inside

    in_a = member(a)
    in_b = member(b)
    union = int((in_a | in_b).sum())
    inter = int((in_a & in_b).sum())
    if union == 0:
        return 0.0, 0.0
    estimate = inter / union
    half_width = 2.576 * math.sqrt(max(estimate * (1.0 - estimate), 1e-12) / union)
    return float(estimate), float(half_width)
