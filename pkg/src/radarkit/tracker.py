"""Online multi-object tracking: constant-velocity Kalman filtering over
16-dimensional box states, two-stage score-split association with a fused
distance-IoU / appearance cost, and track lifecycle management.

State layout: [x, y, z, l, w, h, sin(yaw), cos(yaw)] followed by the time
derivatives of those eight components.  Measurements are the first eight.
Prediction is strictly linear (so chaining three dt-steps equals one
3*dt-step exactly); the heading (sin, cos) pair is renormalized only
inside the measurement update.

Association runs in stages each frame:

1. active + lost tracks against high-score detections, cost = min of the
   gated distance-IoU term and the gated appearance term;
2. remaining active tracks against low-score detections, geometry only;
3. tentative tracks against the remaining high-score detections.

Leftover high-score detections spawn tentative tracks (immediately active
on the very first frame); tracks confirm after ``min_hits`` matches,
unmatched active tracks become lost, and lost tracks are dropped once
unseen for more than ``max_age`` frames.  Track ids are never reused.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from radarkit import geometry
from radarkit.grid import Box3D
from radarkit.types import Detection

STATE_DIM = 16
MEAS_DIM = 8
_MIN_BOX_SIZE = 1e-3


class NumericalError(RuntimeError):
    """Raised when the filter's innovation covariance stops being PD."""


class TrackStatus(Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"


@dataclass(frozen=True)
class TrackerConfig:
    """Tracker thresholds, gates, and noise model.

    Score thresholds split detections into the high band (>= ``tau_high``)
    and the low band ([``tau_low``, ``tau_high``)); detections below
    ``tau_low`` are ignored.  Appearance participates only for detections
    scoring above ``tau_emb``.  Noise entries are per-step standard
    deviations of the diagonal process/measurement models.
    """

    dt: float = 0.1
    tau_high: float = 0.5
    tau_low: float = 0.1
    tau_emb: float = 0.6
    diou_gate: float = 1.3
    iou_gate: float = 0.95
    app_gate: float = 0.25
    min_hits: int = 2
    max_age: int = 10
    ema_momentum: float = 0.9
    cost_mode: str = "diou"
    use_appearance: bool = True
    q_pos: float = 0.15
    q_size: float = 0.05
    q_yaw: float = 0.03
    q_vel: float = 1.0
    q_size_vel: float = 0.05
    q_yaw_vel: float = 0.03
    r_pos: float = 0.25
    r_size: float = 0.15
    r_yaw: float = 0.08
    p0_pos: float = 1.0
    p0_size: float = 0.5
    p0_yaw: float = 0.3
    p0_vel: float = 10.0
    p0_size_vel: float = 1.0
    p0_yaw_vel: float = 1.0

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if not 0.0 <= self.tau_low <= self.tau_high <= 1.0:
            raise ValueError("need 0 <= tau_low <= tau_high <= 1")
        if not 0.0 <= self.tau_emb <= 1.0:
            raise ValueError("tau_emb must lie in [0, 1]")
        if self.diou_gate <= 0.0 or self.iou_gate <= 0.0 or self.app_gate <= 0.0:
            raise ValueError("association gates must be positive")
        if int(self.min_hits) < 1:
            raise ValueError("min_hits must be >= 1")
        if int(self.max_age) < 0:
            raise ValueError("max_age must be >= 0")
        if not 0.0 <= self.ema_momentum < 1.0:
            raise ValueError("ema_momentum must lie in [0, 1)")
        if self.cost_mode not in ("diou", "iou"):
            raise ValueError(f"unknown cost_mode {self.cost_mode!r}")
        for name in (
            "q_pos", "q_size", "q_yaw", "q_vel", "q_size_vel", "q_yaw_vel",
            "r_pos", "r_size", "r_yaw",
            "p0_pos", "p0_size", "p0_yaw", "p0_vel", "p0_size_vel", "p0_yaw_vel",
        ):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Track:
    """One tracked object and its filter state."""

    track_id: int
    class_id: int
    state: np.ndarray  # (16,)
    covariance: np.ndarray  # (16, 16)
    status: TrackStatus = TrackStatus.TENTATIVE
    score: float = 1.0
    embedding: np.ndarray | None = None
    hits: int = 1
    age: int = 1
    time_since_update: int = 0

    @property
    def box(self) -> Box3D:
        return box_from_state(self.state)


# ---------------------------------------------------------------------------
# Kalman filter


def transition_matrix(dt: float) -> np.ndarray:
    """Constant-velocity transition: identity plus dt coupling to rates."""
    F = np.eye(STATE_DIM)
    F[:MEAS_DIM, MEAS_DIM:] = dt * np.eye(MEAS_DIM)
    return F


def process_noise_matrix(config: TrackerConfig) -> np.ndarray:
    d = np.array(
        [config.q_pos] * 3 + [config.q_size] * 3 + [config.q_yaw] * 2
        + [config.q_vel] * 3 + [config.q_size_vel] * 3 + [config.q_yaw_vel] * 2
    )
    return np.diag(d * d)


def measurement_noise_matrix(config: TrackerConfig) -> np.ndarray:
    d = np.array([config.r_pos] * 3 + [config.r_size] * 3 + [config.r_yaw] * 2)
    return np.diag(d * d)


def initial_covariance(config: TrackerConfig) -> np.ndarray:
    d = np.array(
        [config.p0_pos] * 3 + [config.p0_size] * 3 + [config.p0_yaw] * 2
        + [config.p0_vel] * 3 + [config.p0_size_vel] * 3 + [config.p0_yaw_vel] * 2
    )
    return np.diag(d * d)


def measurement_from_box(box: Box3D) -> np.ndarray:
    """Project a box to the 8-vector [x, y, z, l, w, h, sin, cos]."""
    return np.array(
        [box.cx, box.cy, box.cz, box.l, box.w, box.h,
         math.sin(box.yaw), math.cos(box.yaw)]
    )


def box_from_state(state: np.ndarray) -> Box3D:
    """Box view of a filter state; yaw from atan2(sin, cos)."""
    s = np.asarray(state, dtype=float)
    return Box3D(
        cx=float(s[0]),
        cy=float(s[1]),
        cz=float(s[2]),
        l=max(float(s[3]), _MIN_BOX_SIZE),
        w=max(float(s[4]), _MIN_BOX_SIZE),
        h=max(float(s[5]), _MIN_BOX_SIZE),
        yaw=math.atan2(float(s[6]), float(s[7])),
    )


def init_track_state(box: Box3D) -> np.ndarray:
    """Initial 16-dim state: the measured components with zero rates."""
    state = np.zeros(STATE_DIM)
    state[:MEAS_DIM] = measurement_from_box(box)
    return state


@functools.lru_cache(maxsize=32)
def _filter_matrices(
    config: TrackerConfig,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Shared read-only (F, Q, R, P0) for a config; never mutate these."""
    mats = (
        transition_matrix(config.dt),
        process_noise_matrix(config),
        measurement_noise_matrix(config),
        initial_covariance(config),
    )
    for m in mats:
        m.setflags(write=False)
    return mats


def _boxes_array_from_states(states: np.ndarray) -> np.ndarray:
    """(T, 16) states -> (T, 7) box rows [cx, cy, cz, l, w, h, yaw]."""
    out = np.empty((states.shape[0], 7))
    out[:, :3] = states[:, :3]
    out[:, 3:6] = np.maximum(states[:, 3:6], _MIN_BOX_SIZE)
    out[:, 6] = np.arctan2(states[:, 6], states[:, 7])
    return out


def _predict_arrays(
    states: np.ndarray, covs: np.ndarray, F: np.ndarray, Q: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    states = states @ F.T
    covs = F @ covs @ F.T + Q
    return states, covs


def _update_arrays(
    states: np.ndarray, covs: np.ndarray, zs: np.ndarray, R: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batched measurement update (Joseph form) with heading renorm."""
    S = covs[:, :MEAS_DIM, :MEAS_DIM] + R
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("innovation covariance is not positive definite") from exc
    PHt = covs[:, :, :MEAS_DIM]  # (k, 16, 8)
    gain = np.linalg.solve(S, PHt.transpose(0, 2, 1)).transpose(0, 2, 1)  # (k, 16, 8)
    innovation = zs - states[:, :MEAS_DIM]
    states = states + (gain @ innovation[..., None])[..., 0]

    ikh = np.broadcast_to(np.eye(STATE_DIM), covs.shape).copy()
    ikh[:, :, :MEAS_DIM] -= gain
    covs = ikh @ covs @ ikh.transpose(0, 2, 1) + gain @ R @ gain.transpose(0, 2, 1)
    covs = 0.5 * (covs + covs.transpose(0, 2, 1))

    norm = np.hypot(states[:, 6], states[:, 7])
    safe = norm > 1e-9
    states[safe, 6] /= norm[safe]
    states[safe, 7] /= norm[safe]
    return states, covs


def kf_predict(
    track: Track, dt: float, process_noise: np.ndarray | None = None
) -> Track:
    """Return a copy of the track advanced by one constant-velocity step."""
    Q = process_noise_matrix(TrackerConfig()) if process_noise is None else process_noise
    states, covs = _predict_arrays(
        track.state[None, :], track.covariance[None, :, :], transition_matrix(dt), Q
    )
    return dataclass_replace_track(
        track,
        state=states[0],
        covariance=covs[0],
        age=track.age + 1,
        time_since_update=track.time_since_update + 1,
    )


def kf_update(
    track: Track, measurement: np.ndarray, measurement_noise: np.ndarray | None = None
) -> Track:
    """Return a copy of the track fused with an 8-dim measurement."""
    z = np.asarray(measurement, dtype=float).reshape(-1)
    if z.shape != (MEAS_DIM,):
        raise ValueError(f"measurement must have {MEAS_DIM} entries, got {z.shape}")
    R = measurement_noise_matrix(TrackerConfig()) if measurement_noise is None else measurement_noise
    states, covs = _update_arrays(
        track.state[None, :], track.covariance[None, :, :], z[None, :], R
    )
    return dataclass_replace_track(
        track,
        state=states[0],
        covariance=covs[0],
        hits=track.hits + 1,
        time_since_update=0,
    )


def dataclass_replace_track(track: Track, **changes) -> Track:
    """Shallow-copy a track with replaced fields."""
    kwargs = dict(
        track_id=track.track_id,
        class_id=track.class_id,
        state=track.state,
        covariance=track.covariance,
        status=track.status,
        score=track.score,
        embedding=track.embedding,
        hits=track.hits,
        age=track.age,
        time_since_update=track.time_since_update,
    )
    kwargs.update(changes)
    return Track(**kwargs)


# ---------------------------------------------------------------------------
# Assignment


@dataclass(frozen=True)
class Assignment:
    """Result of a gated rectangular assignment."""

    pairs: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]


def assign(cost: np.ndarray, gate: float = math.inf) -> Assignment:
    """Maximum-cardinality, minimum-cost matching on a gated cost matrix.

    Entries that are non-finite or exceed ``gate`` are infeasible.  Among
    all matchings of maximum cardinality over feasible entries, one of
    minimum total cost is returned (infeasible entries are padded with a
    constant large enough that dropping a feasible pair never pays).
    """
    C = np.asarray(cost, dtype=float)
    if C.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {C.shape}")
    n, m = C.shape
    all_rows = list(range(n))
    all_cols = list(range(m))
    if n == 0 or m == 0:
        return Assignment([], all_rows, all_cols)
    feasible = np.isfinite(C) & (C <= gate)
    if not feasible.any():
        return Assignment([], all_rows, all_cols)
    worst = float(C[feasible].max())
    best = min(0.0, float(C[feasible].min()))
    big = (worst - best + 1.0) * (min(n, m) + 1)
    padded = np.where(feasible, C, big)
    rows, cols = linear_sum_assignment(padded)
    pairs = sorted(
        (int(r), int(c)) for r, c in zip(rows, cols) if feasible[r, c]
    )
    matched_r = {r for r, _ in pairs}
    matched_c = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in all_rows if r not in matched_r],
        unmatched_cols=[c for c in all_cols if c not in matched_c],
    )


def appearance_cost(
    track: Track, det: Detection, tau_emb: float = 0.6
) -> float:
    """Half cosine distance between track and detection embeddings, in [0, 1].

    Appearance is only consulted for confident detections: when the
    detection's score is at or below ``tau_emb``, or either side lacks an
    embedding, the pair is infeasible and ``math.inf`` is returned.
    """
    if track.embedding is None or det.embedding is None:
        return math.inf
    if det.score <= tau_emb:
        return math.inf
    d = _unit(det.embedding)
    cos_dist = float(np.clip(1.0 - float(track.embedding @ d), 0.0, 2.0))
    return 0.5 * cos_dist


def diou_cost(a: Box3D, b: Box3D) -> float:
    """Distance-IoU association cost between two boxes, in [0, 2)."""
    return geometry.diou_cost(a, b)


# ---------------------------------------------------------------------------
# Tracker


class Tracker:
    """Single-class online tracker; see the module docstring for the flow."""

    def __init__(self, config: TrackerConfig | None = None, id_source=None):
        self.config = config or TrackerConfig()
        self.tracks: list[Track] = []
        self.class_id: int | None = None
        self._ids = id_source if id_source is not None else itertools.count(1)
        self._frame_index = 0
        self._F, self._Q, self._R, self._P0 = _filter_matrices(self.config)

    # -- costs ------------------------------------------------------------

    def _geometry_cost(
        self, track_boxes: np.ndarray, det_boxes: np.ndarray
    ) -> np.ndarray:
        cfg = self.config
        if cfg.cost_mode == "diou":
            raw = geometry.diou_cost_matrix(track_boxes, det_boxes)
            gated = raw > cfg.diou_gate
            raw *= 0.5
            raw[gated] = np.inf
            return raw
        raw = 1.0 - geometry.iou_3d_matrix(track_boxes, det_boxes)
        raw[raw > cfg.iou_gate] = np.inf
        return raw

    def _appearance_cost(
        self, tracks: list[Track], dets: list[Detection], det_embs: list
    ) -> np.ndarray:
        cfg = self.config
        rows = [i for i, t in enumerate(tracks) if t.embedding is not None]
        cols = [
            j
            for j, d in enumerate(dets)
            if det_embs[j] is not None and d.score > cfg.tau_emb
        ]
        if not rows or not cols:
            return np.full((len(tracks), len(dets)), np.inf)
        dim = tracks[rows[0]].embedding.shape[0]
        te = np.empty((len(rows), dim))
        for r, i in enumerate(rows):
            te[r] = tracks[i].embedding
        de = np.empty((len(cols), dim))
        for r, j in enumerate(cols):
            de[r] = det_embs[j]
        half = 0.5 * np.clip(1.0 - te @ de.T, 0.0, 2.0)
        half[half > cfg.app_gate] = np.inf
        if len(rows) == len(tracks) and len(cols) == len(dets):
            return half
        cost = np.full((len(tracks), len(dets)), np.inf)
        cost[np.ix_(rows, cols)] = half
        return cost

    # -- lifecycle --------------------------------------------------------

    def _predict_all(self) -> np.ndarray | None:
        """Advance every track one step; returns their stacked (k, 16) states."""
        if not self.tracks:
            return None
        k = len(self.tracks)
        states = np.empty((k, STATE_DIM))
        covs = np.empty((k, STATE_DIM, STATE_DIM))
        for i, t in enumerate(self.tracks):
            states[i] = t.state
            covs[i] = t.covariance
        states, covs = _predict_arrays(states, covs, self._F, self._Q)
        for i, t in enumerate(self.tracks):
            t.state = states[i]
            t.covariance = covs[i]
            t.age += 1
            t.time_since_update += 1
        return states

    def _update_matched(
        self,
        matches: list[tuple[Track, int]],
        dets: list[Detection],
        det_embs: list,
        det_boxes: np.ndarray,
    ) -> None:
        if not matches:
            return
        cfg = self.config
        k = len(matches)
        states = np.empty((k, STATE_DIM))
        covs = np.empty((k, STATE_DIM, STATE_DIM))
        for i, (t, _) in enumerate(matches):
            states[i] = t.state
            covs[i] = t.covariance
        cols = [j for _, j in matches]
        boxes = det_boxes[cols]
        zs = np.empty((len(matches), MEAS_DIM))
        zs[:, :6] = boxes[:, :6]
        zs[:, 6] = np.sin(boxes[:, 6])
        zs[:, 7] = np.cos(boxes[:, 6])
        states, covs = _update_arrays(states, covs, zs, self._R)

        # EMA-smooth embeddings for confident matches, in one batch.
        ema = [
            i
            for i, (t, j) in enumerate(matches)
            if det_embs[j] is not None
            and dets[j].score > cfg.tau_emb
            and t.embedding is not None
        ]
        if ema:
            dim = matches[ema[0]][0].embedding.shape[0]
            te = np.empty((len(ema), dim))
            de = np.empty((len(ema), dim))
            for r, i in enumerate(ema):
                te[r] = matches[i][0].embedding
                de[r] = det_embs[matches[i][1]]
            mixed = cfg.ema_momentum * te + (1.0 - cfg.ema_momentum) * de
            norms = np.linalg.norm(mixed, axis=1)
            keep = norms > 1e-12
            mixed[keep] /= norms[keep, None]
            for row, i in enumerate(ema):
                if keep[row]:
                    matches[i][0].embedding = mixed[row]

        for i, (track, j) in enumerate(matches):
            det = dets[j]
            track.state = states[i]
            track.covariance = covs[i]
            track.hits += 1
            track.time_since_update = 0
            track.score = det.score
            if (
                track.embedding is None
                and det_embs[j] is not None
                and det.score > cfg.tau_emb
            ):
                track.embedding = det_embs[j]
            if track.status is TrackStatus.TENTATIVE:
                if track.hits >= cfg.min_hits:
                    track.status = TrackStatus.ACTIVE
            else:
                track.status = TrackStatus.ACTIVE

    def _spawn(self, det: Detection, emb) -> Track:
        status = (
            TrackStatus.ACTIVE
            if self._frame_index == 0 or self.config.min_hits <= 1
            else TrackStatus.TENTATIVE
        )
        return Track(
            track_id=next(self._ids),
            class_id=det.class_id,
            state=init_track_state(det.box),
            covariance=self._P0.copy(),
            status=status,
            score=det.score,
            embedding=emb if det.score > self.config.tau_emb else None,
        )

    # -- main step ---------------------------------------------------------

    def step(self, detections: Sequence[Detection]) -> list[Track]:
        """Advance one frame; returns the active tracks updated this frame."""
        cfg = self.config
        dets = list(detections)
        classes = {d.class_id for d in dets}
        if len(classes) > 1:
            raise ValueError(
                f"mixed-class detections {sorted(classes)}; use MultiClassTracker"
            )
        if classes:
            (cid,) = classes
            if self.class_id is None:
                self.class_id = cid
            elif cid != self.class_id:
                raise ValueError(
                    f"detections of class {cid} fed to a class-{self.class_id} tracker"
                )

        track_states = self._predict_all()

        det_embs: list = [None] * len(dets)
        emb_cols = [j for j, d in enumerate(dets) if d.embedding is not None]
        if emb_cols:
            stacked = np.stack(
                [np.asarray(dets[j].embedding, dtype=float) for j in emb_cols]
            )
            norms = np.linalg.norm(stacked, axis=1)
            if np.any(norms < 1e-12):
                raise ValueError("cannot normalize a (near-)zero embedding")
            stacked /= norms[:, None]
            for row, j in enumerate(emb_cols):
                det_embs[j] = stacked[row]

        high = [j for j, d in enumerate(dets) if d.score >= cfg.tau_high]
        low = [j for j, d in enumerate(dets) if cfg.tau_low <= d.score < cfg.tau_high]

        track_boxes = (
            _boxes_array_from_states(track_states)
            if track_states is not None
            else np.zeros((0, 7))
        )
        if dets:
            det_boxes = np.empty((len(dets), 7))
            for i, d in enumerate(dets):
                bx = d.box
                det_boxes[i] = (bx.cx, bx.cy, bx.cz, bx.l, bx.w, bx.h, bx.yaw)
        else:
            det_boxes = np.zeros((0, 7))

        # All stages slice these two gated matrices; computing them once per
        # frame is what keeps the step inside its throughput budget.
        geo_full = self._geometry_cost(track_boxes, det_boxes)
        if cfg.use_appearance and geo_full.size:
            app_full = self._appearance_cost(self.tracks, dets, det_embs)
            fused_full = np.minimum(geo_full, app_full)
        else:
            fused_full = geo_full

        primary = [i for i, t in enumerate(self.tracks)
                   if t.status in (TrackStatus.ACTIVE, TrackStatus.LOST)]
        tentative = [i for i, t in enumerate(self.tracks)
                     if t.status is TrackStatus.TENTATIVE]

        matches: list[tuple[Track, int]] = []

        # Stage 1: confirmed tracks vs high-score detections, fused cost.
        result = assign(_submatrix(fused_full, primary, high))
        matches += [(self.tracks[primary[r]], high[c]) for r, c in result.pairs]
        left_primary = [primary[r] for r in result.unmatched_rows]
        left_high = [high[c] for c in result.unmatched_cols]

        # Stage 2: still-active leftovers vs low-score detections, geometry.
        actives = [i for i in left_primary
                   if self.tracks[i].status is TrackStatus.ACTIVE]
        result = assign(_submatrix(geo_full, actives, low))
        matches += [(self.tracks[actives[r]], low[c]) for r, c in result.pairs]
        matched_stage2 = {actives[r] for r, _ in result.pairs}
        left_primary = [i for i in left_primary if i not in matched_stage2]

        # Stage 3: tentative tracks vs leftover high-score detections.
        result = assign(_submatrix(fused_full, tentative, left_high))
        matches += [(self.tracks[tentative[r]], left_high[c]) for r, c in result.pairs]
        left_tentative = [tentative[r] for r in result.unmatched_rows]
        left_high = [left_high[c] for c in result.unmatched_cols]

        self._update_matched(matches, dets, det_embs, det_boxes)

        # Unmatched housekeeping: drop stale tentatives, shelve actives.
        drop = set()
        for i in left_tentative:
            drop.add(i)
        for i in left_primary:
            track = self.tracks[i]
            if track.status is TrackStatus.ACTIVE:
                track.status = TrackStatus.LOST
            if track.time_since_update > cfg.max_age:
                drop.add(i)
        if drop:
            self.tracks = [t for i, t in enumerate(self.tracks) if i not in drop]

        for j in left_high:
            self.tracks.append(self._spawn(dets[j], det_embs[j]))

        self._frame_index += 1
        return [
            t
            for t in self.tracks
            if t.status is TrackStatus.ACTIVE and t.time_since_update == 0
        ]


def _unit(vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ValueError("cannot normalize a (near-)zero embedding")
    return v / norm


def _submatrix(matrix: np.ndarray, rows: list[int], cols: list[int]) -> np.ndarray:
    if len(rows) == matrix.shape[0] and len(cols) == matrix.shape[1]:
        return matrix
    return matrix[np.ix_(rows, cols)]


class MultiClassTracker:
    """Routes detections to one tracker per class; ids stay globally unique."""

    def __init__(self, config: TrackerConfig | None = None):
        self.config = config or TrackerConfig()
        self._ids = itertools.count(1)
        self._trackers: dict[int, Tracker] = {}

    @property
    def trackers(self) -> dict[int, Tracker]:
        return self._trackers

    def step(self, detections: Sequence[Detection]) -> list[Track]:
        """Advance every class tracker one frame; returns all emissions."""
        by_class: dict[int, list[Detection]] = {}
        for det in detections:
            by_class.setdefault(det.class_id, []).append(det)
        emitted: list[Track] = []
        for cid in sorted(set(self._trackers) | set(by_class)):
            if cid not in self._trackers:
                self._trackers[cid] = Tracker(self.config, id_source=self._ids)
            emitted.extend(self._trackers[cid].step(by_class.get(cid, [])))
        return emitted


def tracker_step(
    tracks: Sequence[Track],
    detections: Sequence[Detection],
    config: TrackerConfig | None = None,
    id_source=None,
) -> tuple[list[Track], list[Track]]:
    """One association frame over an explicit track list.

    Functional form of :meth:`Tracker.step` for callers that own the track
    list: predicts all tracks, associates them with the detections, applies
    the measurement updates and lifecycle rules, and returns
    ``(updated_tracks, emitted_tracks)``.  The input ``Track`` objects are
    left untouched.

    New ids continue from one past the largest id present; pass
    ``id_source`` (a shared iterator) to guarantee ids are never reused
    across calls even after the highest-numbered track has been dropped.
    The stateful :class:`Tracker` gives that guarantee automatically.
    """
    tracker = Tracker(config or TrackerConfig(), id_source=id_source)
    if id_source is None:
        start = 1 + max((t.track_id for t in tracks), default=0)
        tracker._ids = itertools.count(start)
    tracker.tracks = [
        Track(t.track_id, t.class_id, t.state, t.covariance, t.status,
              t.score, t.embedding, t.hits, t.age, t.time_since_update)
        for t in tracks
    ]
    tracker._frame_index = 0 if not tracks else 1
    for t in tracker.tracks:
        if tracker.class_id is None:
            tracker.class_id = t.class_id
    emitted = tracker.step(detections)
    return tracker.tracks, emitted
