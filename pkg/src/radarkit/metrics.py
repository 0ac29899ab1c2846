"""Evaluation: average precision for detections, CLEAR + identity metrics
for tracks.

AP uses 40-point interpolated precision: the mean over recall levels
{1/40, ..., 40/40} of the best precision achieved at or beyond each
level.  Detections match greedily in score order to the unmatched ground
truth with the highest IoU, counting a true positive at or above the IoU
threshold.  Classes with no ground truth anywhere are absent from the
result rather than scored zero.

Tracking metrics accumulate frame by frame.  Matching prefers each ground
truth's previous hypothesis when it is still within the gate (so a stable
pairing never switches spuriously), then resolves the rest with a
minimum-cost assignment on 1 - IoU.  MOTA counts misses, false positives,
and identity switches against total ground truth; IDF1 comes from a
global maximum-overlap matching between ground-truth and hypothesis
identities over the whole sequence.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from radarkit import geometry
from radarkit.geometry import iou_3d, iou_bev  # re-exported: metric primitives
from radarkit.grid import Box3D
from radarkit.tracker import assign
from radarkit.types import Detection, LabelObject, TrackRecord

__all__ = [
    "DEFAULT_IOU_THRESHOLD",
    "MotAccumulator",
    "ap_at_iou",
    "evaluate_detections",
    "evaluate_tracking",
    "idf1",
    "iou_3d",
    "iou_bev",
    "mot_update",
    "mota",
]

DEFAULT_IOU_THRESHOLD = 0.3
RECALL_POINTS = 40


def _iou_matrix(boxes_a, boxes_b, mode: str) -> np.ndarray:
    if mode == "bev":
        return geometry.iou_bev_matrix(boxes_a, boxes_b)
    if mode == "3d":
        return geometry.iou_3d_matrix(boxes_a, boxes_b)
    raise ValueError(f"unknown IoU mode {mode!r}")


# ---------------------------------------------------------------------------
# Detection AP


def _interpolated_ap(scores: np.ndarray, flags: np.ndarray, num_gt: int) -> float:
    """40-point interpolated AP from per-detection (score, is_tp) records."""
    if num_gt <= 0:
        raise ValueError("AP needs at least one ground-truth object")
    if scores.size == 0:
        return 0.0
    order = np.argsort(-scores, kind="stable")
    tp = flags[order].astype(float)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(1.0 - tp)
    precision = tp_cum / (tp_cum + fp_cum)
    recall = tp_cum / float(num_gt)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    total = 0.0
    for level in np.arange(1, RECALL_POINTS + 1) / float(RECALL_POINTS):
        idx = int(np.searchsorted(recall, level - 1e-12, side="left"))
        if idx < len(envelope):
            total += float(envelope[idx])
    return total / RECALL_POINTS


def _match_frame(
    dets: list[Detection], gts: list[LabelObject], mode: str, threshold: float
) -> list[tuple[float, bool]]:
    """Greedy score-descending matching; returns (score, is_tp) records."""
    records = []
    order = sorted(range(len(dets)), key=lambda i: -dets[i].score)
    taken = [False] * len(gts)
    iou = (
        _iou_matrix([d.box for d in dets], [g.box for g in gts], mode)
        if dets and gts
        else np.zeros((len(dets), len(gts)))
    )
    for i in order:
        best_j = -1
        best_iou = 0.0
        for j in range(len(gts)):
            if not taken[j] and iou[i, j] > best_iou:
                best_iou = float(iou[i, j])
                best_j = j
        if best_j >= 0 and best_iou >= threshold:
            taken[best_j] = True
            records.append((dets[i].score, True))
        else:
            records.append((dets[i].score, False))
    return records


def ap_at_iou(
    detections: Mapping[int, Sequence[Detection]],
    labels: Mapping[int, Sequence[LabelObject]],
    iou_kind: str = "3d",
    threshold: float = DEFAULT_IOU_THRESHOLD,
) -> dict[int, float]:
    """Per-class interpolated AP over frame-keyed detections and labels.

    Only classes with ground truth appear in the result.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    classes = sorted({obj.class_id for objs in labels.values() for obj in objs})
    result: dict[int, float] = {}
    frames = sorted(set(detections) | set(labels))
    for cid in classes:
        num_gt = 0
        scores: list[float] = []
        flags: list[bool] = []
        for frame in frames:
            gts = [g for g in labels.get(frame, []) if g.class_id == cid]
            dets = [d for d in detections.get(frame, []) if d.class_id == cid]
            num_gt += len(gts)
            for score, is_tp in _match_frame(dets, gts, iou_kind, threshold):
                scores.append(score)
                flags.append(is_tp)
        if num_gt == 0:
            continue
        result[cid] = _interpolated_ap(np.array(scores), np.array(flags), num_gt)
    return result


def evaluate_detections(
    detections: Mapping[int, Sequence[Detection]],
    labels: Mapping[int, Sequence[LabelObject]],
    iou_kind: str = "3d",
    threshold: float = DEFAULT_IOU_THRESHOLD,
) -> dict:
    """AP report: per-class AP, their mean, and the ground-truth counts."""
    ap = ap_at_iou(detections, labels, iou_kind, threshold)
    gt_counts = Counter(
        obj.class_id for objs in labels.values() for obj in objs
    )
    return {
        "iou_kind": iou_kind,
        "threshold": threshold,
        "ap": {int(cid): float(v) for cid, v in sorted(ap.items())},
        "mean_ap": float(np.mean(list(ap.values()))) if ap else None,
        "num_gt": {int(cid): int(gt_counts[cid]) for cid in sorted(gt_counts)},
        "num_frames": len(set(detections) | set(labels)),
    }


# ---------------------------------------------------------------------------
# CLEAR + identity tracking metrics


@dataclass
class MotAccumulator:
    """Frame-by-frame CLEAR accumulator with identity bookkeeping."""

    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    iou_mode: str = "bev"

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError("iou_threshold must lie in (0, 1]")
        self.num_frames = 0
        self.num_gt = 0
        self.num_hyp = 0
        self.matches = 0
        self.false_positives = 0
        self.misses = 0
        self.id_switches = 0
        self.iou_sum = 0.0
        self._last_match: dict[int, int] = {}
        self._gt_frames: Counter = Counter()
        self._hyp_frames: Counter = Counter()
        self._cooccur: Counter = Counter()

    def update(
        self,
        gt: Sequence[tuple[int, Box3D]],
        hyp: Sequence[tuple[int, Box3D]],
    ) -> None:
        """Accumulate one frame of (id, box) ground truth and hypotheses."""
        gt_ids = [int(i) for i, _ in gt]
        hyp_ids = [int(i) for i, _ in hyp]
        if len(set(gt_ids)) != len(gt_ids):
            raise ValueError("duplicate ground-truth ids in frame")
        if len(set(hyp_ids)) != len(hyp_ids):
            raise ValueError("duplicate hypothesis ids in frame")

        self.num_frames += 1
        self.num_gt += len(gt)
        self.num_hyp += len(hyp)
        for g in gt_ids:
            self._gt_frames[g] += 1
        for h in hyp_ids:
            self._hyp_frames[h] += 1

        iou = (
            _iou_matrix([b for _, b in gt], [b for _, b in hyp], self.iou_mode)
            if gt and hyp
            else np.zeros((len(gt), len(hyp)))
        )
        valid = iou >= self.iou_threshold
        for gi, hi in np.argwhere(valid):
            self._cooccur[(gt_ids[gi], hyp_ids[hi])] += 1

        # Keep last frame's pairing whenever it is still within the gate.
        hyp_index = {h: j for j, h in enumerate(hyp_ids)}
        gt_taken = [False] * len(gt)
        hyp_taken = [False] * len(hyp)
        pairs: list[tuple[int, int]] = []
        for i, g in enumerate(gt_ids):
            j = hyp_index.get(self._last_match.get(g, -1))
            if j is not None and not hyp_taken[j] and valid[i, j]:
                pairs.append((i, j))
                gt_taken[i] = True
                hyp_taken[j] = True

        free_g = [i for i in range(len(gt)) if not gt_taken[i]]
        free_h = [j for j in range(len(hyp)) if not hyp_taken[j]]
        if free_g and free_h:
            sub = iou[np.ix_(free_g, free_h)]
            cost = np.where(sub >= self.iou_threshold, 1.0 - sub, np.inf)
            for r, c in assign(cost).pairs:
                pairs.append((free_g[r], free_h[c]))

        for i, j in pairs:
            g, h = gt_ids[i], hyp_ids[j]
            previous = self._last_match.get(g)
            if previous is not None and previous != h:
                self.id_switches += 1
            self._last_match[g] = h
            self.matches += 1
            self.iou_sum += float(iou[i, j])

        self.false_positives += len(hyp) - len(pairs)
        self.misses += len(gt) - len(pairs)

    # -- summary values ----------------------------------------------------

    @property
    def mota(self) -> float:
        if self.num_gt == 0:
            raise ValueError("MOTA is undefined without ground truth")
        return 1.0 - (self.misses + self.false_positives + self.id_switches) / self.num_gt

    @property
    def motp(self) -> float | None:
        """Mean IoU over matched pairs, None when nothing matched."""
        return self.iou_sum / self.matches if self.matches else None

    def identity_counts(self) -> tuple[int, int, int]:
        """(IDTP, IDFP, IDFN) from the global identity matching."""
        gt_ids = {g: i for i, g in enumerate(sorted(self._gt_frames))}
        hyp_ids = {h: j for j, h in enumerate(sorted(self._hyp_frames))}
        idtp = 0
        if gt_ids and hyp_ids:
            weights = np.zeros((len(gt_ids), len(hyp_ids)))
            for (g, h), count in self._cooccur.items():
                weights[gt_ids[g], hyp_ids[h]] = count
            rows, cols = linear_sum_assignment(weights, maximize=True)
            idtp = int(weights[rows, cols].sum())
        total_gt = sum(self._gt_frames.values())
        total_hyp = sum(self._hyp_frames.values())
        return idtp, total_hyp - idtp, total_gt - idtp

    @property
    def idf1(self) -> float:
        if self.num_gt == 0:
            raise ValueError("IDF1 is undefined without ground truth")
        idtp, idfp, idfn = self.identity_counts()
        denom = 2 * idtp + idfp + idfn
        return 2.0 * idtp / denom if denom else 0.0

    def summary(self) -> dict:
        return {
            "mota": self.mota,
            "motp": self.motp,
            "idf1": self.idf1,
            "id_switches": self.id_switches,
            "false_positives": self.false_positives,
            "misses": self.misses,
            "matches": self.matches,
            "num_gt": self.num_gt,
            "num_hyp": self.num_hyp,
            "num_frames": self.num_frames,
        }


def mot_update(
    acc: MotAccumulator,
    gt: Sequence[tuple[int, Box3D]],
    hyp: Sequence[tuple[int, Box3D]],
) -> None:
    """Accumulate one frame; functional alias for ``MotAccumulator.update``."""
    acc.update(gt, hyp)


def mota(acc: MotAccumulator) -> float:
    """1 - (FP + FN + IDSW) / GT; functional form of ``MotAccumulator.mota``."""
    return acc.mota


def idf1(acc: MotAccumulator) -> float:
    """Global identity F1; functional form of ``MotAccumulator.idf1``."""
    return acc.idf1


def evaluate_tracking(
    labels: Mapping[int, Sequence[LabelObject]],
    tracks: Mapping[int, Sequence[TrackRecord]],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    iou_mode: str = "bev",
) -> dict:
    """Per-class CLEAR/IDF1 report over frame-keyed labels and track rows.

    Classes are evaluated independently (an id can only ever match within
    its class); the combined row sums the per-class error counts.
    """
    classes = sorted(
        {obj.class_id for objs in labels.values() for obj in objs}
        | {row.class_id for rows in tracks.values() for row in rows}
    )
    frames = sorted(set(labels) | set(tracks))
    accs = {cid: MotAccumulator(iou_threshold, iou_mode) for cid in classes}
    for frame in frames:
        gt_rows = labels.get(frame, [])
        hyp_rows = tracks.get(frame, [])
        for cid in classes:
            accs[cid].update(
                [(o.track_id, o.box) for o in gt_rows if o.class_id == cid],
                [(r.track_id, r.box) for r in hyp_rows if r.class_id == cid],
            )

    total_gt = sum(a.num_gt for a in accs.values())
    if total_gt == 0:
        raise ValueError("tracking evaluation needs ground truth")
    errors = sum(
        a.misses + a.false_positives + a.id_switches for a in accs.values()
    )
    identity = [a.identity_counts() for a in accs.values()]
    idtp = sum(t for t, _, _ in identity)
    idfp = sum(f for _, f, _ in identity)
    idfn = sum(f for _, _, f in identity)
    matches = sum(a.matches for a in accs.values())
    iou_sum = sum(a.iou_sum for a in accs.values())
    per_class = {
        int(cid): accs[cid].summary() for cid in classes if accs[cid].num_gt > 0
    }
    return {
        "iou_mode": iou_mode,
        "iou_threshold": iou_threshold,
        "mota": 1.0 - errors / total_gt,
        "motp": iou_sum / matches if matches else None,
        "idf1": 2.0 * idtp / (2 * idtp + idfp + idfn) if (idtp or idfp or idfn) else 0.0,
        "id_switches": sum(a.id_switches for a in accs.values()),
        "false_positives": sum(a.false_positives for a in accs.values()),
        "misses": sum(a.misses for a in accs.values()),
        "num_gt": total_gt,
        "num_frames": len(frames),
        "per_class": per_class,
    }
