"""Joint-detection-and-embedding losses: triplet mining and combination.

Embeddings are unit vectors; every entry point normalizes its inputs, so
all distances are invariant to positive rescaling of the raw vectors.
The appearance distance is cosine distance ``1 - <a, b>`` in [0, 2]; a
Euclidean variant is available behind the ``metric`` switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_MARGIN = 0.3
_METRICS = ("cosine", "l2")


def normalize_embedding(vector) -> np.ndarray:
    """Return the unit-norm float64 copy of a vector."""
    v = np.asarray(vector, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise ValueError("embedding must be non-empty")
    if not np.isfinite(v).all():
        raise ValueError("embedding must be finite")
    norm = float(np.linalg.norm(v))
    if norm < 1e-12:
        raise ValueError("cannot normalize a (near-)zero embedding")
    return v / norm


def _normalize_rows(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2 or m.shape[1] == 0:
        raise ValueError(f"expected (k, dim) embeddings, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("embeddings must be finite")
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if (norms < 1e-12).any():
        raise ValueError("cannot normalize a (near-)zero embedding")
    return m / norms


def cosine_distance(a, b) -> float:
    """1 - cosine similarity of two vectors, clamped to [0, 2]."""
    ua = normalize_embedding(a)
    ub = normalize_embedding(b)
    return float(np.clip(1.0 - ua @ ub, 0.0, 2.0))


def cosine_distance_matrix(a, b) -> np.ndarray:
    """Pairwise cosine distances between two embedding stacks."""
    ua = _normalize_rows(a)
    ub = _normalize_rows(b)
    return np.clip(1.0 - ua @ ub.T, 0.0, 2.0)


def l2_distance(a, b) -> float:
    """Euclidean distance between the normalized vectors."""
    return float(np.linalg.norm(normalize_embedding(a) - normalize_embedding(b)))


def _distances(anchor: np.ndarray, matrix: np.ndarray, metric: str) -> np.ndarray:
    if metric == "cosine":
        return np.clip(1.0 - matrix @ anchor, 0.0, 2.0)
    return np.linalg.norm(matrix - anchor, axis=1)


def hard_negative(anchor, negatives, metric: str = "cosine") -> int:
    """Index of the hardest (closest) negative to the anchor.

    Ties go to the lowest index.
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    ua = normalize_embedding(anchor)
    um = _normalize_rows(negatives)
    return int(np.argmin(_distances(ua, um, metric)))


@dataclass(frozen=True)
class TripletBatch:
    """One anchor with its positive and candidate negatives.

    Vectors are normalized on construction; ``margin`` must be
    non-negative.
    """

    anchor: np.ndarray
    positive: np.ndarray
    negatives: np.ndarray
    margin: float = DEFAULT_MARGIN

    def __post_init__(self):
        anchor = normalize_embedding(self.anchor)
        positive = normalize_embedding(self.positive)
        negatives = _normalize_rows(self.negatives)
        if positive.shape != anchor.shape or negatives.shape[1] != anchor.shape[0]:
            raise ValueError("anchor, positive, and negatives dimensions differ")
        if negatives.shape[0] == 0:
            raise ValueError("a triplet batch needs at least one negative")
        if self.margin < 0.0:
            raise ValueError(f"margin must be non-negative, got {self.margin}")
        object.__setattr__(self, "anchor", anchor)
        object.__setattr__(self, "positive", positive)
        object.__setattr__(self, "negatives", negatives)
        object.__setattr__(self, "margin", float(self.margin))


def triplet_loss(batch: TripletBatch, metric: str = "cosine") -> float:
    """Hinge loss against the hardest negative.

    max(0, D(anchor, positive) - min_k D(anchor, negative_k) + margin).
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    d_pos = float(_distances(batch.anchor, batch.positive[None, :], metric)[0])
    d_neg = float(_distances(batch.anchor, batch.negatives, metric).min())
    return max(0.0, d_pos - d_neg + batch.margin)


def combined_loss(
    l_class: float,
    l_reg: float,
    l_emb: float,
    alpha: float = 1.0,
    beta: float = 1.0,
    gamma: float = 1.0,
) -> float:
    """Weighted sum of the classification, regression, and embedding terms."""
    terms = (("l_class", l_class), ("l_reg", l_reg), ("l_emb", l_emb))
    coefficients = (("alpha", alpha), ("beta", beta), ("gamma", gamma))
    for name, value in terms + coefficients:
        if not math.isfinite(value) or value < 0.0:
            raise ValueError(f"{name} must be finite and non-negative, got {value}")
    return alpha * l_class + beta * l_reg + gamma * l_emb


FrameEmbeddings = Sequence[tuple[int, np.ndarray]]


def sample_triplets(
    frame_a: FrameEmbeddings,
    frame_b: FrameEmbeddings,
    t_a: int,
    t_b: int,
    max_gap: int = 5,
    margin: float = DEFAULT_MARGIN,
    cross_frame_negatives: bool = True,
) -> list[TripletBatch]:
    """Mine cross-frame triplets from two frames of (track_id, embedding).

    Anchors come from ``frame_a``; the positive is the same identity in
    ``frame_b``; negatives are every other identity's embedding from both
    frames (or from ``frame_b`` only when ``cross_frame_negatives`` is
    off).  The frames must lie within ``max_gap`` steps of each other,
    exclusive.  Identities with no positive or no negative yield no batch.
    """
    if abs(int(t_a) - int(t_b)) >= int(max_gap):
        raise ValueError(
            f"frames {t_a} and {t_b} are {abs(t_a - t_b)} steps apart; "
            f"the sampling window requires a gap below {max_gap}"
        )
    for name, frame in (("frame_a", frame_a), ("frame_b", frame_b)):
        ids = [tid for tid, _ in frame]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate track ids in {name}")
    positives = {tid: emb for tid, emb in frame_b}
    pool = list(frame_a) + list(frame_b) if cross_frame_negatives else list(frame_b)
    batches = []
    for tid, emb in frame_a:
        if tid not in positives:
            continue
        negatives = [e for other, e in pool if other != tid]
        if not negatives:
            continue
        batches.append(
            TripletBatch(
                anchor=emb,
                positive=positives[tid],
                negatives=np.stack([normalize_embedding(e) for e in negatives]),
                margin=margin,
            )
        )
    return batches
