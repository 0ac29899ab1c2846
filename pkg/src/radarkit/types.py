"""Shared record types passed between the pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from radarkit.grid import Box3D


@dataclass(frozen=True)
class Detection:
    """A single-frame detector output: box, confidence, optional embedding."""

    box: Box3D
    score: float
    class_id: int = 0
    embedding: np.ndarray | None = None

    def __post_init__(self):
        score = float(self.score)
        if not 0.0 <= score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {score}")
        object.__setattr__(self, "score", score)
        if int(self.class_id) < 0:
            raise ValueError("class_id must be non-negative")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=float)
            if emb.ndim != 1 or emb.size == 0:
                raise ValueError("embedding must be a non-empty 1-D vector")
            if not np.isfinite(emb).all():
                raise ValueError("embedding must be finite")
            object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class LabelObject:
    """Ground-truth annotation: box, class, persistent track id.

    ``cfar_count`` is the number of extracted radar points inside the box;
    None means the count was never measured (treated as fully visible).
    """

    box: Box3D
    class_id: int
    track_id: int
    cfar_count: int | None = None

    def __post_init__(self):
        if int(self.class_id) < 0:
            raise ValueError("class_id must be non-negative")
        if self.cfar_count is not None and int(self.cfar_count) < 0:
            raise ValueError("cfar_count must be non-negative")


@dataclass(frozen=True)
class TrackRecord:
    """One emitted tracker row: frame, persistent id, class, box, score."""

    frame: int
    track_id: int
    class_id: int
    box: Box3D
    score: float = field(default=1.0)

    def __post_init__(self):
        if int(self.track_id) < 0:
            raise ValueError("track_id must be non-negative")
