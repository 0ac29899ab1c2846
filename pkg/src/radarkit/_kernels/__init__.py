"""Hot-kernel dispatch: compiled extension when available, numpy otherwise.

Set RADARKIT_DISABLE_EXTENSION=1 to force the pure-numpy implementations
(used by the benchmark and the cross-validation tests).
"""

from __future__ import annotations

import os

from radarkit._kernels import reference

if os.environ.get("RADARKIT_DISABLE_EXTENSION", "") not in ("", "0"):
    _impl = reference
    BACKEND = "numpy"
else:
    try:
        from radarkit._kernels import _core as _impl

        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on build environment
        _impl = reference
        BACKEND = "numpy"

rect_overlap_matrix = _impl.rect_overlap_matrix
cfar_scan = _impl.cfar_scan

__all__ = ["BACKEND", "cfar_scan", "rect_overlap_matrix", "reference"]
