"""radarkit: 4D-radar perception toolkit.

CA-CFAR point extraction with visibility scoring, detection-target
generation (Gaussian BEV heatmaps + regression encodings), embedding-loss
oracles, an online Kalman/DIoU/re-ID multi-object tracker, detection and
tracking metrics, and a seeded synthetic scenario simulator that makes
each stage verifiable end to end.

Hot geometry and CFAR kernels run from a compiled extension when it is
available and fall back to a pure-NumPy implementation otherwise; set
``RADARKIT_DISABLE_EXTENSION=1`` to force the fallback.  The active
choice is exposed as :data:`radarkit.kernel_backend`.
"""

from radarkit._kernels import BACKEND as kernel_backend
from radarkit.cfar import (
    BoundaryError,
    CfarConfig,
    CfarPointSet,
    cfar_detect,
    cfar_threshold,
    count_points_in_box,
    filter_invisible,
    visibility_histogram,
)
from radarkit.grid import (
    Box3D,
    CartesianGridSpec,
    PolarGridSpec,
    RadarTensor,
    doppler_collapse,
    polar_to_cartesian,
    voxel_to_world,
    world_to_voxel,
)
from radarkit.jde import (
    TripletBatch,
    combined_loss,
    cosine_distance,
    hard_negative,
    sample_triplets,
    triplet_loss,
)
from radarkit.metrics import (
    MotAccumulator,
    ap_at_iou,
    evaluate_detections,
    evaluate_tracking,
    idf1,
    iou_3d,
    iou_bev,
    mot_update,
    mota,
)
from radarkit.sim import (
    CorruptionConfig,
    RenderConfig,
    Scenario,
    ScenarioConfig,
    corrupt_detections,
    corrupt_scenario,
    crossing_scenario,
    generate_scenario,
    oracle_assignment,
    oracle_iou,
    render_polar_tensor,
)
from radarkit.targets import (
    HeatmapConfig,
    encode_regression_targets,
    gaussian_sigma,
    render_heatmap,
    visibility_weight,
)
from radarkit.tracker import (
    MultiClassTracker,
    NumericalError,
    Track,
    Tracker,
    TrackerConfig,
    TrackStatus,
    appearance_cost,
    assign,
    diou_cost,
    kf_predict,
    kf_update,
    measurement_from_box,
    tracker_step,
)
from radarkit.types import Detection, LabelObject, TrackRecord

__version__ = "0.1.0"

__all__ = [
    "BoundaryError",
    "Box3D",
    "CartesianGridSpec",
    "CfarConfig",
    "CfarPointSet",
    "CorruptionConfig",
    "Detection",
    "HeatmapConfig",
    "LabelObject",
    "MotAccumulator",
    "MultiClassTracker",
    "NumericalError",
    "PolarGridSpec",
    "RadarTensor",
    "RenderConfig",
    "Scenario",
    "ScenarioConfig",
    "Track",
    "TrackRecord",
    "TrackStatus",
    "Tracker",
    "TrackerConfig",
    "TripletBatch",
    "ap_at_iou",
    "appearance_cost",
    "assign",
    "cfar_detect",
    "cfar_threshold",
    "combined_loss",
    "corrupt_detections",
    "corrupt_scenario",
    "cosine_distance",
    "count_points_in_box",
    "crossing_scenario",
    "diou_cost",
    "doppler_collapse",
    "encode_regression_targets",
    "evaluate_detections",
    "evaluate_tracking",
    "filter_invisible",
    "gaussian_sigma",
    "generate_scenario",
    "hard_negative",
    "idf1",
    "iou_3d",
    "iou_bev",
    "kernel_backend",
    "kf_predict",
    "kf_update",
    "measurement_from_box",
    "mot_update",
    "mota",
    "oracle_assignment",
    "oracle_iou",
    "polar_to_cartesian",
    "render_heatmap",
    "render_polar_tensor",
    "sample_triplets",
    "tracker_step",
    "triplet_loss",
    "visibility_histogram",
    "visibility_weight",
    "voxel_to_world",
    "world_to_voxel",
    "__version__",
]
