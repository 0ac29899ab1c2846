"""Command-line pipeline: simulate -> cfar -> heatmap -> track -> eval.

Every subcommand is a pure function of its input files, flags, and
config: with the same inputs it produces byte-identical outputs.  All
files are written atomically (temp file + rename).

Exit codes:

* 0 — success
* 2 — usage error (unknown flags or subcommands; raised by argparse)
* 3 — malformed input data (bad JSONL records, bad tensor files)
* 4 — invalid configuration (unknown keys, out-of-range or inconsistent
      values, a CFAR window that does not fit the input volume)
* 5 — missing input file
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from radarkit import __version__
from radarkit.cfar import annotate_point_counts, cfar_detect
from radarkit.config import ConfigError, PipelineConfig, load_config, parse_overrides
from radarkit.geometry import bev_corners
from radarkit.grid import (
    CartesianGridSpec,
    PolarGridSpec,
    RadarTensor,
    doppler_collapse,
    polar_to_cartesian,
)
from radarkit.metrics import evaluate_detections, evaluate_tracking
from radarkit.sim import corrupt_scenario, generate_scenario, render_polar_tensor
from radarkit.targets import render_heatmap
from radarkit.tensorio import (
    FormatError,
    atomic_write_text,
    read_detections_jsonl,
    read_labels_jsonl,
    read_points_jsonl,
    read_tensor,
    read_tracks_jsonl,
    write_detections_jsonl,
    write_labels_jsonl,
    write_pgm,
    write_points_jsonl,
    write_ppm,
    write_tensor,
    write_tracks_jsonl,
)
from radarkit.tracker import MultiClassTracker
from radarkit.types import TrackRecord

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONFIG = 4
EXIT_MISSING = 5


# ---------------------------------------------------------------------------
# Shared helpers


def _load_pipeline_config(args) -> PipelineConfig:
    overrides = list(getattr(args, "set", None) or [])
    config = load_config(getattr(args, "config", None), overrides)
    seed = getattr(args, "seed", None)
    if seed is not None:
        config = config.replace(
            scenario=dataclasses.replace(config.scenario, seed=int(seed))
        )
    return config


def _apply_cfar_flags(config: PipelineConfig, args) -> PipelineConfig:
    updates = {}
    for flag, field in (
        ("n", "n"),
        ("g", "g"),
        ("alpha1", "alpha1"),
        ("alpha2", "alpha2"),
        ("collapse", "collapse_mode"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            updates[field] = value
    if not updates:
        return config
    try:
        return config.replace(
            cfar=dataclasses.replace(config.cfar, **updates)
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _require_file(path: str) -> str:
    if not Path(path).is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return path


def _resampling_grid(
    grid: CartesianGridSpec, source: PolarGridSpec
) -> CartesianGridSpec:
    """Target grid for converting *source*: configured geometry, source doppler.

    Polar-to-cartesian resampling maps cells voxel-for-voxel along the
    doppler axis, so the target must carry the source tensor's doppler bin
    count; the configured grid contributes only the spatial layout.
    """
    return dataclasses.replace(grid, doppler_bins=source.doppler_bins)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit_report(args, payload: dict, text: str) -> None:
    body = _json_text(payload) if args.report == "json" else text
    if getattr(args, "out", None):
        atomic_write_text(args.out, body)
    sys.stdout.write(body)


def _round(value, digits: int = 6):
    return None if value is None else round(float(value), digits)


# ---------------------------------------------------------------------------
# simulate


def _cmd_simulate(args) -> int:
    config = _load_pipeline_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    scenario = generate_scenario(config.scenario)
    labels = scenario.labels_by_frame()
    detections = corrupt_scenario(scenario, config.corruption)

    rendered = min(int(args.tensors), scenario.num_frames)
    for frame in range(rendered):
        tensor = render_polar_tensor(
            scenario.frames[frame],
            config.polar,
            config.render,
            velocities=scenario.velocities,
            frame=frame,
            seed=config.scenario.seed,
        )
        write_tensor(out_dir / f"tensor_{frame:05d}.rt4d", tensor)

    write_labels_jsonl(out_dir / "labels.jsonl", labels)
    write_detections_jsonl(out_dir / "detections.jsonl", detections)
    print(
        f"simulate: {scenario.num_frames} frames, "
        f"{config.scenario.num_objects} objects, {rendered} tensor file(s) "
        f"-> {out_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# cfar


def _cmd_cfar(args) -> int:
    config = _apply_cfar_flags(_load_pipeline_config(args), args)
    tensor = read_tensor(_require_file(args.input))
    try:
        if isinstance(tensor.spec, PolarGridSpec):
            tensor = polar_to_cartesian(
                tensor, _resampling_grid(config.grid, tensor.spec)
            )
        points = cfar_detect(tensor, config.cfar)
    except ValueError as exc:
        raise ConfigError(f"cfar: {exc}") from None
    write_points_jsonl(args.out, points)
    print(f"cfar: {len(points)} point(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# heatmap


def _cmd_heatmap(args) -> int:
    config = _load_pipeline_config(args)
    labels = read_labels_jsonl(_require_file(args.labels))
    frame = int(args.frame)
    if frame not in labels:
        raise FormatError(
            f"{args.labels}: frame {frame} has no labels "
            f"(frames present: {sorted(labels)[:10]}...)"
        )
    objs = labels[frame]
    if args.points:
        points = read_points_jsonl(_require_file(args.points))
        objs = annotate_point_counts(objs, points)

    try:
        heat = render_heatmap(objs, config.grid, config.heatmap)
    except ValueError as exc:
        raise ConfigError(f"heatmap: {exc}") from None

    # One-voxel-deep cartesian container; class channels ride the leading
    # (doppler) axis.
    vz_span = config.grid.extents[5] - config.grid.extents[4]
    container = CartesianGridSpec(
        voxel_size=(vz_span, config.grid.voxel_size[1], config.grid.voxel_size[2]),
        extents=config.grid.extents,
        doppler_bins=config.heatmap.num_classes,
    )
    tensor = RadarTensor(
        spec=container, data=heat.data[:, None, :, :].astype(np.float32)
    )
    write_tensor(args.out, tensor)

    if args.pgm:
        for cid in range(config.heatmap.num_classes):
            write_pgm(f"{args.pgm}_class{cid}.pgm", heat.data[cid][::-1])

    skipped = f", {heat.skipped} label(s) outside grid" if heat.skipped else ""
    print(
        f"heatmap: frame {frame}, {len(objs)} label(s){skipped} -> {args.out}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# track


def _cmd_track(args) -> int:
    config = _load_pipeline_config(args)
    detections = read_detections_jsonl(_require_file(args.dets))
    rows: list[TrackRecord] = []
    if detections:
        tracker = MultiClassTracker(config.tracker)
        first, last = min(detections), max(detections)
        for frame in range(first, last + 1):
            emitted = tracker.step(detections.get(frame, []))
            rows.extend(
                TrackRecord(
                    frame=frame,
                    track_id=t.track_id,
                    class_id=t.class_id,
                    box=t.box,
                    score=t.score,
                )
                for t in emitted
            )
    write_tracks_jsonl(args.out, rows)
    print(f"track: {len(rows)} track row(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval-det


def _cmd_eval_det(args) -> int:
    detections = read_detections_jsonl(_require_file(args.dets))
    labels = read_labels_jsonl(_require_file(args.labels))
    threshold = float(args.threshold)
    try:
        report_3d = evaluate_detections(detections, labels, "3d", threshold)
        report_bev = evaluate_detections(detections, labels, "bev", threshold)
    except ValueError as exc:
        raise ConfigError(f"eval-det: {exc}") from None

    payload = {
        "threshold": threshold,
        "ap_3d": report_3d["ap"],
        "map_3d": _round(report_3d["mean_ap"]),
        "ap_bev": report_bev["ap"],
        "map_bev": _round(report_bev["mean_ap"]),
        "num_gt": report_3d["num_gt"],
        "num_frames": report_3d["num_frames"],
    }
    lines = [
        f"Detection AP @ IoU {threshold:g} "
        f"({report_3d['num_frames']} frames)",
    ]
    for cid in sorted(report_3d["ap"]):
        lines.append(
            f"  class {cid}: AP_3D = {report_3d['ap'][cid]:.4f}  "
            f"AP_BEV = {report_bev['ap'][cid]:.4f}  "
            f"(GT = {report_3d['num_gt'][cid]})"
        )
    if payload["map_3d"] is not None:
        lines.append(
            f"  mean:   AP_3D = {payload['map_3d']:.4f}  "
            f"AP_BEV = {payload['map_bev']:.4f}"
        )
    _emit_report(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval-mot


def _cmd_eval_mot(args) -> int:
    tracks = read_tracks_jsonl(_require_file(args.tracks))
    labels = read_labels_jsonl(_require_file(args.labels))
    try:
        report = evaluate_tracking(
            labels, tracks, float(args.threshold), args.iou_kind
        )
    except ValueError as exc:
        raise ConfigError(f"eval-mot: {exc}") from None

    payload = {
        "iou_kind": report["iou_mode"],
        "threshold": report["iou_threshold"],
        "mota": _round(report["mota"]),
        "motp": _round(report["motp"]),
        "idf1": _round(report["idf1"]),
        "fp": report["false_positives"],
        "fn": report["misses"],
        "ids": report["id_switches"],
        "num_gt": report["num_gt"],
        "num_frames": report["num_frames"],
        "per_class": {
            str(cid): {
                "mota": _round(stats["mota"]),
                "idf1": _round(stats["idf1"]),
                "fp": stats["false_positives"],
                "fn": stats["misses"],
                "ids": stats["id_switches"],
                "num_gt": stats["num_gt"],
            }
            for cid, stats in report["per_class"].items()
        },
    }
    lines = [
        f"Tracking metrics @ IoU {report['iou_threshold']:g} "
        f"({report['iou_mode']}, "
        f"{report['num_frames']} frames, {report['num_gt']} GT boxes)",
        f"  MOTA = {report['mota']:.4f}  IDF1 = {report['idf1']:.4f}",
        f"  FP = {report['false_positives']}  FN = {report['misses']}  "
        f"IDSW = {report['id_switches']}",
    ]
    for cid, stats in payload["per_class"].items():
        lines.append(
            f"  class {cid}: MOTA = {stats['mota']:.4f}  "
            f"IDF1 = {stats['idf1']:.4f}  FP = {stats['fp']}  "
            f"FN = {stats['fn']}  IDSW = {stats['ids']}"
        )
    _emit_report(args, payload, "\n".join(lines) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# demo


DEMO_OVERRIDES = (
    "scenario.num_objects=4",
    "scenario.num_frames=30",
    "scenario.x_range=8, 24",
    "scenario.y_range=-5, 5",
    "scenario.z_range=-0.3, 1.2",
    "scenario.speed_range=0.5, 2.5",
    "scenario.min_separation=4.0",
    "scenario.bounds=4.0, 28.8, -7.2, 7.2, -2.0, 2.8",
    "grid.extents=4.0, 28.8, -7.2, 7.2, -2.0, 2.8",
    "polar.range_bins=128",
    "polar.range_res=0.25",
    "polar.range_offset=0.25",
    "polar.azimuth_bins=130",
    "polar.azimuth_res=0.017453292519943295",
    "polar.azimuth_offset=-1.1344640137963142",
    "polar.elevation_bins=36",
    "polar.elevation_res=0.03490658503988659",
    "polar.elevation_offset=-0.6283185307179586",
    "cfar.n=3",
    "cfar.g=1",
    "corruption.pos_sigma=0.05",
    "corruption.size_sigma=0.02",
    "corruption.yaw_sigma=0.01",
    "corruption.score_sigma=0.05",
    "corruption.embeddings=true",
    "corruption.emb_jitter=0.05",
)


def _overlay_image(
    volume_bev: np.ndarray,
    grid: CartesianGridSpec,
    gt_boxes,
    track_boxes,
) -> np.ndarray:
    """Gray BEV power backdrop with GT (green) and track (red) outlines."""
    scaled = np.log1p(np.maximum(volume_bev, 0.0))
    peak = float(scaled.max())
    if peak > 0.0:
        scaled = scaled / peak
    img = np.repeat((scaled * 200.0).astype(np.uint8)[:, :, None], 3, axis=2)

    x_min, _, y_min, _, _, _ = grid.extents
    _, vy, vx = grid.voxel_size

    def paint(box, color):
        ring = bev_corners(box)
        for a, b in zip(ring, np.roll(ring, -1, axis=0)):
            for t in np.linspace(0.0, 1.0, 64):
                x, y = a + t * (b - a)
                iu = int((x - x_min) / vx)
                iv = int((y - y_min) / vy)
                if 0 <= iv < img.shape[0] and 0 <= iu < img.shape[1]:
                    img[iv, iu] = color

    for box in gt_boxes:
        paint(box, (40, 220, 40))
    for box in track_boxes:
        paint(box, (230, 60, 60))
    return img[::-1]  # +y up


def _cmd_demo(args) -> int:
    overrides = list(DEMO_OVERRIDES) + list(args.set or [])
    parse_overrides(overrides)  # fail fast on malformed --set entries
    config = load_config(args.config, overrides)
    if args.seed is not None:
        config = config.replace(
            scenario=dataclasses.replace(config.scenario, seed=int(args.seed))
        )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Ground truth and the frame-0 sensor view.
    scenario = generate_scenario(config.scenario)
    labels = scenario.labels_by_frame()
    polar = render_polar_tensor(
        scenario.frames[0],
        config.polar,
        config.render,
        velocities=scenario.velocities,
        frame=0,
        seed=config.scenario.seed,
    )
    write_tensor(out_dir / "frame0_polar.rt4d", polar)
    cart = polar_to_cartesian(polar, _resampling_grid(config.grid, polar.spec))

    # CFAR extraction and visibility annotation.
    try:
        points = cfar_detect(cart, config.cfar)
    except ValueError as exc:
        raise ConfigError(f"demo: {exc}") from None
    write_points_jsonl(out_dir / "frame0_points.jsonl", points)
    labels[0] = annotate_point_counts(labels[0], points)
    write_labels_jsonl(out_dir / "labels.jsonl", labels)

    # Heatmap targets for frame 0.
    heat = render_heatmap(labels[0], config.grid, config.heatmap)
    for cid in range(config.heatmap.num_classes):
        write_pgm(out_dir / f"frame0_heatmap_class{cid}.pgm", heat.data[cid][::-1])

    # Detections -> tracks -> metrics.
    detections = corrupt_scenario(scenario, config.corruption)
    write_detections_jsonl(out_dir / "detections.jsonl", detections)
    tracker = MultiClassTracker(config.tracker)
    rows: list[TrackRecord] = []
    frame0_tracks = []
    for frame in range(scenario.num_frames):
        emitted = tracker.step(detections.get(frame, []))
        if frame == 0:
            frame0_tracks = [t.box for t in emitted]
        rows.extend(
            TrackRecord(
                frame=frame,
                track_id=t.track_id,
                class_id=t.class_id,
                box=t.box,
                score=t.score,
            )
            for t in emitted
        )
    write_tracks_jsonl(out_dir / "tracks.jsonl", rows)

    tracks_by_frame = read_tracks_jsonl(out_dir / "tracks.jsonl")
    det_report = evaluate_detections(detections, labels, "bev", 0.3)
    mot_report = evaluate_tracking(labels, tracks_by_frame, 0.3, "bev")

    # BEV overlay: frame-0 power, GT green, tracked boxes red.
    bev = doppler_collapse(cart, "max").data[0].max(axis=0)  # (ny, nx)
    overlay = _overlay_image(
        bev, config.grid, [o.box for o in scenario.frames[0]], frame0_tracks
    )
    write_ppm(out_dir / "frame0_overlay.ppm", overlay)

    payload = {
        "seed": config.scenario.seed,
        "frames": scenario.num_frames,
        "objects": config.scenario.num_objects,
        "frame0_cfar_points": len(points),
        "frame0_visible_objects": sum(
            1 for o in labels[0] if (o.cfar_count or 0) > 0
        ),
        "ap_bev": det_report["ap"],
        "map_bev": _round(det_report["mean_ap"]),
        "mota": _round(mot_report["mota"]),
        "idf1": _round(mot_report["idf1"]),
        "fp": mot_report["false_positives"],
        "fn": mot_report["misses"],
        "ids": mot_report["id_switches"],
    }
    atomic_write_text(out_dir / "report.json", _json_text(payload))
    text = (
        f"demo seed {payload['seed']}: {payload['objects']} objects over "
        f"{payload['frames']} frames\n"
        f"  frame 0: {payload['frame0_cfar_points']} CFAR points, "
        f"{payload['frame0_visible_objects']} visible object(s)\n"
        f"  detection mAP_BEV = {payload['map_bev']}\n"
        f"  MOTA = {payload['mota']}  IDF1 = {payload['idf1']}  "
        f"FP = {payload['fp']}  FN = {payload['fn']}  IDSW = {payload['ids']}\n"
    )
    atomic_write_text(out_dir / "report.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="pipeline config file (key=value sections)")
    parser.add_argument(
        "--set",
        action="append",
        metavar="SECTION.KEY=VALUE",
        help="override a single config value (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="radarkit",
        description="4D-radar perception pipeline: simulate, detect, track, evaluate.",
        epilog=(
            "exit codes: 0 ok, 2 usage, 3 malformed data, 4 bad config, "
            "5 missing input"
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "simulate", help="generate a seeded scenario: labels, detections, tensors"
    )
    _add_config_flags(p)
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override scenario seed")
    p.add_argument(
        "--tensors",
        type=int,
        default=0,
        metavar="N",
        help="render polar tensor files for the first N frames (default 0)",
    )
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("cfar", help="extract CFAR points from an RT4D tensor")
    _add_config_flags(p)
    p.add_argument("--input", required=True, help="RT4D tensor (polar or cartesian)")
    p.add_argument("--out", required=True, help="output points JSONL")
    p.add_argument("--n", type=int, help="training halfwidth per axis")
    p.add_argument("--g", type=int, help="guard halfwidth per axis")
    p.add_argument("--alpha1", type=float, help="mean multiplier")
    p.add_argument("--alpha2", type=float, help="std multiplier")
    p.add_argument(
        "--collapse",
        choices=("max", "mean", "sum"),
        help="doppler collapse mode",
    )
    p.set_defaults(handler=_cmd_cfar)

    p = sub.add_parser(
        "heatmap", help="render per-class BEV target heatmaps from labels"
    )
    _add_config_flags(p)
    p.add_argument("--labels", required=True, help="labels JSONL")
    p.add_argument("--frame", type=int, default=0, help="frame to render (default 0)")
    p.add_argument("--points", help="CFAR points JSONL for visibility weights")
    p.add_argument("--out", required=True, help="output RT4D heatmap container")
    p.add_argument(
        "--pgm",
        metavar="PREFIX",
        help="also write PREFIX_class<c>.pgm per class",
    )
    p.set_defaults(handler=_cmd_heatmap)

    p = sub.add_parser("track", help="run the online tracker over detections")
    _add_config_flags(p)
    p.add_argument("--dets", required=True, help="detections JSONL")
    p.add_argument("--out", required=True, help="output tracks JSONL")
    p.set_defaults(handler=_cmd_track)

    p = sub.add_parser("eval-det", help="detection AP against labels")
    p.add_argument("--dets", required=True, help="detections JSONL")
    p.add_argument("--labels", required=True, help="ground-truth labels JSONL")
    p.add_argument("--threshold", type=float, default=0.3, help="IoU threshold")
    p.add_argument(
        "--report", choices=("json", "text"), default="text", help="output format"
    )
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(handler=_cmd_eval_det)

    p = sub.add_parser("eval-mot", help="CLEAR/IDF1 tracking metrics against labels")
    p.add_argument("--tracks", required=True, help="tracks JSONL")
    p.add_argument("--labels", required=True, help="ground-truth labels JSONL")
    p.add_argument("--threshold", type=float, default=0.3, help="IoU threshold")
    p.add_argument(
        "--iou-kind", choices=("bev", "3d"), default="bev", help="gating IoU"
    )
    p.add_argument(
        "--report", choices=("json", "text"), default="text", help="output format"
    )
    p.add_argument("--out", help="also write the report to this file")
    p.set_defaults(handler=_cmd_eval_mot)

    p = sub.add_parser(
        "demo",
        help="end-to-end pipeline on a small scene with image and report dumps",
    )
    _add_config_flags(p)
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="scenario seed (default from config)")
    p.set_defaults(handler=_cmd_demo)

    return parser


def run(argv=None) -> int:
    """Parse arguments and execute one subcommand; returns the exit code."""
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"radarkit: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FormatError as exc:
        print(f"radarkit: malformed input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"radarkit: {exc}", file=sys.stderr)
        return EXIT_MISSING


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
