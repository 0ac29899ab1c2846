"""File formats: RT4D binary tensors, JSONL record streams, PGM/PPM dumps.

RT4D layout (all little-endian):

* magic ``RT4D`` (4 bytes)
* version u16 (currently 1)
* kind u8: 0 = polar, 1 = cartesian
* grid header, fields in declaration order (u32 counts, f64 floats):
  polar    - range_bins, range_res, azimuth_bins, azimuth_res,
             elevation_bins, elevation_res, doppler_bins,
             range_offset, azimuth_offset, elevation_offset
  cartesian- voxel_size (vz, vy, vx), extents (x_min, x_max, y_min,
             y_max, z_min, z_max), doppler_bins
* payload: float32 tensor values, C order (last axis fastest)

All writers in this module are atomic: data lands in a temporary file in
the destination directory and is renamed into place.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
import warnings
from typing import Callable

import numpy as np

from radarkit.grid import Box3D, CartesianGridSpec, PolarGridSpec, RadarTensor
from radarkit.types import Detection, LabelObject, TrackRecord

MAGIC = b"RT4D"
VERSION = 1
KIND_POLAR = 0
KIND_CARTESIAN = 1

_POLAR_HEADER = struct.Struct("<IdIdIdIddd")
_CARTESIAN_HEADER = struct.Struct("<dddddddddI")
_PREFIX = struct.Struct("<4sHB")

#: Detections per frame beyond which the reader warns about input size.
FRAME_CAPACITY = 30


class FormatError(ValueError):
    """Raised when a file does not conform to its declared format."""


def atomic_write_bytes(path, payload: bytes) -> None:
    """Write bytes to ``path`` via a same-directory temp file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# RT4D tensors


def tensor_to_bytes(tensor: RadarTensor) -> bytes:
    spec = tensor.spec
    if isinstance(spec, PolarGridSpec):
        head = _PREFIX.pack(MAGIC, VERSION, KIND_POLAR) + _POLAR_HEADER.pack(
            spec.range_bins,
            spec.range_res,
            spec.azimuth_bins,
            spec.azimuth_res,
            spec.elevation_bins,
            spec.elevation_res,
            spec.doppler_bins,
            spec.range_offset,
            spec.azimuth_offset,
            spec.elevation_offset,
        )
    elif isinstance(spec, CartesianGridSpec):
        head = _PREFIX.pack(MAGIC, VERSION, KIND_CARTESIAN) + _CARTESIAN_HEADER.pack(
            *spec.voxel_size, *spec.extents, spec.doppler_bins
        )
    else:
        raise TypeError(f"unsupported grid spec {type(spec).__name__}")
    data = np.ascontiguousarray(tensor.data, dtype="<f4")
    return head + data.tobytes()


def write_tensor(path, tensor: RadarTensor) -> None:
    """Serialize a tensor to an RT4D file (atomic)."""
    atomic_write_bytes(path, tensor_to_bytes(tensor))


def tensor_from_bytes(blob: bytes) -> RadarTensor:
    if len(blob) < _PREFIX.size:
        raise FormatError("truncated RT4D header")
    magic, version, kind = _PREFIX.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}; expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"unsupported RT4D version {version}")
    offset = _PREFIX.size
    if kind == KIND_POLAR:
        if len(blob) < offset + _POLAR_HEADER.size:
            raise FormatError("truncated polar grid header")
        (rb, rr, ab, ar, eb, er, db, ro, ao, eo) = _POLAR_HEADER.unpack_from(blob, offset)
        offset += _POLAR_HEADER.size
        try:
            spec = PolarGridSpec(
                range_bins=rb,
                range_res=rr,
                azimuth_bins=ab,
                azimuth_res=ar,
                elevation_bins=eb,
                elevation_res=er,
                doppler_bins=db,
                range_offset=ro,
                azimuth_offset=ao,
                elevation_offset=eo,
            )
        except ValueError as exc:
            raise FormatError(f"invalid polar grid header: {exc}") from exc
    elif kind == KIND_CARTESIAN:
        if len(blob) < offset + _CARTESIAN_HEADER.size:
            raise FormatError("truncated cartesian grid header")
        values = _CARTESIAN_HEADER.unpack_from(blob, offset)
        offset += _CARTESIAN_HEADER.size
        try:
            spec = CartesianGridSpec(
                voxel_size=values[0:3], extents=values[3:9], doppler_bins=values[9]
            )
        except ValueError as exc:
            raise FormatError(f"invalid cartesian grid header: {exc}") from exc
    else:
        raise FormatError(f"unknown tensor kind {kind}")
    expected = int(np.prod(spec.shape)) * 4
    payload = blob[offset:]
    if len(payload) != expected:
        raise FormatError(
            f"payload holds {len(payload)} bytes; grid {spec.shape} needs {expected}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(spec.shape)
    try:
        return RadarTensor(spec=spec, data=data.copy())
    except ValueError as exc:
        raise FormatError(f"invalid tensor payload: {exc}") from exc


def read_tensor(path) -> RadarTensor:
    """Read an RT4D file, validating magic, version, and payload size."""
    with open(path, "rb") as fh:
        return tensor_from_bytes(fh.read())


# ---------------------------------------------------------------------------
# JSONL record streams


def _dump_lines(records) -> str:
    return "".join(json.dumps(r, separators=(", ", ": ")) + "\n" for r in records)


def _box_to_list(box: Box3D) -> list[float]:
    return [box.cx, box.cy, box.cz, box.l, box.w, box.h, box.yaw]


def _box_from_field(value, where: str) -> Box3D:
    try:
        if len(value) != 7:
            raise ValueError(f"box needs 7 values, got {len(value)}")
        return Box3D.from_array(value)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: bad box field: {exc}") from exc


def _read_jsonl(path, parse: Callable[[dict, str], None]) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{where}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise FormatError(f"{where}: expected a JSON object")
            try:
                parse(record, where)
            except (KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, FormatError):
                    raise
                raise FormatError(f"{where}: malformed record: {exc}") from exc


def write_detections_jsonl(path, frames: dict[int, list[Detection]]) -> None:
    records = []
    for frame in sorted(frames):
        for det in frames[frame]:
            rec = {
                "frame": frame,
                "class": det.class_id,
                "score": det.score,
                "box": _box_to_list(det.box),
            }
            if det.embedding is not None:
                rec["emb"] = [float(v) for v in det.embedding]
            records.append(rec)
    atomic_write_text(path, _dump_lines(records))


def read_detections_jsonl(path) -> dict[int, list[Detection]]:
    """Read detections grouped by frame; warns on overfull frames."""
    frames: dict[int, list[Detection]] = {}

    def parse(rec: dict, where: str) -> None:
        emb = rec.get("emb")
        det = Detection(
            box=_box_from_field(rec["box"], where),
            score=float(rec["score"]),
            class_id=int(rec["class"]),
            embedding=None if emb is None else np.asarray(emb, dtype=float),
        )
        frames.setdefault(int(rec["frame"]), []).append(det)

    _read_jsonl(path, parse)
    crowded = sorted(f for f, dets in frames.items() if len(dets) > FRAME_CAPACITY)
    if crowded:
        warnings.warn(
            f"{path}: {len(crowded)} frame(s) exceed {FRAME_CAPACITY} detections "
            f"(first: frame {crowded[0]})",
            stacklevel=2,
        )
    return frames


def write_labels_jsonl(path, frames: dict[int, list[LabelObject]]) -> None:
    records = []
    for frame in sorted(frames):
        for obj in frames[frame]:
            rec = {
                "frame": frame,
                "track_id": obj.track_id,
                "class": obj.class_id,
                "box": _box_to_list(obj.box),
            }
            if obj.cfar_count is not None:
                rec["cfar_count"] = int(obj.cfar_count)
            records.append(rec)
    atomic_write_text(path, _dump_lines(records))


def read_labels_jsonl(path) -> dict[int, list[LabelObject]]:
    frames: dict[int, list[LabelObject]] = {}

    def parse(rec: dict, where: str) -> None:
        count = rec.get("cfar_count")
        obj = LabelObject(
            box=_box_from_field(rec["box"], where),
            class_id=int(rec["class"]),
            track_id=int(rec["track_id"]),
            cfar_count=None if count is None else int(count),
        )
        frames.setdefault(int(rec["frame"]), []).append(obj)

    _read_jsonl(path, parse)
    return frames


def write_points_jsonl(path, points) -> None:
    """Dump a CfarPointSet, one point per line, in canonical index order."""
    records = [
        {
            "iz": int(iz),
            "iy": int(iy),
            "ix": int(ix),
            "x": float(x),
            "y": float(y),
            "z": float(z),
            "power": float(p),
        }
        for (iz, iy, ix), (x, y, z), p in zip(
            points.indices.tolist(), points.xyz.tolist(), points.power.tolist()
        )
    ]
    atomic_write_text(path, _dump_lines(records))


def read_points_jsonl(path):
    """Read a CfarPointSet written by :func:`write_points_jsonl`."""
    from radarkit.cfar import CfarPointSet

    indices: list[tuple[int, int, int]] = []
    coords: list[tuple[float, float, float]] = []
    power: list[float] = []

    def parse(rec: dict, where: str) -> None:
        indices.append((int(rec["iz"]), int(rec["iy"]), int(rec["ix"])))
        coords.append((float(rec["x"]), float(rec["y"]), float(rec["z"])))
        power.append(float(rec["power"]))

    _read_jsonl(path, parse)
    if not indices:
        return CfarPointSet.empty()
    return CfarPointSet(
        indices=np.array(indices, dtype=np.int64),
        xyz=np.array(coords, dtype=float),
        power=np.array(power, dtype=float),
    )


def write_tracks_jsonl(path, rows: list[TrackRecord]) -> None:
    records = [
        {
            "frame": row.frame,
            "id": row.track_id,
            "class": row.class_id,
            "box": _box_to_list(row.box),
            "score": row.score,
        }
        for row in sorted(rows, key=lambda r: (r.frame, r.track_id))
    ]
    atomic_write_text(path, _dump_lines(records))


def read_tracks_jsonl(path) -> dict[int, list[TrackRecord]]:
    frames: dict[int, list[TrackRecord]] = {}

    def parse(rec: dict, where: str) -> None:
        row = TrackRecord(
            frame=int(rec["frame"]),
            track_id=int(rec["id"]),
            class_id=int(rec["class"]),
            box=_box_from_field(rec["box"], where),
            score=float(rec.get("score", 1.0)),
        )
        frames.setdefault(row.frame, []).append(row)

    _read_jsonl(path, parse)
    return frames


# ---------------------------------------------------------------------------
# Image dumps


def write_pgm(path, values: np.ndarray) -> None:
    """Dump a 2-D array in [0, 1] as a binary 8-bit PGM image."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"PGM dump needs a 2-D array, got shape {arr.shape}")
    gray = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + gray.tobytes())


def write_ppm(path, rgb: np.ndarray) -> None:
    """Dump an (h, w, 3) uint8 array as a binary PPM image."""
    arr = np.asarray(rgb)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"PPM dump needs an (h, w, 3) array, got shape {arr.shape}")
    arr = arr.astype(np.uint8)
    header = f"P6\n{arr.shape[1]} {arr.shape[0]}\n255\n".encode("ascii")
    atomic_write_bytes(path, header + arr.tobytes())
