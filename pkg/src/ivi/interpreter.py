"""Reference execution of instruction semantics on sprite scenes.

Produces a frame sequence plus ground-truth object and camera tracks. It
doubles as the built-in mock generation backend and as the oracle the
evaluation checks are validated against: motion is linear-eased and
arc-length-constant by contract, so every check has an exactly computable
expected outcome.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import raster
from .render import StyleConfig, annotation_layer, encode_png, scene_composite
from .scene import (
    CameraMove,
    Canvas,
    FollowPath,
    Hold,
    Instruction,
    ObjectTarget,
    PathGeometry,
    Pose,
    Rotate,
    SceneSpec,
    Translate,
    derive_semantics,
    validate_scene,
)

# Camera excursion constants: pans and tilts sweep 20% of the relevant
# dimension; zooms end at 1.25x (in) and 0.8x (out).
PAN_FRACTION = 0.20
ZOOM_IN_DELTA = 0.25
ZOOM_OUT_DELTA = 0.20

ZOOM_MIN = 0.5
ZOOM_MAX = 2.0

FRAME_FILE_PATTERN = "frame_%05d.png"


class SimulationError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class Segment:
    instruction_id: str
    frame_start: int  # inclusive
    frame_end: int  # exclusive


@dataclass(frozen=True)
class Timeline:
    segments: tuple[Segment, ...]
    frames: int

    def segment_for(self, instruction_id: str) -> Segment | None:
        for seg in self.segments:
            if seg.instruction_id == instruction_id:
                return seg
        return None

    def to_doc(self) -> dict:
        return {
            "frames": self.frames,
            "segments": [
                {"instruction_id": s.instruction_id,
                 "frame_start": s.frame_start,
                 "frame_end": s.frame_end}
                for s in self.segments
            ],
        }


@dataclass(frozen=True)
class ObjectTrack:
    object_id: str
    poses: tuple[Pose, ...]

    def positions(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.poses], dtype=np.float64)


@dataclass(frozen=True)
class CameraTrack:
    """Per-frame viewport offset (world px) and zoom; frame 0 is identity."""
    offsets: tuple[tuple[float, float], ...]
    zooms: tuple[float, ...]
    width_px: int
    height_px: int

    def __len__(self) -> int:
        return len(self.zooms)


@dataclass
class SimulationResult:
    frames: list[np.ndarray]
    tracks: dict[str, ObjectTrack]
    camera: CameraTrack
    timeline: Timeline
    fps: int


def schedule_instructions(spec: SceneSpec, frames: int) -> Timeline:
    """Assign each instruction its frame span.

    Numbered instructions get equal consecutive spans of floor(F/m) frames
    in order-index order, remainder appended to the last span; unnumbered
    instructions all span [0, F).
    """
    if frames < 2:
        raise SimulationError("NO_FRAMES", f"need at least 2 frames, got {frames}")
    numbered = sorted((i for i in spec.instructions if i.order is not None),
                      key=lambda i: i.order)
    segments = []
    if numbered:
        span = frames // len(numbered)
        if span < 1:
            raise SimulationError("NO_FRAMES",
                                  f"{frames} frames cannot cover {len(numbered)} steps")
        start = 0
        for k, ins in enumerate(numbered):
            end = frames if k == len(numbered) - 1 else start + span
            segments.append(Segment(ins.id, start, end))
            start = end
    for ins in spec.instructions:
        if ins.order is None:
            segments.append(Segment(ins.id, 0, frames))
    return Timeline(segments=tuple(segments), frames=frames)


# ---------------------------------------------------------------------------
# Kinematics
# ---------------------------------------------------------------------------

# Arc-length tables for curved segments; positions are always evaluated on
# the exact curve so table resolution only affects speed constancy, never
# off-path deviation.
_ARC_SAMPLES = 2048


def _quad_point(p0, c, p1, t):
    mt = 1.0 - t
    return mt * mt * p0 + 2.0 * mt * t * c + t * t * p1


def _quad_tangent(p0, c, p1, t):
    return 2.0 * (1.0 - t) * (c - p0) + 2.0 * t * (p1 - c)


def _path_segments(geom: PathGeometry) -> list[tuple]:
    """Decompose the trajectory into ("line", a, b) / ("quad", p0, c, p1).

    Quadratic-spline mode smooths interior anchors by treating them as
    Bezier controls between midpoints of consecutive anchor pairs (the
    same construction the renderer flattens for drawing).
    """
    pts = [np.asarray(p, dtype=np.float64) for p in geom.points]
    if geom.interpolation == "polyline" or len(pts) == 2:
        return [("line", a, b) for a, b in zip(pts[:-1], pts[1:])]
    segments = []
    current = pts[0]
    for i in range(1, len(pts) - 1):
        end = (pts[i] + pts[i + 1]) / 2.0 if i < len(pts) - 2 else pts[-1]
        segments.append(("quad", current, pts[i], end))
        current = end
    return segments


def _segment_length_table(seg) -> tuple[np.ndarray, np.ndarray]:
    """(params, cumulative arc length) along one segment."""
    if seg[0] == "line":
        a, b = seg[1], seg[2]
        return (np.array([0.0, 1.0]),
                np.array([0.0, float(np.hypot(*(b - a)))]))
    t = np.linspace(0.0, 1.0, _ARC_SAMPLES + 1)
    pts = _quad_point(seg[1][None, :], seg[2][None, :], seg[3][None, :], t[:, None])
    return t, raster.polyline_cumlen(pts)


@lru_cache(maxsize=64)
def _path_tables(geom: PathGeometry):
    segments = _path_segments(geom)
    tables = [_segment_length_table(seg) for seg in segments]
    return segments, tables


def _path_point_and_tangent(geom: PathGeometry, u: float) -> tuple[float, float, float]:
    segments, tables = _path_tables(geom)
    seg_lengths = [float(cum[-1]) for _t, cum in tables]
    total = sum(seg_lengths)
    if total <= 0:
        x, y = geom.points[0]
        return float(x), float(y), 0.0
    s = u * total
    for seg, (params, cum), length in zip(segments, tables, seg_lengths):
        if s > length and seg is not segments[-1]:
            s -= length
            continue
        s = min(s, length)
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = max(0, min(i, len(params) - 2))
        span = cum[i + 1] - cum[i]
        frac = 0.0 if span <= 0 else (s - cum[i]) / span
        t = params[i] + frac * (params[i + 1] - params[i])
        if seg[0] == "line":
            a, b = seg[1], seg[2]
            p = a + t * (b - a)
            d = b - a
        else:
            p = _quad_point(seg[1], seg[2], seg[3], t)
            d = _quad_tangent(seg[1], seg[2], seg[3], t)
        return float(p[0]), float(p[1]), math.atan2(float(d[1]), float(d[0]))
    raise AssertionError("unreachable")


def pose_at(pose0: Pose, semantic, geometry, u: float) -> Pose:
    """Pose after executing fraction u in [0, 1] of one instruction.

    Linear easing throughout; follow-path moves at constant arc-length
    speed with the orientation following the path tangent.
    """
    if semantic is None:
        raise SimulationError("MISSING_SEMANTIC",
                              "instruction carries no motion semantic; derive first")
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"progress u must be in [0, 1], got {u}")
    if isinstance(semantic, Translate):
        dx = u * semantic.distance_px * semantic.direction[0]
        dy = u * semantic.distance_px * semantic.direction[1]
        return replace(pose0, x=pose0.x + dx, y=pose0.y + dy)
    if isinstance(semantic, Rotate):
        theta = u * semantic.angle_rad
        c, s = math.cos(theta), math.sin(theta)
        px, py = semantic.pivot
        rx, ry = pose0.x - px, pose0.y - py
        return replace(pose0,
                       x=px + rx * c - ry * s,
                       y=py + rx * s + ry * c,
                       orientation=pose0.orientation + theta)
    if isinstance(semantic, FollowPath):
        if not isinstance(geometry, PathGeometry):
            raise SimulationError("MISSING_SEMANTIC",
                                  "follow-path semantic without path geometry")
        x, y, tangent = _path_point_and_tangent(geometry, u)
        return replace(pose0, x=x, y=y, orientation=tangent)
    if isinstance(semantic, Hold):
        return pose0
    raise SimulationError("MISSING_SEMANTIC",
                          f"cannot execute semantic {type(semantic).__name__}")


def camera_transform(kind: str, u: float, canvas: Canvas) -> tuple[tuple[float, float], float]:
    """Viewport offset (world px) and zoom for one camera move at progress u.

    Offsets describe viewport motion in world coordinates, so on-screen
    content moves the opposite way.
    """
    w, h = canvas.width_px, canvas.height_px
    if kind == "static":
        return (0.0, 0.0), 1.0
    if kind == "pan_left":
        return (-PAN_FRACTION * w * u, 0.0), 1.0
    if kind == "pan_right":
        return (PAN_FRACTION * w * u, 0.0), 1.0
    if kind == "tilt_up":
        return (0.0, -PAN_FRACTION * h * u), 1.0
    if kind == "tilt_down":
        return (0.0, PAN_FRACTION * h * u), 1.0
    if kind == "zoom_in":
        return (0.0, 0.0), 1.0 + ZOOM_IN_DELTA * u
    if kind == "zoom_out":
        return (0.0, 0.0), 1.0 - ZOOM_OUT_DELTA * u
    raise ValueError(f"unknown camera kind {kind!r}")


def _segment_progress(seg: Segment, frame: int) -> float:
    """Linear progress within a segment; holds 1.0 after the segment ends."""
    if frame < seg.frame_start:
        return 0.0
    if frame >= seg.frame_end:
        return 1.0
    span = seg.frame_end - seg.frame_start
    if span == 1:
        return 0.0 if seg.frame_start == 0 and frame == 0 else 1.0
    return (frame - seg.frame_start) / (span - 1)


def _object_instructions(spec: SceneSpec, timeline: Timeline) -> dict[str, list[Instruction]]:
    """Instructions per object, ordered by segment start (chain order)."""
    per_object: dict[str, list[Instruction]] = {}
    for ins in spec.instructions:
        if ins.semantic is None or isinstance(ins.semantic, CameraMove):
            continue
        if not isinstance(ins.target, ObjectTarget):
            if isinstance(ins.semantic, Hold):
                continue  # holding the whole scene is a no-op
            raise SimulationError(
                "UNBOUND_INSTRUCTION",
                f"instruction {ins.id!r} has a motion semantic but no object target")
        per_object.setdefault(ins.target.object_id, []).append(ins)
    for instructions in per_object.values():
        instructions.sort(key=lambda i: (timeline.segment_for(i.id).frame_start,
                                         i.order if i.order is not None else 0,
                                         i.id))
    return per_object


def object_pose_at_frame(obj_pose0: Pose, instructions: list[Instruction],
                         timeline: Timeline, frame: int) -> Pose:
    """Compose the object's instruction chain up to the given frame.

    Each step starts from the previous step's final pose; a step past its
    segment contributes its full motion, a step before its segment none.
    """
    pose = obj_pose0
    for ins in instructions:
        seg = timeline.segment_for(ins.id)
        u = _segment_progress(seg, frame)
        pose = pose_at(pose, ins.semantic, ins.geometry, u)
    return pose


def _camera_at_frame(camera_instructions, timeline: Timeline, frame: int,
                     canvas: Canvas) -> tuple[tuple[float, float], float]:
    offset = [0.0, 0.0]
    zoom = 1.0
    for ins in camera_instructions:
        seg = timeline.segment_for(ins.id)
        u = _segment_progress(seg, frame)
        (dx, dy), z = camera_transform(ins.semantic.kind, u, canvas)
        offset[0] += dx
        offset[1] += dy
        zoom *= z
    zoom = min(ZOOM_MAX, max(ZOOM_MIN, zoom))
    return (offset[0], offset[1]), zoom


def apply_camera(world: np.ndarray, offset: tuple[float, float], zoom: float) -> np.ndarray:
    """Resample a world frame through the camera (nearest, black borders)."""
    if offset == (0.0, 0.0) and zoom == 1.0:
        return world
    h, w = world.shape[:2]
    cx, cy = (w - 1) / 2.0, (h - 1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w]
    wx = (xs - cx) / zoom + cx + offset[0]
    wy = (ys - cy) / zoom + cy + offset[1]
    xi = np.rint(wx).astype(int)
    yi = np.rint(wy).astype(int)
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out = np.zeros_like(world)
    out[inside] = world[yi[inside], xi[inside]]
    return out


def simulate(spec: SceneSpec, frames: int, fps: int = 24,
             bake_annotations: bool = False,
             style: StyleConfig | None = None,
             rasterize: bool = True) -> SimulationResult:
    """Execute the scene's instructions and return frames plus ground truth.

    Object tracks are world-space (pre-camera). With bake_annotations the
    instruction overlay stays stamped on every frame, emulating markers
    that persist in generated video; without it frames are clean.
    """
    report = validate_scene(spec)
    if not report.ok:
        first = report.errors[0]
        raise SimulationError("INVALID_SCENE", f"{first.code} at {first.path}")
    spec = derive_semantics(spec)
    timeline = schedule_instructions(spec, frames)
    per_object = _object_instructions(spec, timeline)
    camera_instructions = [i for i in spec.instructions
                           if isinstance(i.semantic, CameraMove)]

    tracks: dict[str, list[Pose]] = {obj.id: [] for obj in spec.objects}
    offsets: list[tuple[float, float]] = []
    zooms: list[float] = []
    for f in range(frames):
        for obj in spec.objects:
            pose = object_pose_at_frame(obj.pose0, per_object.get(obj.id, []), timeline, f)
            tracks[obj.id].append(pose)
        offset, zoom = _camera_at_frame(camera_instructions, timeline, f, spec.canvas)
        offsets.append(offset)
        zooms.append(zoom)

    rasters: list[np.ndarray] = []
    if rasterize:
        overlay = None
        if bake_annotations:
            overlay = annotation_layer(spec, style or StyleConfig(),
                                       spec.canvas.width_px, spec.canvas.height_px)
        for f in range(frames):
            poses = {obj.id: tracks[obj.id][f] for obj in spec.objects}
            world = scene_composite(spec, poses)
            frame = apply_camera(world, offsets[f], zooms[f])
            if overlay is not None:
                pixels, mask, _ = overlay
                frame = frame.copy() if frame is world else frame
                frame[mask] = pixels[mask]
            rasters.append(frame)

    return SimulationResult(
        frames=rasters,
        tracks={oid: ObjectTrack(oid, tuple(poses)) for oid, poses in tracks.items()},
        camera=CameraTrack(tuple(offsets), tuple(zooms),
                           spec.canvas.width_px, spec.canvas.height_px),
        timeline=timeline,
        fps=fps,
    )


# ---------------------------------------------------------------------------
# Run directory I/O
# ---------------------------------------------------------------------------

def tracks_to_doc(result: SimulationResult) -> dict:
    return {
        "frames": result.timeline.frames,
        "fps": result.fps,
        "tracks": {
            oid: [[p.x, p.y, p.orientation, p.scale] for p in track.poses]
            for oid, track in result.tracks.items()
        },
    }


def camera_to_doc(result: SimulationResult) -> dict:
    cam = result.camera
    return {
        "frames": len(cam),
        "width_px": cam.width_px,
        "height_px": cam.height_px,
        "camera": [[cam.offsets[i][0], cam.offsets[i][1], cam.zooms[i]]
                   for i in range(len(cam))],
    }


def tracks_from_doc(doc: dict) -> dict[str, ObjectTrack]:
    tracks = {}
    for oid, rows in doc["tracks"].items():
        tracks[oid] = ObjectTrack(
            oid, tuple(Pose(x=r[0], y=r[1], orientation=r[2], scale=r[3]) for r in rows))
    return tracks


def camera_from_doc(doc: dict) -> CameraTrack:
    rows = doc["camera"]
    return CameraTrack(
        offsets=tuple((r[0], r[1]) for r in rows),
        zooms=tuple(r[2] for r in rows),
        width_px=doc["width_px"],
        height_px=doc["height_px"],
    )


def timeline_from_doc(doc: dict) -> Timeline:
    return Timeline(
        segments=tuple(Segment(s["instruction_id"], s["frame_start"], s["frame_end"])
                       for s in doc["segments"]),
        frames=doc["frames"],
    )


def write_run(result: SimulationResult, out_dir: str) -> list[str]:
    """Write frames/frame_%05d.png, tracks.json, camera.json, timeline.json.

    Returns the artifact paths relative to out_dir.
    """
    frames_dir = os.path.join(out_dir, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    artifacts = []
    for i, frame in enumerate(result.frames):
        name = FRAME_FILE_PATTERN % i
        with open(os.path.join(frames_dir, name), "wb") as fh:
            fh.write(encode_png(frame))
        artifacts.append(f"frames/{name}")
    for name, doc in (("tracks.json", tracks_to_doc(result)),
                      ("camera.json", camera_to_doc(result)),
                      ("timeline.json", result.timeline.to_doc())):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        artifacts.append(name)
    return artifacts
