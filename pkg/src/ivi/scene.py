"""Domain model for instruction-annotated scenes.

A scene couples a seed frame with object layers and a list of visual
instructions (text commands, arrows, trajectories, ordered steps). This
module owns the value types, structural validation, the canonical byte
encoding used for hashing and storage, and the derivation of
machine-readable motion semantics from drawn geometry.

All types are immutable; every operation here is a pure function.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Union

SPEC_VERSION = "1"

CAMERA_KINDS = (
    "static",
    "pan_left",
    "pan_right",
    "tilt_down",
    "tilt_up",
    "zoom_in",
    "zoom_out",
)

MIN_CANVAS_PX = 64
MIN_ARROW_LEN_PX = 4.0
MAX_INSTRUCTION_TEXT = 120
MAX_BANNER_TEXT = 200

# |2*signed_area| below this means the three curved-arrow points have no
# circumcenter.
COLINEAR_EPS = 1e-6

XY = tuple[float, float]
RGB = tuple[int, int, int]


class SceneError(Exception):
    """Raised when an operation is applied to a scene that breaks its contract."""

    def __init__(self, code: str, message: str, path: str = "$"):
        self.code = code
        self.path = path
        super().__init__(f"{code} at {path}: {message}")


def normalize_angle(theta: float) -> float:
    """Map an angle in radians into (-pi, pi]."""
    t = math.fmod(theta, 2.0 * math.pi)
    if t <= -math.pi:
        t += 2.0 * math.pi
    elif t > math.pi:
        t -= 2.0 * math.pi
    return t


def _xy(p) -> XY:
    return (float(p[0]), float(p[1]))


def _rgb(c) -> RGB:
    return (int(c[0]), int(c[1]), int(c[2]))


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Canvas:
    width_px: int
    height_px: int


@dataclass(frozen=True)
class ImageFrame:
    """Seed frame loaded from a raster file on disk."""
    path: str


@dataclass(frozen=True)
class SyntheticFrame:
    """Flat-color seed frame sized from the canvas."""
    background_color: RGB

    def __post_init__(self):
        object.__setattr__(self, "background_color", _rgb(self.background_color))


FrameSource = Union[ImageFrame, SyntheticFrame]


@dataclass(frozen=True)
class DiscSprite:
    radius_px: float
    color: RGB

    def __post_init__(self):
        object.__setattr__(self, "radius_px", float(self.radius_px))
        object.__setattr__(self, "color", _rgb(self.color))


@dataclass(frozen=True)
class RectSprite:
    width_px: float
    height_px: float
    color: RGB

    def __post_init__(self):
        object.__setattr__(self, "width_px", float(self.width_px))
        object.__setattr__(self, "height_px", float(self.height_px))
        object.__setattr__(self, "color", _rgb(self.color))


@dataclass(frozen=True)
class PatchSprite:
    path: str


Sprite = Union[DiscSprite, RectSprite, PatchSprite]


@dataclass(frozen=True)
class Pose:
    """Position in pixels plus orientation (radians) and uniform scale.

    Orientation is normalized into (-pi, pi] on construction so that pose
    equality is well defined.
    """
    x: float
    y: float
    orientation: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "orientation", normalize_angle(float(self.orientation)))
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def position(self) -> XY:
        return (self.x, self.y)


@dataclass(frozen=True)
class ObjectLayer:
    id: str
    sprite: Sprite
    pose0: Pose


@dataclass(frozen=True)
class GlobalTarget:
    pass


@dataclass(frozen=True)
class PointTarget:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))


@dataclass(frozen=True)
class RegionTarget:
    """Axis-aligned rectangle, origin at its top-left corner."""
    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("x", "y", "width", "height"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class ObjectTarget:
    object_id: str


TargetBinding = Union[GlobalTarget, PointTarget, RegionTarget, ObjectTarget]


@dataclass(frozen=True)
class StraightArrow:
    tail: XY
    head: XY

    def __post_init__(self):
        object.__setattr__(self, "tail", _xy(self.tail))
        object.__setattr__(self, "head", _xy(self.head))

    @property
    def length(self) -> float:
        return math.hypot(self.head[0] - self.tail[0], self.head[1] - self.tail[1])


@dataclass(frozen=True)
class CurvedArrow:
    """Quadratic arc from start to end drawn toward the control point.

    `sense` selects which arc around the derived pivot the motion takes:
    "ccw" is the positive-angle arc in the stored frame (x right, y down).
    """
    start: XY
    end: XY
    control: XY
    sense: str = "ccw"

    def __post_init__(self):
        object.__setattr__(self, "start", _xy(self.start))
        object.__setattr__(self, "end", _xy(self.end))
        object.__setattr__(self, "control", _xy(self.control))


@dataclass(frozen=True)
class PathGeometry:
    """Trajectory through at least two anchor points."""
    points: tuple[XY, ...]
    interpolation: str = "polyline"  # or "quadratic-spline"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(_xy(p) for p in self.points))


InstructionGeometry = Union[StraightArrow, CurvedArrow, PathGeometry]


@dataclass(frozen=True)
class Translate:
    direction: XY  # unit vector
    distance_px: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _xy(self.direction))
        object.__setattr__(self, "distance_px", float(self.distance_px))


@dataclass(frozen=True)
class Rotate:
    pivot: XY
    angle_rad: float  # signed; positive is "ccw" in the stored frame

    def __post_init__(self):
        object.__setattr__(self, "pivot", _xy(self.pivot))
        object.__setattr__(self, "angle_rad", float(self.angle_rad))


@dataclass(frozen=True)
class FollowPath:
    pass


@dataclass(frozen=True)
class CameraMove:
    kind: str  # one of CAMERA_KINDS


@dataclass(frozen=True)
class Hold:
    pass


MotionSemantic = Union[Translate, Rotate, FollowPath, CameraMove, Hold]


@dataclass(frozen=True)
class Instruction:
    id: str
    text: str
    target: TargetBinding
    label_anchor: XY
    order: Optional[int] = None
    geometry: Optional[InstructionGeometry] = None
    semantic: Optional[MotionSemantic] = None

    def __post_init__(self):
        object.__setattr__(self, "label_anchor", _xy(self.label_anchor))


@dataclass(frozen=True)
class BannerSpec:
    """Caption strip prepended above the frame; carries a global command."""
    text: str


@dataclass(frozen=True)
class PanelRef:
    frame: FrameSource
    grid_cell: tuple[int, int]  # (row, col)
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "grid_cell", (int(self.grid_cell[0]), int(self.grid_cell[1])))


@dataclass(frozen=True)
class SceneSpec:
    canvas: Canvas
    seed_frame: FrameSource
    objects: tuple[ObjectLayer, ...] = ()
    instructions: tuple[Instruction, ...] = ()
    banner: Optional[BannerSpec] = None
    panels: Optional[tuple[PanelRef, ...]] = None
    spec_version: str = SPEC_VERSION

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "instructions", tuple(self.instructions))
        if self.panels is not None:
            object.__setattr__(self, "panels", tuple(self.panels))

    def object_by_id(self, object_id: str) -> Optional[ObjectLayer]:
        for obj in self.objects:
            if obj.id == object_id:
                return obj
        return None

    def instruction_by_id(self, instruction_id: str) -> Optional[Instruction]:
        for ins in self.instructions:
            if ins.id == instruction_id:
                return ins
        return None


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationIssue:
    severity: str  # "error" | "warning"
    code: str
    path: str
    message: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def errors(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "error"]

    @property
    def warnings(self) -> list[ValidationIssue]:
        return [i for i in self.issues if i.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_doc(self) -> list[dict]:
        return [
            {"severity": i.severity, "code": i.code, "path": i.path, "message": i.message}
            for i in self.issues
        ]


def _in_bounds(p: XY, canvas: Canvas) -> bool:
    return 0.0 <= p[0] < canvas.width_px and 0.0 <= p[1] < canvas.height_px


def validate_scene(spec: SceneSpec) -> ValidationReport:
    """Check every scene invariant; errors and warnings come back as data."""
    report = ValidationReport()

    def err(code, path, message):
        report.issues.append(ValidationIssue("error", code, path, message))

    def warn(code, path, message):
        report.issues.append(ValidationIssue("warning", code, path, message))

    if spec.spec_version != SPEC_VERSION:
        err("BAD_VERSION", "$.spec_version", f"unsupported spec_version {spec.spec_version!r}")

    canvas = spec.canvas
    if canvas.width_px < MIN_CANVAS_PX or canvas.height_px < MIN_CANVAS_PX:
        err("CANVAS_TOO_SMALL", "$.canvas",
            f"canvas must be at least {MIN_CANVAS_PX}x{MIN_CANVAS_PX}, "
            f"got {canvas.width_px}x{canvas.height_px}")

    seen_obj_ids: set[str] = set()
    for i, obj in enumerate(spec.objects):
        path = f"$.objects[{i}]"
        if obj.id in seen_obj_ids:
            err("DUPLICATE_ID", path + ".id", f"object id {obj.id!r} repeats")
        seen_obj_ids.add(obj.id)
        if obj.pose0.scale <= 0:
            err("SCALE_NOT_POSITIVE", path + ".pose0.scale", "pose scale must be > 0")
            continue
        _validate_sprite(obj, canvas, path, err, warn)

    seen_ins_ids: set[str] = set()
    seen_orders: set[int] = set()
    for i, ins in enumerate(spec.instructions):
        path = f"$.instructions[{i}]"
        if ins.id in seen_ins_ids:
            err("DUPLICATE_ID", path + ".id", f"instruction id {ins.id!r} repeats")
        seen_ins_ids.add(ins.id)

        if not ins.text.strip():
            err("EMPTY_TEXT", path + ".text", "instruction text is empty after trimming")
        if len(ins.text) > MAX_INSTRUCTION_TEXT:
            err("TEXT_TOO_LONG", path + ".text",
                f"instruction text exceeds {MAX_INSTRUCTION_TEXT} chars")

        if ins.order is not None:
            if ins.order < 1:
                err("ORDER_NOT_POSITIVE", path + ".order", "order index must be >= 1")
            elif ins.order in seen_orders:
                err("DUPLICATE_ORDER", path + ".order", f"order index {ins.order} repeats")
            seen_orders.add(ins.order)

        _validate_target(ins.target, spec, canvas, path + ".target", err)
        if ins.geometry is not None:
            _validate_geometry(ins.geometry, canvas, path + ".geometry", err)
        if not _in_bounds(ins.label_anchor, canvas):
            err("COORD_OUT_OF_BOUNDS", path + ".label_anchor",
                "label anchor lies outside the canvas")

        if ins.semantic is not None:
            _validate_semantic(ins, path, err)
        elif ins.geometry is None:
            warn("NO_MOTION_HINT", path,
                 "instruction has neither geometry nor a motion semantic")

    if spec.panels is not None:
        _validate_panels(spec.panels, err)

    if spec.banner is not None:
        if not spec.banner.text.strip():
            err("EMPTY_TEXT", "$.banner.text", "banner text is empty")
        if len(spec.banner.text) > MAX_BANNER_TEXT:
            err("TEXT_TOO_LONG", "$.banner.text",
                f"banner text exceeds {MAX_BANNER_TEXT} chars")

    return report


def sprite_corners(obj: ObjectLayer, patch_size: Optional[tuple[int, int]] = None) -> list[XY]:
    """Extreme points of the sprite footprint at pose0 (for bounds checks)."""
    pose = obj.pose0
    sp = obj.sprite
    if isinstance(sp, DiscSprite):
        r = sp.radius_px * pose.scale
        return [(pose.x - r, pose.y - r), (pose.x + r, pose.y + r),
                (pose.x - r, pose.y + r), (pose.x + r, pose.y - r)]
    if isinstance(sp, RectSprite):
        w, h = sp.width_px, sp.height_px
    else:
        if patch_size is None:
            return []
        w, h = patch_size
    c, s = math.cos(pose.orientation), math.sin(pose.orientation)
    out = []
    for dx, dy in ((-w / 2, -h / 2), (w / 2, -h / 2), (w / 2, h / 2), (-w / 2, h / 2)):
        dx *= pose.scale
        dy *= pose.scale
        out.append((pose.x + dx * c - dy * s, pose.y + dx * s + dy * c))
    return out


def _validate_sprite(obj: ObjectLayer, canvas: Canvas, path: str, err, warn) -> None:
    sp = obj.sprite
    if isinstance(sp, DiscSprite) and sp.radius_px <= 0:
        err("NONPOSITIVE_SPRITE_DIM", path + ".sprite.radius_px", "disc radius must be > 0")
        return
    if isinstance(sp, RectSprite) and (sp.width_px <= 0 or sp.height_px <= 0):
        err("NONPOSITIVE_SPRITE_DIM", path + ".sprite", "rect sides must be > 0")
        return
    if isinstance(sp, PatchSprite):
        if not os.path.isfile(sp.path):
            err("PATCH_UNREADABLE", path + ".sprite.path",
                f"patch file not found: {sp.path}")
        # footprint of a patch is checked at render time, once dimensions
        # are known
        return
    for corner in sprite_corners(obj):
        if not _in_bounds(corner, canvas):
            err("SPRITE_OUT_OF_BOUNDS", path,
                f"sprite extends outside the canvas at pose0 (corner {corner})")
            break


def _validate_target(target: TargetBinding, spec: SceneSpec, canvas: Canvas,
                     path: str, err) -> None:
    if isinstance(target, ObjectTarget):
        if spec.object_by_id(target.object_id) is None:
            err("UNKNOWN_OBJECT", path + ".object_id",
                f"target references unknown object {target.object_id!r}")
    elif isinstance(target, PointTarget):
        if not _in_bounds((target.x, target.y), canvas):
            err("COORD_OUT_OF_BOUNDS", path, "target point lies outside the canvas")
    elif isinstance(target, RegionTarget):
        if target.width <= 0 or target.height <= 0:
            err("REGION_EMPTY", path, "target region must have positive area")
        elif not (_in_bounds((target.x, target.y), canvas)
                  and _in_bounds((target.x + target.width, target.y + target.height), canvas)):
            err("COORD_OUT_OF_BOUNDS", path, "target region extends outside the canvas")


def _validate_geometry(geom: InstructionGeometry, canvas: Canvas, path: str, err) -> None:
    if isinstance(geom, StraightArrow):
        if geom.length < MIN_ARROW_LEN_PX:
            err("DEGENERATE_ARROW", path,
                f"arrow length {geom.length:.3g} px is below {MIN_ARROW_LEN_PX} px")
        for name, p in (("tail", geom.tail), ("head", geom.head)):
            if not _in_bounds(p, canvas):
                err("COORD_OUT_OF_BOUNDS", f"{path}.{name}", f"arrow {name} outside canvas")
    elif isinstance(geom, CurvedArrow):
        if geom.sense not in ("cw", "ccw"):
            err("BAD_SENSE", path + ".sense", f"sense must be cw or ccw, got {geom.sense!r}")
        for name, p in (("start", geom.start), ("end", geom.end), ("control", geom.control)):
            if not _in_bounds(p, canvas):
                err("COORD_OUT_OF_BOUNDS", f"{path}.{name}", f"curve {name} outside canvas")
    elif isinstance(geom, PathGeometry):
        if len(geom.points) < 2:
            err("PATH_TOO_SHORT", path + ".points", "path needs at least 2 anchor points")
        if geom.interpolation not in ("polyline", "quadratic-spline"):
            err("BAD_INTERPOLATION", path + ".interpolation",
                f"unknown interpolation {geom.interpolation!r}")
        for i, p in enumerate(geom.points):
            if not _in_bounds(p, canvas):
                err("COORD_OUT_OF_BOUNDS", f"{path}.points[{i}]", "path point outside canvas")
            if i > 0 and p == geom.points[i - 1]:
                err("DUPLICATE_PATH_POINT", f"{path}.points[{i}]",
                    "consecutive path points must be distinct")


def _validate_semantic(ins: Instruction, path: str, err) -> None:
    sem = ins.semantic
    if isinstance(sem, Translate):
        norm = math.hypot(*sem.direction)
        if abs(norm - 1.0) > 1e-9:
            err("BAD_DIRECTION_NORM", path + ".semantic.direction",
                f"direction norm {norm!r} is not 1 within 1e-9")
        if sem.distance_px < 0:
            err("NEGATIVE_DISTANCE", path + ".semantic.distance_px",
                "translate distance must be >= 0")
    elif isinstance(sem, FollowPath):
        if not isinstance(ins.geometry, PathGeometry):
            err("SEMANTIC_GEOMETRY_MISMATCH", path + ".semantic",
                "follow-path semantic requires path geometry")
    elif isinstance(sem, CameraMove):
        if sem.kind not in CAMERA_KINDS:
            err("BAD_CAMERA_KIND", path + ".semantic.kind",
                f"camera kind must be one of {CAMERA_KINDS}, got {sem.kind!r}")
        if not isinstance(ins.target, GlobalTarget):
            err("CAMERA_NEEDS_GLOBAL", path + ".target",
                "camera-move instructions must target the whole scene")


def _validate_panels(panels: tuple[PanelRef, ...], err) -> None:
    cells = [p.grid_cell for p in panels]
    seen = set()
    for i, cell in enumerate(cells):
        if cell in seen:
            err("DUPLICATE_GRID_CELL", f"$.panels[{i}].grid_cell",
                f"grid cell {cell} repeats")
        seen.add(cell)
        if cell[0] < 0 or cell[1] < 0:
            err("GRID_SPARSE", f"$.panels[{i}].grid_cell", "grid cells must be non-negative")
    if not cells:
        return
    rows = max(c[0] for c in cells) + 1
    cols = max(c[1] for c in cells) + 1
    if len(seen) != rows * cols:
        err("GRID_SPARSE", "$.panels",
            f"panel grid {rows}x{cols} has missing cells")


# ---------------------------------------------------------------------------
# Canonical encoding and hashing
# ---------------------------------------------------------------------------

def _frame_doc(frame: FrameSource) -> dict:
    if isinstance(frame, ImageFrame):
        return {"kind": "image_file", "path": frame.path}
    return {"kind": "synthetic", "background_color": list(frame.background_color)}


def _sprite_doc(sprite: Sprite) -> dict:
    if isinstance(sprite, DiscSprite):
        return {"kind": "disc", "radius_px": float(sprite.radius_px),
                "color": list(sprite.color)}
    if isinstance(sprite, RectSprite):
        return {"kind": "rect", "width_px": float(sprite.width_px),
                "height_px": float(sprite.height_px), "color": list(sprite.color)}
    return {"kind": "patch", "path": sprite.path}


def _pose_doc(pose: Pose) -> dict:
    return {"x": pose.x, "y": pose.y, "orientation": pose.orientation, "scale": pose.scale}


def _target_doc(target: TargetBinding) -> dict:
    if isinstance(target, GlobalTarget):
        return {"kind": "global"}
    if isinstance(target, PointTarget):
        return {"kind": "point", "x": target.x, "y": target.y}
    if isinstance(target, RegionTarget):
        return {"kind": "region", "x": target.x, "y": target.y,
                "width": target.width, "height": target.height}
    return {"kind": "object", "object_id": target.object_id}


def _geometry_doc(geom: InstructionGeometry) -> dict:
    if isinstance(geom, StraightArrow):
        return {"kind": "straight_arrow", "tail": list(geom.tail), "head": list(geom.head)}
    if isinstance(geom, CurvedArrow):
        return {"kind": "curved_arrow", "start": list(geom.start), "end": list(geom.end),
                "control": list(geom.control), "sense": geom.sense}
    return {"kind": "path", "points": [list(p) for p in geom.points],
            "interpolation": geom.interpolation}


def _semantic_doc(sem: MotionSemantic) -> dict:
    if isinstance(sem, Translate):
        return {"kind": "translate", "direction": list(sem.direction),
                "distance_px": sem.distance_px}
    if isinstance(sem, Rotate):
        return {"kind": "rotate", "pivot": list(sem.pivot), "angle_rad": sem.angle_rad}
    if isinstance(sem, FollowPath):
        return {"kind": "follow_path"}
    if isinstance(sem, CameraMove):
        return {"kind": "camera_move", "camera": sem.kind}
    return {"kind": "hold"}


def scene_to_doc(spec: SceneSpec, sort: bool = False) -> dict:
    """Plain-JSON document for a scene; optional None fields are omitted."""
    objects = spec.objects
    instructions = spec.instructions
    if sort:
        objects = tuple(sorted(objects, key=lambda o: o.id))
        instructions = tuple(sorted(instructions, key=lambda i: i.id))

    doc: dict = {
        "spec_version": spec.spec_version,
        "canvas": {"width_px": spec.canvas.width_px, "height_px": spec.canvas.height_px},
        "seed_frame": _frame_doc(spec.seed_frame),
        "objects": [
            {"id": o.id, "sprite": _sprite_doc(o.sprite), "pose0": _pose_doc(o.pose0)}
            for o in objects
        ],
        "instructions": [],
    }
    for ins in instructions:
        ins_doc: dict = {
            "id": ins.id,
            "text": ins.text,
            "target": _target_doc(ins.target),
            "label_anchor": list(ins.label_anchor),
        }
        if ins.order is not None:
            ins_doc["order"] = ins.order
        if ins.geometry is not None:
            ins_doc["geometry"] = _geometry_doc(ins.geometry)
        if ins.semantic is not None:
            ins_doc["semantic"] = _semantic_doc(ins.semantic)
        doc["instructions"].append(ins_doc)
    if spec.banner is not None:
        doc["banner"] = {"text": spec.banner.text}
    if spec.panels is not None:
        doc["panels"] = [
            {"frame": _frame_doc(p.frame),
             "grid_cell": [p.grid_cell[0], p.grid_cell[1]],
             **({"label": p.label} if p.label is not None else {})}
            for p in spec.panels
        ]
    return doc


def canonicalize(spec: SceneSpec) -> bytes:
    """Deterministic byte encoding of a valid scene.

    Object and instruction lists are sorted by id, keys sorted
    lexicographically, floats rendered in their shortest round-trip form.
    Idempotent: re-parsing and re-canonicalizing yields identical bytes.
    """
    report = validate_scene(spec)
    if not report.ok:
        first = report.errors[0]
        raise SceneError("INVALID_SCENE",
                         f"scene fails validation: {first.code} at {first.path}",
                         first.path)
    doc = scene_to_doc(spec, sort=True)
    return json.dumps(doc, sort_keys=True, ensure_ascii=False,
                      separators=(",", ":")).encode("utf-8")


def scene_hash(spec: SceneSpec) -> str:
    """SHA-256 hex digest of the canonical scene bytes."""
    return hashlib.sha256(canonicalize(spec)).hexdigest()


# ---------------------------------------------------------------------------
# Semantics derivation
# ---------------------------------------------------------------------------

def circumcenter(a: XY, b: XY, c: XY) -> XY:
    """Center of the circle through three points.

    Raises SceneError(COLINEAR_CURVE) when the points are colinear within
    COLINEAR_EPS (no circumcenter exists).
    """
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < COLINEAR_EPS:
        raise SceneError("COLINEAR_CURVE",
                         "curved-arrow points are colinear; no rotation pivot exists")
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return (ux, uy)


def arc_angle(start: XY, end: XY, pivot: XY, sense: str) -> float:
    """Signed angle swept from start to end about pivot, per drawing sense.

    "ccw" returns the positive-angle arc in (0, 2*pi]; "cw" the negative
    one in [-2*pi, 0). Angles are measured in the stored frame (y down).
    """
    a0 = math.atan2(start[1] - pivot[1], start[0] - pivot[0])
    a1 = math.atan2(end[1] - pivot[1], end[0] - pivot[0])
    if sense == "ccw":
        delta = (a1 - a0) % (2.0 * math.pi)
        return delta if delta > 0 else 2.0 * math.pi
    delta = (a0 - a1) % (2.0 * math.pi)
    return -delta if delta > 0 else -2.0 * math.pi


def derive_semantics(spec: SceneSpec) -> SceneSpec:
    """Attach a motion semantic to every geometric instruction lacking one.

    Straight arrows become translations (unit direction, pixel distance);
    curved arrows become rotations about the circumcenter of their three
    points; trajectory paths become follow-path. Explicit semantics are
    never overwritten, so the operation is idempotent.
    """
    new_instructions = []
    for ins in spec.instructions:
        if ins.semantic is not None or ins.geometry is None:
            new_instructions.append(ins)
            continue
        geom = ins.geometry
        if isinstance(geom, StraightArrow):
            dx = geom.head[0] - geom.tail[0]
            dy = geom.head[1] - geom.tail[1]
            dist = math.hypot(dx, dy)
            if dist <= 0:
                raise SceneError("INVALID_SCENE", "zero-length arrow has no direction",
                                 f"$.instructions[{ins.id}].geometry")
            sem: MotionSemantic = Translate(direction=(dx / dist, dy / dist), distance_px=dist)
        elif isinstance(geom, CurvedArrow):
            pivot = circumcenter(geom.start, geom.control, geom.end)
            sem = Rotate(pivot=pivot, angle_rad=arc_angle(geom.start, geom.end, pivot, geom.sense))
        else:
            sem = FollowPath()
        new_instructions.append(replace(ins, semantic=sem))
    return replace(spec, instructions=tuple(new_instructions))
