"""Parsing and serialization of scene-spec documents (`.ivi.json`).

The schema is closed: unknown fields are rejected so a silently ignored
annotation can never make a rendered frame diverge from author intent.
Parse failures raise SceneParseError carrying a machine-readable code, the
JSON path of the offending field, and a best-effort byte offset.
"""

from __future__ import annotations

import json
import math
from typing import Any, Union

from .scene import (
    CAMERA_KINDS,
    MAX_BANNER_TEXT,
    MAX_INSTRUCTION_TEXT,
    SPEC_VERSION,
    BannerSpec,
    CameraMove,
    Canvas,
    CurvedArrow,
    DiscSprite,
    FollowPath,
    GlobalTarget,
    Hold,
    ImageFrame,
    Instruction,
    ObjectLayer,
    ObjectTarget,
    PanelRef,
    PatchSprite,
    PathGeometry,
    PointTarget,
    Pose,
    RectSprite,
    RegionTarget,
    Rotate,
    SceneSpec,
    StraightArrow,
    SyntheticFrame,
    Translate,
    canonicalize,
)

SCENE_FILE_EXT = ".ivi.json"

PARSE_ERROR_CODES = ("MALFORMED", "UNKNOWN_FIELD", "RANGE", "MISSING_FIELD", "BAD_VERSION")


class SceneParseError(Exception):
    """A located parse failure; `code` is one of PARSE_ERROR_CODES."""

    def __init__(self, code: str, message: str, json_path: str = "$", byte_offset: int = 0):
        assert code in PARSE_ERROR_CODES
        self.code = code
        self.json_path = json_path
        self.byte_offset = byte_offset
        self.message = message
        super().__init__(f"{code} at {json_path} (byte {byte_offset}): {message}")


class _Ctx:
    """Carries the raw text so errors can report byte offsets."""

    def __init__(self, text: str):
        self.text = text

    def offset_of(self, path: str) -> int:
        # Walk the mapping keys of the path through the raw text; list
        # indices are skipped. Best effort: 0 when nothing matches.
        pos = 0
        for part in path.split(".")[1:]:
            key = part.split("[")[0]
            if not key:
                continue
            hit = self.text.find(f'"{key}"', pos)
            if hit < 0:
                break
            pos = hit
        return len(self.text[:pos].encode("utf-8"))

    def fail(self, code: str, message: str, path: str) -> SceneParseError:
        return SceneParseError(code, message, path, self.offset_of(path))


def _obj(ctx: _Ctx, value: Any, path: str, allowed: set[str], required) -> dict:
    """Closed-schema object check; `required` is ordered by report priority."""
    if not isinstance(value, dict):
        raise ctx.fail("RANGE", f"expected an object, got {type(value).__name__}", path)
    for key in value:
        if key not in allowed:
            raise ctx.fail("UNKNOWN_FIELD", f"unknown field {key!r}", f"{path}.{key}")
    for key in required:
        if key not in value:
            raise ctx.fail("MISSING_FIELD", f"missing required field {key!r}", f"{path}.{key}")
    return value


def _number(ctx: _Ctx, value: Any, path: str, *, minimum=None, maximum=None,
            exclusive_min=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ctx.fail("RANGE", f"expected a number, got {type(value).__name__}", path)
    v = float(value)
    if not math.isfinite(v):
        raise ctx.fail("RANGE", "number must be finite", path)
    if minimum is not None and v < minimum:
        raise ctx.fail("RANGE", f"value {v} is below minimum {minimum}", path)
    if exclusive_min is not None and v <= exclusive_min:
        raise ctx.fail("RANGE", f"value {v} must be > {exclusive_min}", path)
    if maximum is not None and v > maximum:
        raise ctx.fail("RANGE", f"value {v} is above maximum {maximum}", path)
    return v


def _int(ctx: _Ctx, value: Any, path: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ctx.fail("RANGE", f"expected an integer, got {type(value).__name__}", path)
    if minimum is not None and value < minimum:
        raise ctx.fail("RANGE", f"value {value} is below minimum {minimum}", path)
    return value


def _string(ctx: _Ctx, value: Any, path: str, *, min_len=0, max_len=None) -> str:
    if not isinstance(value, str):
        raise ctx.fail("RANGE", f"expected a string, got {type(value).__name__}", path)
    if len(value) < min_len:
        raise ctx.fail("RANGE", f"string shorter than {min_len} chars", path)
    if max_len is not None and len(value) > max_len:
        raise ctx.fail("RANGE", f"string longer than {max_len} chars", path)
    return value


def _enum(ctx: _Ctx, value: Any, path: str, choices) -> str:
    s = _string(ctx, value, path)
    if s not in choices:
        raise ctx.fail("RANGE", f"expected one of {sorted(choices)}, got {s!r}", path)
    return s


def _xy(ctx: _Ctx, value: Any, path: str) -> tuple[float, float]:
    if not isinstance(value, list) or len(value) != 2:
        raise ctx.fail("RANGE", "expected a [x, y] pair", path)
    return (_number(ctx, value[0], path + "[0]"),
            _number(ctx, value[1], path + "[1]"))


def _rgb(ctx: _Ctx, value: Any, path: str) -> tuple[int, int, int]:
    if not isinstance(value, list) or len(value) != 3:
        raise ctx.fail("RANGE", "expected an [r, g, b] triple", path)
    out = []
    for i, comp in enumerate(value):
        out.append(_int(ctx, comp, f"{path}[{i}]", minimum=0))
        if out[-1] > 255:
            raise ctx.fail("RANGE", f"color component {out[-1]} above 255", f"{path}[{i}]")
    return (out[0], out[1], out[2])


def _parse_frame(ctx: _Ctx, value: Any, path: str):
    node = _obj(ctx, value, path, {"kind", "path", "background_color"}, ("kind",))
    kind = _enum(ctx, node["kind"], path + ".kind", {"image_file", "synthetic"})
    if kind == "image_file":
        _obj(ctx, value, path, {"kind", "path"}, ("kind", "path"))
        return ImageFrame(path=_string(ctx, node["path"], path + ".path", min_len=1))
    _obj(ctx, value, path, {"kind", "background_color"}, ("kind", "background_color"))
    return SyntheticFrame(background_color=_rgb(ctx, node["background_color"],
                                                path + ".background_color"))


def _parse_sprite(ctx: _Ctx, value: Any, path: str):
    node = _obj(ctx, value, path,
                {"kind", "radius_px", "color", "width_px", "height_px", "path"}, ("kind",))
    kind = _enum(ctx, node["kind"], path + ".kind", {"disc", "rect", "patch"})
    if kind == "disc":
        _obj(ctx, value, path, {"kind", "radius_px", "color"}, ("kind", "radius_px", "color"))
        return DiscSprite(radius_px=_number(ctx, node["radius_px"], path + ".radius_px",
                                            exclusive_min=0),
                          color=_rgb(ctx, node["color"], path + ".color"))
    if kind == "rect":
        _obj(ctx, value, path, {"kind", "width_px", "height_px", "color"},
             ("kind", "width_px", "height_px", "color"))
        return RectSprite(width_px=_number(ctx, node["width_px"], path + ".width_px",
                                           exclusive_min=0),
                          height_px=_number(ctx, node["height_px"], path + ".height_px",
                                            exclusive_min=0),
                          color=_rgb(ctx, node["color"], path + ".color"))
    _obj(ctx, value, path, {"kind", "path"}, ("kind", "path"))
    return PatchSprite(path=_string(ctx, node["path"], path + ".path", min_len=1))


def _parse_pose(ctx: _Ctx, value: Any, path: str) -> Pose:
    node = _obj(ctx, value, path, {"x", "y", "orientation", "scale"}, ("x", "y"))
    return Pose(
        x=_number(ctx, node["x"], path + ".x"),
        y=_number(ctx, node["y"], path + ".y"),
        orientation=_number(ctx, node.get("orientation", 0.0), path + ".orientation"),
        scale=_number(ctx, node.get("scale", 1.0), path + ".scale", exclusive_min=0),
    )


def _parse_target(ctx: _Ctx, value: Any, path: str):
    node = _obj(ctx, value, path,
                {"kind", "x", "y", "width", "height", "object_id"}, ("kind",))
    kind = _enum(ctx, node["kind"], path + ".kind", {"global", "point", "region", "object"})
    if kind == "global":
        _obj(ctx, value, path, {"kind"}, ("kind",))
        return GlobalTarget()
    if kind == "point":
        _obj(ctx, value, path, {"kind", "x", "y"}, ("kind", "x", "y"))
        return PointTarget(x=_number(ctx, node["x"], path + ".x"),
                           y=_number(ctx, node["y"], path + ".y"))
    if kind == "region":
        _obj(ctx, value, path, {"kind", "x", "y", "width", "height"},
             ("kind", "x", "y", "width", "height"))
        return RegionTarget(x=_number(ctx, node["x"], path + ".x"),
                            y=_number(ctx, node["y"], path + ".y"),
                            width=_number(ctx, node["width"], path + ".width"),
                            height=_number(ctx, node["height"], path + ".height"))
    _obj(ctx, value, path, {"kind", "object_id"}, ("kind", "object_id"))
    return ObjectTarget(object_id=_string(ctx, node["object_id"], path + ".object_id",
                                          min_len=1))


def _parse_geometry(ctx: _Ctx, value: Any, path: str):
    node = _obj(ctx, value, path,
                {"kind", "tail", "head", "start", "end", "control", "sense",
                 "points", "interpolation"}, ("kind",))
    kind = _enum(ctx, node["kind"], path + ".kind", {"straight_arrow", "curved_arrow", "path"})
    if kind == "straight_arrow":
        _obj(ctx, value, path, {"kind", "tail", "head"}, ("kind", "tail", "head"))
        return StraightArrow(tail=_xy(ctx, node["tail"], path + ".tail"),
                             head=_xy(ctx, node["head"], path + ".head"))
    if kind == "curved_arrow":
        _obj(ctx, value, path, {"kind", "start", "end", "control", "sense"},
             ("kind", "start", "end", "control"))
        return CurvedArrow(start=_xy(ctx, node["start"], path + ".start"),
                           end=_xy(ctx, node["end"], path + ".end"),
                           control=_xy(ctx, node["control"], path + ".control"),
                           sense=_enum(ctx, node.get("sense", "ccw"), path + ".sense",
                                       {"cw", "ccw"}))
    _obj(ctx, value, path, {"kind", "points", "interpolation"}, ("kind", "points"))
    raw_points = node["points"]
    if not isinstance(raw_points, list) or len(raw_points) < 2:
        raise ctx.fail("RANGE", "path needs at least 2 points", path + ".points")
    points = tuple(_xy(ctx, p, f"{path}.points[{i}]") for i, p in enumerate(raw_points))
    return PathGeometry(points=points,
                        interpolation=_enum(ctx, node.get("interpolation", "polyline"),
                                            path + ".interpolation",
                                            {"polyline", "quadratic-spline"}))


def _parse_semantic(ctx: _Ctx, value: Any, path: str):
    node = _obj(ctx, value, path,
                {"kind", "direction", "distance_px", "pivot", "angle_rad", "camera"},
                ("kind",))
    kind = _enum(ctx, node["kind"], path + ".kind",
                 {"translate", "rotate", "follow_path", "camera_move", "hold"})
    if kind == "translate":
        _obj(ctx, value, path, {"kind", "direction", "distance_px"},
             ("kind", "direction", "distance_px"))
        return Translate(direction=_xy(ctx, node["direction"], path + ".direction"),
                         distance_px=_number(ctx, node["distance_px"], path + ".distance_px",
                                             minimum=0))
    if kind == "rotate":
        _obj(ctx, value, path, {"kind", "pivot", "angle_rad"}, ("kind", "pivot", "angle_rad"))
        return Rotate(pivot=_xy(ctx, node["pivot"], path + ".pivot"),
                      angle_rad=_number(ctx, node["angle_rad"], path + ".angle_rad"))
    if kind == "follow_path":
        _obj(ctx, value, path, {"kind"}, ("kind",))
        return FollowPath()
    if kind == "camera_move":
        _obj(ctx, value, path, {"kind", "camera"}, ("kind", "camera"))
        return CameraMove(kind=_enum(ctx, node["camera"], path + ".camera", set(CAMERA_KINDS)))
    _obj(ctx, value, path, {"kind"}, ("kind",))
    return Hold()


def _parse_instruction(ctx: _Ctx, value: Any, path: str) -> Instruction:
    node = _obj(ctx, value, path,
                {"id", "text", "order", "target", "geometry", "label_anchor", "semantic"},
                ("id", "text", "target", "label_anchor"))
    order = None
    if "order" in node:
        order = _int(ctx, node["order"], path + ".order", minimum=1)
    geometry = None
    if "geometry" in node:
        geometry = _parse_geometry(ctx, node["geometry"], path + ".geometry")
    semantic = None
    if "semantic" in node:
        semantic = _parse_semantic(ctx, node["semantic"], path + ".semantic")
    return Instruction(
        id=_string(ctx, node["id"], path + ".id", min_len=1),
        text=_string(ctx, node["text"], path + ".text", min_len=1,
                     max_len=MAX_INSTRUCTION_TEXT),
        target=_parse_target(ctx, node["target"], path + ".target"),
        label_anchor=_xy(ctx, node["label_anchor"], path + ".label_anchor"),
        order=order,
        geometry=geometry,
        semantic=semantic,
    )


def _parse_panel(ctx: _Ctx, value: Any, path: str) -> PanelRef:
    node = _obj(ctx, value, path, {"frame", "grid_cell", "label"}, ("frame", "grid_cell"))
    cell = node["grid_cell"]
    if not isinstance(cell, list) or len(cell) != 2:
        raise ctx.fail("RANGE", "expected a [row, col] pair", path + ".grid_cell")
    label = None
    if "label" in node:
        label = _string(ctx, node["label"], path + ".label", min_len=1)
    return PanelRef(
        frame=_parse_frame(ctx, node["frame"], path + ".frame"),
        grid_cell=(_int(ctx, cell[0], path + ".grid_cell[0]", minimum=0),
                   _int(ctx, cell[1], path + ".grid_cell[1]", minimum=0)),
        label=label,
    )


def parse_scene(data: Union[bytes, str]) -> SceneSpec:
    """Parse scene-spec bytes into a SceneSpec.

    Enforces the closed schema, field types, and value ranges; deeper
    cross-reference and geometric invariants are validate_scene's job.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    ctx = _Ctx(text)
    try:
        root = json.loads(
            text,
            parse_constant=lambda s: (_ for _ in ()).throw(ValueError(s)),
        )
    except ValueError as exc:
        pos = getattr(exc, "pos", 0) or 0
        offset = len(text[:pos].encode("utf-8"))
        raise SceneParseError("MALFORMED", f"not well-formed JSON: {exc}", "$", offset) from exc

    node = _obj(ctx, root, "$",
                {"spec_version", "canvas", "seed_frame", "banner", "objects",
                 "instructions", "panels"},
                ("spec_version", "canvas", "seed_frame"))

    version = _string(ctx, node["spec_version"], "$.spec_version")
    if version != SPEC_VERSION:
        raise ctx.fail("BAD_VERSION",
                       f"unsupported spec_version {version!r}; expected {SPEC_VERSION!r}",
                       "$.spec_version")

    canvas_node = _obj(ctx, node["canvas"], "$.canvas",
                       {"width_px", "height_px"}, ("width_px", "height_px"))
    canvas = Canvas(width_px=_int(ctx, canvas_node["width_px"], "$.canvas.width_px", minimum=1),
                    height_px=_int(ctx, canvas_node["height_px"], "$.canvas.height_px",
                                   minimum=1))

    objects = []
    raw_objects = node.get("objects", [])
    if not isinstance(raw_objects, list):
        raise ctx.fail("RANGE", "objects must be a list", "$.objects")
    for i, raw in enumerate(raw_objects):
        path = f"$.objects[{i}]"
        onode = _obj(ctx, raw, path, {"id", "sprite", "pose0"}, ("id", "sprite", "pose0"))
        objects.append(ObjectLayer(
            id=_string(ctx, onode["id"], path + ".id", min_len=1),
            sprite=_parse_sprite(ctx, onode["sprite"], path + ".sprite"),
            pose0=_parse_pose(ctx, onode["pose0"], path + ".pose0"),
        ))

    instructions = []
    raw_instructions = node.get("instructions", [])
    if not isinstance(raw_instructions, list):
        raise ctx.fail("RANGE", "instructions must be a list", "$.instructions")
    for i, raw in enumerate(raw_instructions):
        instructions.append(_parse_instruction(ctx, raw, f"$.instructions[{i}]"))

    banner = None
    if "banner" in node:
        bnode = _obj(ctx, node["banner"], "$.banner", {"text"}, ("text",))
        banner = BannerSpec(text=_string(ctx, bnode["text"], "$.banner.text",
                                         min_len=1, max_len=MAX_BANNER_TEXT))

    panels = None
    if "panels" in node:
        raw_panels = node["panels"]
        if not isinstance(raw_panels, list):
            raise ctx.fail("RANGE", "panels must be a list", "$.panels")
        panels = tuple(_parse_panel(ctx, raw, f"$.panels[{i}]")
                       for i, raw in enumerate(raw_panels))

    return SceneSpec(
        canvas=canvas,
        seed_frame=_parse_frame(ctx, node["seed_frame"], "$.seed_frame"),
        objects=tuple(objects),
        instructions=tuple(instructions),
        banner=banner,
        panels=panels,
        spec_version=version,
    )


def serialize_scene(spec: SceneSpec) -> bytes:
    """Canonical bytes for a valid scene; inverse of parse_scene."""
    return canonicalize(spec)


def load_scene(path) -> SceneSpec:
    with open(path, "rb") as fh:
        return parse_scene(fh.read())


def save_scene(spec: SceneSpec, path) -> None:
    data = serialize_scene(spec)
    with open(path, "wb") as fh:
        fh.write(data)
