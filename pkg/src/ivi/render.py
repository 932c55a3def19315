"""Deterministic annotation renderer.

Composites instruction overlays (labels, numbered badges, arrowheads,
curves, dashed trajectories, banner strip, panel grids) onto the seed
frame. Output pixels are a pure function of the canonical scene bytes, the
style, and the seed frame bytes; renders are byte-identical across runs
and platforms. Alongside the pixels, a boolean annotation mask records
every pixel any annotation ink or halo touched.
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import glyphs, raster
from .scene import (
    CameraMove,
    CurvedArrow,
    DiscSprite,
    Instruction,
    ObjectLayer,
    PanelRef,
    PatchSprite,
    PathGeometry,
    Pose,
    RectSprite,
    SceneError,
    SceneSpec,
    StraightArrow,
    SyntheticFrame,
    validate_scene,
)

logger = logging.getLogger(__name__)

BANNER_MIN_HEIGHT_PX = 40
BANNER_PAD_PX = 8
PANEL_GUTTER_PX = 8

RGB = tuple[int, int, int]


class RenderError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class StyleConfig:
    """Annotation styling; defaults favor contrast against arbitrary photos."""
    ink: RGB = (255, 42, 42)
    halo: RGB = (255, 255, 255)
    halo_radius_px: int = 2
    shaft_width_px: int = 4
    arrowhead_min_len_px: float = 12.0
    arrowhead_len_frac: float = 0.15
    arrowhead_half_angle_deg: float = 25.0
    dash_on_px: float = 8.0
    dash_off_px: float = 6.0
    badge_radius_px: int = 14
    font_scale: int = 2  # integer multiple of the 8x16 glyph cell

    def __post_init__(self):
        if self.font_scale < 1 or int(self.font_scale) != self.font_scale:
            raise ValueError("font_scale must be an integer >= 1")
        for name in ("halo_radius_px", "shaft_width_px", "badge_radius_px"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_doc(cls, doc: dict) -> "StyleConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown style fields: {sorted(unknown)}")
        coerced = dict(doc)
        for key in ("ink", "halo"):
            if key in coerced:
                coerced[key] = tuple(int(v) for v in coerced[key])
        return cls(**coerced)


@dataclass
class AnnotatedFrame:
    """Rendered RGB raster plus the 1-bit annotation coverage mask."""
    pixels: np.ndarray  # H x W x 3 uint8
    annotation_mask: np.ndarray  # H x W bool

    def __post_init__(self):
        if self.pixels.shape[:2] != self.annotation_mask.shape:
            raise ValueError("pixels and mask dimensions differ")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def png_bytes(self) -> bytes:
        return encode_png(self.pixels)

    def mask_png_bytes(self) -> bytes:
        return encode_png(mask_to_u8(self.annotation_mask))


def encode_png(pixels: np.ndarray) -> bytes:
    buf = io.BytesIO()
    if pixels.ndim == 2:
        Image.fromarray(pixels, mode="L").save(buf, format="PNG")
    else:
        Image.fromarray(pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def mask_to_u8(mask: np.ndarray) -> np.ndarray:
    return np.where(mask, 255, 0).astype(np.uint8)


def load_frame_pixels(source, canvas_w: int, canvas_h: int) -> np.ndarray:
    """Load or synthesize the seed frame, resized to canvas dimensions."""
    if isinstance(source, SyntheticFrame):
        pixels = np.empty((canvas_h, canvas_w, 3), dtype=np.uint8)
        pixels[:, :] = source.background_color
        return pixels
    try:
        with Image.open(source.path) as im:
            im = im.convert("RGB")
            if im.size != (canvas_w, canvas_h):
                im = im.resize((canvas_w, canvas_h), Image.BILINEAR)
            return np.asarray(im, dtype=np.uint8).copy()
    except (OSError, ValueError) as exc:
        raise RenderError("FRAME_LOAD", f"cannot load frame {source.path!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# Scene composite (seed frame + object sprites, no annotations)
# ---------------------------------------------------------------------------

def draw_sprite(pixels: np.ndarray, obj: ObjectLayer, pose: Pose) -> None:
    """Stamp one object layer at the given pose (nearest-neighbor, hard edges)."""
    sprite = obj.sprite
    if isinstance(sprite, DiscSprite):
        mask = raster.new_mask(pixels.shape[1], pixels.shape[0])
        raster.fill_disc(mask, (pose.x, pose.y), sprite.radius_px * pose.scale)
        pixels[mask] = sprite.color
    elif isinstance(sprite, RectSprite):
        mask = raster.new_mask(pixels.shape[1], pixels.shape[0])
        raster.fill_rotated_rect(mask, (pose.x, pose.y),
                                 sprite.width_px * pose.scale,
                                 sprite.height_px * pose.scale,
                                 pose.orientation)
        pixels[mask] = sprite.color
    else:
        _draw_patch(pixels, sprite, pose)


def _draw_patch(pixels: np.ndarray, sprite: PatchSprite, pose: Pose) -> None:
    try:
        with Image.open(sprite.path) as im:
            patch = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise RenderError("FRAME_LOAD", f"cannot load patch {sprite.path!r}: {exc}") from exc
    ph, pw = patch.shape[:2]
    h, w = pixels.shape[:2]
    half_diag = 0.5 * math.hypot(pw, ph) * pose.scale
    xa = max(0, int(math.floor(pose.x - half_diag)))
    ya = max(0, int(math.floor(pose.y - half_diag)))
    xb = min(w - 1, int(math.ceil(pose.x + half_diag)))
    yb = min(h - 1, int(math.ceil(pose.y + half_diag)))
    if xb < xa or yb < ya:
        return
    ys, xs = np.mgrid[ya:yb + 1, xa:xb + 1]
    dx = (xs - pose.x) / pose.scale
    dy = (ys - pose.y) / pose.scale
    c, s = math.cos(pose.orientation), math.sin(pose.orientation)
    u = dx * c + dy * s + pw / 2.0
    v = -dx * s + dy * c + ph / 2.0
    ui = np.floor(u).astype(int)
    vi = np.floor(v).astype(int)
    inside = (ui >= 0) & (ui < pw) & (vi >= 0) & (vi < ph)
    region = pixels[ya:yb + 1, xa:xb + 1]
    region[inside] = patch[vi[inside], ui[inside]]


def scene_composite(spec: SceneSpec, poses: dict[str, Pose] | None = None) -> np.ndarray:
    """Seed frame with all object sprites stamped on top (no annotations)."""
    if spec.panels:
        pixels, _ = _panel_composite(spec.panels)
    else:
        pixels = load_frame_pixels(spec.seed_frame, spec.canvas.width_px,
                                   spec.canvas.height_px)
    for obj in spec.objects:
        pose = poses.get(obj.id, obj.pose0) if poses else obj.pose0
        draw_sprite(pixels, obj, pose)
    return pixels


def _panel_composite(panels: tuple[PanelRef, ...]) -> tuple[np.ndarray, tuple[int, int]]:
    cells = [p.grid_cell for p in panels]
    rows = max(c[0] for c in cells) + 1
    cols = max(c[1] for c in cells) + 1
    if len(set(cells)) != rows * cols:
        raise RenderError("GRID_SPARSE", f"panel grid {rows}x{cols} has missing cells")
    first = panels[0]
    if isinstance(first.frame, SyntheticFrame):
        # synthetic panels have no intrinsic size; use a square default
        cw, ch = 320, 320
    else:
        try:
            with Image.open(first.frame.path) as im:
                cw, ch = im.size
        except (OSError, ValueError) as exc:
            raise RenderError("FRAME_LOAD", str(exc)) from exc
    width = cols * cw + PANEL_GUTTER_PX * (cols - 1)
    height = rows * ch + PANEL_GUTTER_PX * (rows - 1)
    pixels = np.zeros((height, width, 3), dtype=np.uint8)  # black gutters
    for panel in panels:
        r, c = panel.grid_cell
        tile = load_frame_pixels(panel.frame, cw, ch)
        y0 = r * (ch + PANEL_GUTTER_PX)
        x0 = c * (cw + PANEL_GUTTER_PX)
        pixels[y0:y0 + ch, x0:x0 + cw] = tile
    return pixels, (cw, ch)


# ---------------------------------------------------------------------------
# Annotation drawing
# ---------------------------------------------------------------------------

def _paint(pixels: np.ndarray, total_mask: np.ndarray, ink_mask: np.ndarray,
           style: StyleConfig) -> None:
    """Halo-then-ink layering for one annotation element."""
    halo_mask = raster.dilate(ink_mask, style.halo_radius_px)
    pixels[halo_mask] = style.halo
    pixels[ink_mask] = style.ink
    total_mask |= halo_mask


def _curve_points(geom: CurvedArrow) -> np.ndarray:
    return raster.quad_bezier_points(geom.start, geom.control, geom.end)


def _spline_points(points) -> np.ndarray:
    """Flatten a quadratic-spline trajectory into a dense polyline.

    The curve starts at the first anchor, ends at the last, and smooths
    interior anchors by treating them as Bezier controls between the
    midpoints of consecutive anchor pairs.
    """
    pts = [np.asarray(p, dtype=np.float64) for p in points]
    if len(pts) == 2:
        return np.stack([pts[0], pts[1]])
    out = []
    current = pts[0]
    for i in range(1, len(pts) - 1):
        end = (pts[i] + pts[i + 1]) / 2.0 if i < len(pts) - 2 else pts[-1]
        seg = raster.quad_bezier_points(tuple(current), tuple(pts[i]), tuple(end))
        out.append(seg if not out else seg[1:])
        current = end
    return np.concatenate(out, axis=0)


def flatten_path(geom: PathGeometry) -> np.ndarray:
    """Dense Nx2 polyline along the trajectory, honoring interpolation mode."""
    if geom.interpolation == "quadratic-spline":
        return _spline_points(geom.points)
    return np.asarray(geom.points, dtype=np.float64)


def _draw_straight_arrow(ink: np.ndarray, geom: StraightArrow, style: StyleConfig) -> None:
    raster.stroke_segment(ink, geom.tail, geom.head, style.shaft_width_px)
    direction = (geom.head[0] - geom.tail[0], geom.head[1] - geom.tail[1])
    tri = raster.arrowhead_triangle(geom.head, direction, geom.length,
                                    style.arrowhead_min_len_px,
                                    style.arrowhead_len_frac,
                                    style.arrowhead_half_angle_deg)
    raster.fill_triangle(ink, *tri)


def _draw_curved_arrow(ink: np.ndarray, geom: CurvedArrow, style: StyleConfig) -> None:
    pts = _curve_points(geom)
    raster.stroke_polyline(ink, pts, style.shaft_width_px)
    arc_len = float(raster.polyline_cumlen(pts)[-1])
    tangent = pts[-1] - pts[-2]
    tri = raster.arrowhead_triangle(tuple(pts[-1]), (float(tangent[0]), float(tangent[1])),
                                    arc_len,
                                    style.arrowhead_min_len_px,
                                    style.arrowhead_len_frac,
                                    style.arrowhead_half_angle_deg)
    raster.fill_triangle(ink, *tri)


def _draw_path(ink: np.ndarray, geom: PathGeometry, style: StyleConfig) -> None:
    pts = flatten_path(geom)
    raster.dash_polyline(ink, pts, style.shaft_width_px,
                         style.dash_on_px, style.dash_off_px)


def _draw_label(ink: np.ndarray, ins: Instruction, style: StyleConfig) -> bool:
    """Label text at the anchor plus the order badge; returns clip flag."""
    scale = style.font_scale
    clipped = raster.blit_text(ink, ins.label_anchor, ins.text, scale)
    if ins.order is not None:
        digits = str(ins.order)
        r = style.badge_radius_px
        line_h = glyphs.line_height_px(scale)
        cx = ins.label_anchor[0] - r - 6
        cy = ins.label_anchor[1] + line_h / 2.0
        raster.fill_disc(ink, (cx, cy), r)
        digit_scale = scale
        while digit_scale > 1 and glyphs.text_width_px(digits, digit_scale) > 1.6 * r:
            digit_scale -= 1
        tw = glyphs.text_width_px(digits, digit_scale)
        th = glyphs.line_height_px(digit_scale)
        # digits are punched out of the badge disc so they read in halo color
        digit_mask = raster.new_mask(ink.shape[1], ink.shape[0])
        raster.blit_text(digit_mask, (cx - tw / 2.0, cy - th / 2.0), digits, digit_scale)
        ink[digit_mask] = False
    return clipped


def wrap_text(text: str, width_px: int, scale: int, pad_px: int = BANNER_PAD_PX) -> list[str]:
    """Greedy word wrap against the glyph atlas metrics; hard-breaks long words."""
    usable = max(glyphs.CELL_W * scale, width_px - 2 * pad_px)
    max_chars = max(1, usable // (glyphs.CELL_W * scale))
    lines: list[str] = []
    for raw_line in text.split("\n"):
        words = raw_line.split(" ")
        line = ""
        for word in words:
            while len(word) > max_chars:
                space_left = max_chars - len(line) - (1 if line else 0)
                if space_left >= 1:
                    take = word[:space_left]
                    line = (line + " " + take) if line else take
                    word = word[space_left:]
                lines.append(line)
                line = ""
                if len(word) <= max_chars:
                    break
            if not word:
                continue
            candidate = (line + " " + word) if line else word
            if len(candidate) <= max_chars:
                line = candidate
            else:
                lines.append(line)
                line = word
        lines.append(line)
    return lines or [""]


def banner_height_px(lines: int, style: StyleConfig) -> int:
    return max(BANNER_MIN_HEIGHT_PX,
               lines * glyphs.line_height_px(style.font_scale) + 2 * BANNER_PAD_PX)


def render_banner(text: str, width_px: int, style: StyleConfig | None = None) -> np.ndarray:
    """White strip with black left-aligned text, wrapped to the given width."""
    if not text.strip():
        raise ValueError("banner text must be non-empty")
    style = style or StyleConfig()
    scale = style.font_scale
    lines = wrap_text(text, width_px, scale)
    height = banner_height_px(len(lines), style)
    strip = np.full((height, width_px, 3), 255, dtype=np.uint8)
    mask = raster.new_mask(width_px, height)
    y = BANNER_PAD_PX
    for line in lines:
        raster.blit_text(mask, (BANNER_PAD_PX, y), line, scale)
        y += glyphs.line_height_px(scale)
    strip[mask] = (0, 0, 0)
    return strip


def annotation_layer(spec: SceneSpec, style: StyleConfig,
                     width: int, height: int) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """In-frame annotation ink for all instructions, on a transparent layer.

    Returns (overlay copy source pixels, coverage mask, warnings). Camera
    commands produce no in-frame ink: per the generation protocol their
    text rides in the banner strip, not the scene.
    """
    pixels = np.zeros((height, width, 3), dtype=np.uint8)
    total_mask = raster.new_mask(width, height)
    warnings: list[str] = []
    for ins in sorted(spec.instructions, key=lambda i: i.id):
        if isinstance(ins.semantic, CameraMove):
            continue
        ink = raster.new_mask(width, height)
        if isinstance(ins.geometry, StraightArrow):
            _draw_straight_arrow(ink, ins.geometry, style)
        elif isinstance(ins.geometry, CurvedArrow):
            _draw_curved_arrow(ink, ins.geometry, style)
        elif isinstance(ins.geometry, PathGeometry):
            _draw_path(ink, ins.geometry, style)
        if _draw_label(ink, ins, style):
            warnings.append(f"LABEL_OVERFLOW: instruction {ins.id!r} label clipped at canvas edge")
        _paint(pixels, total_mask, ink, style)
    return pixels, total_mask, warnings


def render_annotations(spec: SceneSpec, style: StyleConfig | None = None) -> AnnotatedFrame:
    """Composite the scene and overlay every instruction annotation.

    The banner, when present, extends the canvas upward so no scene pixel
    is occluded. Instructions draw in id order (the canonical order), each
    as a halo pass then an ink pass.
    """
    style = style or StyleConfig()
    report = validate_scene(spec)
    if not report.ok:
        first = report.errors[0]
        raise SceneError("INVALID_SCENE",
                         f"cannot render invalid scene: {first.code} at {first.path}",
                         first.path)
    if spec.panels:
        return compose_panels(spec.panels, spec, style)

    composite = scene_composite(spec)
    height, width = composite.shape[:2]
    overlay, mask, warnings = annotation_layer(spec, style, width, height)
    pixels = composite.copy()
    pixels[mask] = overlay[mask]
    for message in warnings:
        logger.warning(message)

    if spec.banner is not None:
        strip = render_banner(spec.banner.text, width, style)
        pixels = np.concatenate([strip, pixels], axis=0)
        strip_mask = np.ones((strip.shape[0], width), dtype=bool)
        mask = np.concatenate([strip_mask, mask], axis=0)

    return AnnotatedFrame(pixels=pixels, annotation_mask=mask)


def annotation_mask(spec: SceneSpec, style: StyleConfig | None = None) -> np.ndarray:
    """The mask component of render_annotations, as a standalone product."""
    return render_annotations(spec, style).annotation_mask


def compose_panels(panels, spec: SceneSpec, style: StyleConfig | None = None) -> AnnotatedFrame:
    """Render a multi-seed-frame grid with the spec's annotations on top.

    Panels sit in a row-major grid with 8 px black gutters; panel labels
    render in each cell's top-left; instruction coordinates are read in
    composed-canvas space.
    """
    style = style or StyleConfig()
    panels = tuple(panels)
    if not panels:
        raise RenderError("GRID_SPARSE", "no panels given")
    composite, (cw, ch) = _panel_composite(panels)
    height, width = composite.shape[:2]
    for obj in spec.objects:
        draw_sprite(composite, obj, obj.pose0)

    mask = raster.new_mask(width, height)
    pixels = composite.copy()
    for panel in panels:
        if not panel.label:
            continue
        r, c = panel.grid_cell
        anchor = (c * (cw + PANEL_GUTTER_PX) + 4, r * (ch + PANEL_GUTTER_PX) + 4)
        ink = raster.new_mask(width, height)
        raster.blit_text(ink, anchor, panel.label, style.font_scale)
        _paint(pixels, mask, ink, style)

    overlay, ins_mask, warnings = annotation_layer(spec, style, width, height)
    pixels[ins_mask] = overlay[ins_mask]
    mask |= ins_mask
    for message in warnings:
        logger.warning(message)

    if spec.banner is not None:
        strip = render_banner(spec.banner.text, width, style)
        pixels = np.concatenate([strip, pixels], axis=0)
        mask = np.concatenate([np.ones((strip.shape[0], width), dtype=bool), mask], axis=0)

    return AnnotatedFrame(pixels=pixels, annotation_mask=mask)
