"""Integer-deterministic 2D rasterization primitives.

Everything draws into boolean coverage masks; callers paint colors through
the masks. Pixel (x, y) is covered when its integer-grid sample point
satisfies the shape predicate, so identical inputs produce identical masks
on every platform. No anti-aliasing by design: golden-image tests need
byte-stable output, and the halo pass supplies the contrast.
"""

from __future__ import annotations

import math

import numpy as np

from . import glyphs

XY = tuple[float, float]

# Samples per quadratic segment when flattening curves for stroking and
# arc-length work. High enough that chord error is far below a pixel.
CURVE_SAMPLES = 256


def new_mask(width: int, height: int) -> np.ndarray:
    return np.zeros((height, width), dtype=bool)


def _clip_box(x0: float, y0: float, x1: float, y1: float,
              width: int, height: int, pad: float) -> tuple[int, int, int, int]:
    xa = max(0, int(math.floor(min(x0, x1) - pad)))
    ya = max(0, int(math.floor(min(y0, y1) - pad)))
    xb = min(width - 1, int(math.ceil(max(x0, x1) + pad)))
    yb = min(height - 1, int(math.ceil(max(y0, y1) + pad)))
    return xa, ya, xb, yb


def stroke_segment(mask: np.ndarray, a: XY, b: XY, width_px: float) -> None:
    """Mark pixels within width_px/2 of segment ab (round caps)."""
    h, w = mask.shape
    r = width_px / 2.0
    xa, ya, xb, yb = _clip_box(a[0], a[1], b[0], b[1], w, h, r + 1)
    if xb < xa or yb < ya:
        return
    ys, xs = np.mgrid[ya:yb + 1, xa:xb + 1]
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)
    vx, vy = b[0] - a[0], b[1] - a[1]
    seg_len2 = vx * vx + vy * vy
    if seg_len2 == 0.0:
        d2 = (px - a[0]) ** 2 + (py - a[1]) ** 2
    else:
        t = ((px - a[0]) * vx + (py - a[1]) * vy) / seg_len2
        t = np.clip(t, 0.0, 1.0)
        d2 = (px - (a[0] + t * vx)) ** 2 + (py - (a[1] + t * vy)) ** 2
    mask[ya:yb + 1, xa:xb + 1] |= d2 <= r * r


def stroke_polyline(mask: np.ndarray, points, width_px: float) -> None:
    for i in range(len(points) - 1):
        stroke_segment(mask, points[i], points[i + 1], width_px)


def fill_disc(mask: np.ndarray, center: XY, radius: float) -> None:
    h, w = mask.shape
    xa, ya, xb, yb = _clip_box(center[0], center[1], center[0], center[1], w, h, radius + 1)
    if xb < xa or yb < ya:
        return
    ys, xs = np.mgrid[ya:yb + 1, xa:xb + 1]
    d2 = (xs - center[0]) ** 2 + (ys - center[1]) ** 2
    mask[ya:yb + 1, xa:xb + 1] |= d2 <= radius * radius


def fill_triangle(mask: np.ndarray, p0: XY, p1: XY, p2: XY) -> None:
    h, w = mask.shape
    xa = max(0, int(math.floor(min(p0[0], p1[0], p2[0]))))
    ya = max(0, int(math.floor(min(p0[1], p1[1], p2[1]))))
    xb = min(w - 1, int(math.ceil(max(p0[0], p1[0], p2[0]))))
    yb = min(h - 1, int(math.ceil(max(p0[1], p1[1], p2[1]))))
    if xb < xa or yb < ya:
        return
    ys, xs = np.mgrid[ya:yb + 1, xa:xb + 1]
    px = xs.astype(np.float64)
    py = ys.astype(np.float64)

    def edge(a, b):
        return (px - a[0]) * (b[1] - a[1]) - (py - a[1]) * (b[0] - a[0])

    e0 = edge(p0, p1)
    e1 = edge(p1, p2)
    e2 = edge(p2, p0)
    inside = ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))
    mask[ya:yb + 1, xa:xb + 1] |= inside


def fill_rotated_rect(mask: np.ndarray, center: XY, width_px: float, height_px: float,
                      angle: float) -> None:
    """Axis-aligned fill test in the rect's own frame (inverse rotation)."""
    h, w = mask.shape
    half_diag = 0.5 * math.hypot(width_px, height_px)
    xa, ya, xb, yb = _clip_box(center[0], center[1], center[0], center[1], w, h, half_diag + 1)
    if xb < xa or yb < ya:
        return
    ys, xs = np.mgrid[ya:yb + 1, xa:xb + 1]
    dx = xs - center[0]
    dy = ys - center[1]
    c, s = math.cos(angle), math.sin(angle)
    u = dx * c + dy * s
    v = -dx * s + dy * c
    inside = (np.abs(u) <= width_px / 2.0) & (np.abs(v) <= height_px / 2.0)
    mask[ya:yb + 1, xa:xb + 1] |= inside


def dilate(mask: np.ndarray, radius: int) -> np.ndarray:
    """Binary dilation with a Euclidean disc structuring element."""
    if radius <= 0:
        return mask.copy()
    h, w = mask.shape
    out = mask.copy()
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx == 0 and dy == 0:
                continue
            if dx * dx + dy * dy > radius * radius:
                continue
            src_y0, src_y1 = max(0, -dy), min(h, h - dy)
            src_x0, src_x1 = max(0, -dx), min(w, w - dx)
            if src_y0 >= src_y1 or src_x0 >= src_x1:
                continue
            out[src_y0 + dy:src_y1 + dy, src_x0 + dx:src_x1 + dx] |= \
                mask[src_y0:src_y1, src_x0:src_x1]
    return out


def quad_bezier_points(p0: XY, control: XY, p1: XY, n: int = CURVE_SAMPLES) -> np.ndarray:
    """(n+1) x 2 array of points along a quadratic Bezier."""
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    a = np.asarray(p0, dtype=np.float64)
    c = np.asarray(control, dtype=np.float64)
    b = np.asarray(p1, dtype=np.float64)
    return (1 - t) ** 2 * a + 2 * (1 - t) * t * c + t ** 2 * b


def polyline_cumlen(points: np.ndarray) -> np.ndarray:
    """Cumulative arc length per vertex; points is Nx2."""
    deltas = np.diff(points, axis=0)
    seg = np.hypot(deltas[:, 0], deltas[:, 1])
    return np.concatenate([[0.0], np.cumsum(seg)])


def dash_polyline(mask: np.ndarray, points: np.ndarray, width_px: float,
                  on_px: float, off_px: float) -> None:
    """Stroke a polyline with an on/off dash pattern measured by arc length."""
    cum = polyline_cumlen(points)
    total = float(cum[-1])
    if total <= 0:
        return
    period = on_px + off_px
    start = 0.0
    while start < total:
        end = min(start + on_px, total)
        piece = _slice_polyline(points, cum, start, end)
        if len(piece) >= 2:
            stroke_polyline(mask, piece, width_px)
        start += period


def _slice_polyline(points: np.ndarray, cum: np.ndarray,
                    s0: float, s1: float) -> list[XY]:
    def point_at(s):
        i = int(np.searchsorted(cum, s, side="right")) - 1
        i = max(0, min(i, len(points) - 2))
        seg = cum[i + 1] - cum[i]
        t = 0.0 if seg <= 0 else (s - cum[i]) / seg
        p = points[i] + t * (points[i + 1] - points[i])
        return (float(p[0]), float(p[1]))

    out = [point_at(s0)]
    inner = (cum > s0) & (cum < s1)
    for p in points[inner]:
        out.append((float(p[0]), float(p[1])))
    out.append(point_at(s1))
    return out


def arrowhead_triangle(head: XY, direction: XY, shaft_length: float,
                       min_len: float, len_frac: float,
                       half_angle_deg: float) -> tuple[XY, XY, XY]:
    """Vertices of the isoceles arrowhead with its tip at `head`."""
    norm = math.hypot(*direction)
    if norm == 0:
        direction = (1.0, 0.0)
        norm = 1.0
    ux, uy = direction[0] / norm, direction[1] / norm
    length = max(min_len, len_frac * shaft_length)
    half_w = length * math.tan(math.radians(half_angle_deg))
    bx, by = head[0] - length * ux, head[1] - length * uy
    px, py = -uy, ux
    return (head,
            (bx + half_w * px, by + half_w * py),
            (bx - half_w * px, by - half_w * py))


def blit_text(mask: np.ndarray, anchor: XY, text: str, scale: int) -> bool:
    """Stamp a single text line with its top-left at anchor.

    Returns True when any part had to be clipped at the mask border.
    """
    bitmap = glyphs.text_bitmap(text, scale)
    return blit_bitmap(mask, anchor, bitmap)


def blit_bitmap(mask: np.ndarray, anchor: XY, bitmap: np.ndarray) -> bool:
    h, w = mask.shape
    bh, bw = bitmap.shape
    x0, y0 = int(round(anchor[0])), int(round(anchor[1]))
    clipped = x0 < 0 or y0 < 0 or x0 + bw > w or y0 + bh > h
    xa, ya = max(0, x0), max(0, y0)
    xb, yb = min(w, x0 + bw), min(h, y0 + bh)
    if xb <= xa or yb <= ya:
        return True
    mask[ya:yb, xa:xb] |= bitmap[ya - y0:yb - y0, xa - x0:xb - x0]
    return clipped
