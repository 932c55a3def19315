"""Parameterized fixture scenes for tests, demos, and batch studies.

Templates generate synthetic sprite scenes so every fixture is
simultaneously renderable, simulatable, and checkable. Each template
mirrors one experimental configuration: lone commands, shared commands
over several subjects, ordered step sequences, independent per-object
commands, row localization, and banner-driven camera moves.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .scene import (
    BannerSpec,
    CameraMove,
    Canvas,
    CurvedArrow,
    DiscSprite,
    GlobalTarget,
    Hold,
    Instruction,
    ObjectLayer,
    ObjectTarget,
    Pose,
    RectSprite,
    SceneSpec,
    StraightArrow,
    SyntheticFrame,
)

TEMPLATE_KINDS = (
    "single_obj_single_inst",
    "multi_obj_single_inst",
    "single_obj_multi_inst",
    "multi_obj_multi_inst",
    "localization_row",
    "camera_banner",
)

_BACKGROUND = (208, 208, 200)
_SPRITE_COLORS = ((46, 104, 180), (52, 150, 90), (150, 90, 170),
                  (190, 140, 40), (100, 100, 110), (180, 80, 120))

_ORDINALS = ("first", "second", "third", "fourth", "fifth", "sixth",
             "seventh", "eighth", "ninth", "tenth", "eleventh", "twelfth")


class TemplateError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class ScenarioTemplate:
    kind: str
    objects: int = 3
    index: int = 1  # 1-based target index for localization_row
    canvas: tuple[int, int] = (640, 480)
    seed: int = 0
    camera: str = "zoom_in"  # camera_banner only
    action: str = "jump"  # localization_row verb

    def __post_init__(self):
        if self.kind not in TEMPLATE_KINDS:
            raise TemplateError("TEMPLATE_INVALID", f"unknown template kind {self.kind!r}")
        if self.kind == "localization_row" and self.objects < 3:
            raise TemplateError("TEMPLATE_INVALID",
                                "localization_row needs at least 3 identical objects")
        if self.objects < 1 or self.objects > len(_ORDINALS):
            raise TemplateError("TEMPLATE_INVALID",
                                f"object count must be 1..{len(_ORDINALS)}")
        if not 1 <= self.index <= self.objects:
            raise TemplateError("TEMPLATE_INVALID",
                                f"index {self.index} outside 1..{self.objects}")


def _base(template: ScenarioTemplate, objects, instructions, banner=None) -> SceneSpec:
    w, h = template.canvas
    return SceneSpec(
        canvas=Canvas(width_px=w, height_px=h),
        seed_frame=SyntheticFrame(background_color=_BACKGROUND),
        objects=tuple(objects),
        instructions=tuple(instructions),
        banner=banner,
    )


def _scatter(rng: random.Random, count: int, w: int, h: int,
             radius: float) -> list[tuple[float, float]]:
    """Non-overlapping disc centers with margins; deterministic per rng state."""
    placed: list[tuple[float, float]] = []
    margin = radius + 8
    for _ in range(count):
        for _attempt in range(200):
            x = rng.uniform(margin, w - margin)
            y = rng.uniform(h * 0.35, h - margin)
            if all((x - px) ** 2 + (y - py) ** 2 >= (2.4 * radius) ** 2
                   for px, py in placed):
                placed.append((x, y))
                break
        else:
            raise TemplateError("TEMPLATE_INVALID", "cannot place objects without overlap")
    return placed


def instantiate(template: ScenarioTemplate) -> SceneSpec:
    """Build the scene for a template; deterministic for a fixed seed."""
    rng = random.Random(template.seed)
    w, h = template.canvas
    builder = {
        "single_obj_single_inst": _single_single,
        "multi_obj_single_inst": _multi_single,
        "single_obj_multi_inst": _single_multi,
        "multi_obj_multi_inst": _multi_multi,
        "localization_row": _localization_row,
        "camera_banner": _camera_banner,
    }[template.kind]
    return builder(template, rng, w, h)


def _single_single(template, rng, w, h) -> SceneSpec:
    r = 22.0
    x, y = _scatter(rng, 1, w, h, r)[0]
    room_right = w - 1 - x - 8
    room_left = x - 8
    sign = 1.0 if room_right >= room_left else -1.0
    dist = min(120.0, (room_right if sign > 0 else room_left))
    arrow = StraightArrow(tail=(x, y), head=(x + sign * dist, y))
    obj = ObjectLayer("obj1", DiscSprite(r, _SPRITE_COLORS[0]), Pose(x, y))
    text = "move right" if sign > 0 else "move left"
    ins = Instruction(id="move", text=text, target=ObjectTarget("obj1"),
                      label_anchor=(min(x, w - 180), max(16.0, y - r - 44)),
                      geometry=arrow)
    return _base(template, [obj], [ins])


def _multi_single(template, rng, w, h) -> SceneSpec:
    """Shared command bound to all objects but the last, which stays put."""
    r = 18.0
    centers = _scatter(rng, template.objects, w, h, r)
    objects = [
        ObjectLayer(f"obj{i + 1}", DiscSprite(r, _SPRITE_COLORS[i % len(_SPRITE_COLORS)]),
                    Pose(x, y))
        for i, (x, y) in enumerate(centers)
    ]
    anchor = (24.0, 20.0)
    instructions = []
    moved = max(1, template.objects - 1)
    for i in range(moved):
        x, y = centers[i]
        rise = min(90.0, y - r - 12)
        instructions.append(Instruction(
            id=f"fly{i + 1}", text="fly away", target=ObjectTarget(f"obj{i + 1}"),
            label_anchor=anchor,
            geometry=StraightArrow(tail=(x, y), head=(x, y - rise)),
        ))
    return _base(template, objects, instructions)


def _single_multi(template, rng, w, h) -> SceneSpec:
    """One subject, three ordered translate steps that chain tip-to-tail."""
    r = 20.0
    x0 = w * 0.2 + rng.uniform(-10, 10)
    y0 = h * 0.35 + rng.uniform(-10, 10)
    step = min(w, h) * 0.28
    obj = ObjectLayer("obj1", DiscSprite(r, _SPRITE_COLORS[1]), Pose(x0, y0))
    legs = (((0.0, 1.0), "move down"), ((1.0, 0.0), "slide right"), ((0.0, -1.0), "rise up"))
    instructions = []
    cx, cy = x0, y0
    for k, ((dx, dy), text) in enumerate(legs, start=1):
        nx, ny = cx + dx * step, cy + dy * step
        instructions.append(Instruction(
            id=f"step{k}", text=text, target=ObjectTarget("obj1"), order=k,
            label_anchor=(min(cx, nx), min(cy, ny) - 40 if min(cy, ny) > 48 else 8.0),
            geometry=StraightArrow(tail=(cx, cy), head=(nx, ny)),
        ))
        cx, cy = nx, ny
    return _base(template, [obj], instructions)


def _multi_multi(template, rng, w, h) -> SceneSpec:
    """Three subjects with independent commands: back up, turn right, stop."""
    r = 20.0
    centers = _scatter(rng, 3, w, h, r)
    objects = [
        ObjectLayer(f"car{i + 1}",
                    RectSprite(2.2 * r, 1.2 * r, _SPRITE_COLORS[i]),
                    Pose(x, y))
        for i, (x, y) in enumerate(centers)
    ]
    x1, y1 = centers[0]
    room_left = x1 - 8
    room_right = w - 1 - x1 - 8
    back_sign = -1.0 if room_left >= room_right else 1.0
    back_dist = min(100.0, room_left if back_sign < 0 else room_right)
    x2, y2 = centers[1]
    turn_r = min(60.0, y2 - 12, h - y2 - 12, x2 - 12, w - x2 - 12)
    x3, y3 = centers[2]
    instructions = [
        Instruction(id="back_up", text="back up", target=ObjectTarget("car1"),
                    label_anchor=(max(8.0, x1 - 70), max(8.0, y1 - 60)),
                    geometry=StraightArrow(tail=(x1, y1),
                                           head=(x1 + back_sign * back_dist, y1))),
        Instruction(id="turn_right", text="turn right", target=ObjectTarget("car2"),
                    label_anchor=(max(8.0, x2 - 70), max(8.0, y2 - 60)),
                    geometry=CurvedArrow(
                        start=(x2, y2 - turn_r),
                        control=(x2 + turn_r * math.cos(math.radians(45)),
                                 y2 - turn_r * math.sin(math.radians(45))),
                        end=(x2 + turn_r, y2),
                        sense="ccw")),
        Instruction(id="stop", text="stop", target=ObjectTarget("car3"),
                    label_anchor=(max(8.0, x3 - 70), max(8.0, y3 - 60)),
                    semantic=Hold()),
    ]
    return _base(template, objects, instructions)


def _localization_row(template, rng, w, h) -> SceneSpec:
    """N identical sprites in a row; the command binds to sprite k."""
    n = template.objects
    r = min(18.0, (w / (n + 1)) / 3)
    color = _SPRITE_COLORS[template.seed % len(_SPRITE_COLORS)]
    y = h * 0.62
    spacing = w / (n + 1)
    objects = [
        ObjectLayer(f"obj{i + 1}", DiscSprite(r, color), Pose(spacing * (i + 1), y))
        for i in range(n)
    ]
    xk = spacing * template.index
    rise = min(110.0, y - r - 16)
    ins = Instruction(
        id="act", text=template.action, target=ObjectTarget(f"obj{template.index}"),
        label_anchor=(max(8.0, min(xk - 40, w - 150)), max(8.0, y - rise - 48)),
        geometry=StraightArrow(tail=(xk, y), head=(xk, y - rise)),
    )
    return _base(template, objects, [ins])


def _camera_banner(template, rng, w, h) -> SceneSpec:
    """Banner-only scene: the command rides above the frame, no in-frame ink."""
    if template.camera not in ("static", "pan_left", "pan_right", "tilt_down",
                               "tilt_up", "zoom_in", "zoom_out"):
        raise TemplateError("TEMPLATE_INVALID", f"unknown camera move {template.camera!r}")
    r = 24.0
    centers = _scatter(rng, min(template.objects, 3), w, h, r)
    objects = [
        ObjectLayer(f"obj{i + 1}", DiscSprite(r, _SPRITE_COLORS[i]), Pose(x, y))
        for i, (x, y) in enumerate(centers)
    ]
    text = template.camera.replace("_", " ")
    ins = Instruction(id="cam", text=text, target=GlobalTarget(),
                      label_anchor=(8.0, 8.0),
                      semantic=CameraMove(kind=template.camera))
    return _base(template, objects, [ins], banner=BannerSpec(text=text))


def _conjugate(action: str) -> str:
    """Third-person singular of a verb phrase: conjugate the first word."""
    words = action.split(" ")
    head = words[0]
    if head.endswith(("s", "x", "z", "ch", "sh")):
        head += "es"
    elif head.endswith("y") and len(head) > 1 and head[-2] not in "aeiou":
        head = head[:-1] + "ies"
    else:
        head += "s"
    return " ".join([head] + words[1:])


def _ordinal(k: int) -> str:
    return _ORDINALS[k - 1]


def text_baseline_prompt(template: ScenarioTemplate) -> str:
    """Positional-language paraphrase of a scene, for A/B prompting studies."""
    if template.kind == "localization_row":
        return (f"The {_ordinal(template.index)} object from the left "
                f"{_conjugate(template.action)}; the others stay still.")
    if template.kind == "multi_obj_multi_inst":
        actions = ("back up", "turn right", "stop")
        clauses = [
            f"the {_ordinal(k + 1)} object from the left {_conjugate(action)}"
            for k, action in enumerate(actions)
        ]
        return ("; ".join(clauses) + ".").capitalize()
    if template.kind == "multi_obj_single_inst":
        moved = max(1, template.objects - 1)
        which = ", ".join(_ordinal(k + 1) for k in range(moved))
        return (f"The {which} objects from the left fly away; "
                f"the others stay still.")
    raise TemplateError("UNSUPPORTED_KIND",
                        f"{template.kind} has no positional paraphrase")
