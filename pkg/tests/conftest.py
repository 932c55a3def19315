"""Shared fixtures: deterministic example scenes, a hypothesis strategy for
valid scene specs, and the acceptance-criteria result reporter."""

from __future__ import annotations

import math

import pytest
from hypothesis import strategies as st

from ivi.scene import (
    BannerSpec,
    CameraMove,
    Canvas,
    CurvedArrow,
    DiscSprite,
    FollowPath,
    GlobalTarget,
    Hold,
    Instruction,
    ObjectLayer,
    ObjectTarget,
    PanelRef,
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
)

# ---------------------------------------------------------------------------
# Acceptance-criteria reporting: one pass/fail line per criterion
# ---------------------------------------------------------------------------

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): marks a test as one acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.when == "call":
        ACCEPTANCE_RESULTS.append((marker.args[0], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"  {'PASS' if ok else 'FAIL'}  {name}")


# ---------------------------------------------------------------------------
# Hand-built fixtures
# ---------------------------------------------------------------------------

CANVAS_W, CANVAS_H = 640, 480


def make_object(oid="obj1", x=200.0, y=240.0, r=20.0, color=(40, 90, 200)):
    return ObjectLayer(oid, DiscSprite(r, color), Pose(x, y))


def make_scene(objects=(), instructions=(), banner=None, w=CANVAS_W, h=CANVAS_H):
    return SceneSpec(
        canvas=Canvas(width_px=w, height_px=h),
        seed_frame=SyntheticFrame(background_color=(200, 200, 190)),
        objects=tuple(objects),
        instructions=tuple(instructions),
        banner=banner,
    )


@pytest.fixture
def minimal_scene():
    return make_scene()


@pytest.fixture
def translate_scene():
    """One disc commanded 100 px in +x by a straight arrow."""
    obj = make_object()
    ins = Instruction(
        id="go", text="move right", target=ObjectTarget("obj1"),
        label_anchor=(150.0, 180.0),
        geometry=StraightArrow(tail=(200.0, 240.0), head=(300.0, 240.0)),
    )
    return make_scene([obj], [ins])


@pytest.fixture
def three_step_scene():
    """One subject, three ordered 100 px translations in +x."""
    obj = make_object(x=100.0, y=240.0)
    instructions = [
        Instruction(
            id=f"s{k}", text=f"leg {k}", target=ObjectTarget("obj1"), order=k,
            label_anchor=(20.0 + 40 * k, 20.0),
            geometry=StraightArrow(tail=(100.0 + 100 * (k - 1), 240.0),
                                   head=(100.0 + 100 * k, 240.0)),
        )
        for k in (1, 2, 3)
    ]
    return make_scene([obj], instructions)


@pytest.fixture
def birds_scene():
    """Three discs; a shared command binds to the first two only."""
    objects = [make_object(f"bird{i}", 140.0 + 160 * i, 320.0, 16.0,
                           (30 + 40 * i, 120, 80))
               for i in range(3)]
    instructions = [
        Instruction(
            id=f"fly{i}", text="fly away", target=ObjectTarget(f"bird{i}"),
            label_anchor=(24.0, 16.0),
            geometry=StraightArrow(tail=(140.0 + 160 * i, 320.0),
                                   head=(140.0 + 160 * i, 220.0)),
        )
        for i in range(2)
    ]
    return make_scene(objects, instructions)


# ---------------------------------------------------------------------------
# Success-rate fixture reproducing the published three-command study
# ---------------------------------------------------------------------------

TABLE2_COUNTS = {
    # instruction -> {method -> successes out of 24}
    "back_up": {"in_video": 5, "prompt": 2},
    "turn_right": {"in_video": 14, "prompt": 7},
    "stop": {"in_video": 23, "prompt": 14},
}
TABLE2_TOTAL = 24
TABLE2_EXPECTED_RATES = {
    ("back_up", "in_video"): 20.8, ("back_up", "prompt"): 8.3,
    ("turn_right", "in_video"): 58.3, ("turn_right", "prompt"): 29.2,
    ("stop", "in_video"): 95.8, ("stop", "prompt"): 58.3,
}


def build_table2_judgments():
    """24 pooled judgments per (instruction, method) cell; returns
    (judgments, methods mapping job_id -> method)."""
    from ivi.evaluate import Judgment

    judgments, methods = [], {}
    for method in ("in_video", "prompt"):
        for video in range(TABLE2_TOTAL):
            job_id = f"job-{method}-{video:03d}"
            methods[job_id] = method
            for instruction, per_method in TABLE2_COUNTS.items():
                verdict = "success" if video < per_method[method] else "failure"
                judgments.append(Judgment(
                    job_id=job_id, instruction_id=instruction, verdict=verdict,
                    rater_id="r1", timestamp=f"2026-08-01T00:{video:02d}:00Z"))
    return judgments, methods


# ---------------------------------------------------------------------------
# Hypothesis strategy for valid scenes
# ---------------------------------------------------------------------------

_TEXT = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")),
    min_size=1, max_size=24,
).filter(lambda s: s.strip() != "")

_COLOR = st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))


def _coord(limit):
    return st.one_of(
        st.floats(min_value=0.0, max_value=limit - 1.0, allow_nan=False,
                  allow_infinity=False),
        st.integers(0, int(limit - 1)).map(float),
    )


@st.composite
def scene_specs(draw):
    w = draw(st.integers(min_value=64, max_value=320))
    h = draw(st.integers(min_value=64, max_value=320))
    canvas = Canvas(width_px=w, height_px=h)

    n_objects = draw(st.integers(0, 3))
    objects = []
    for k in range(n_objects):
        r = draw(st.floats(min_value=1.0, max_value=8.0, allow_nan=False))
        scale = draw(st.floats(min_value=0.5, max_value=1.5, allow_nan=False))
        margin = r * scale * 1.5 + 2
        x = draw(st.floats(min_value=margin, max_value=w - 1 - margin,
                           allow_nan=False))
        y = draw(st.floats(min_value=margin, max_value=h - 1 - margin,
                           allow_nan=False))
        orientation = draw(st.floats(min_value=-3.14, max_value=3.14,
                                     allow_nan=False))
        sprite = draw(st.one_of(
            st.builds(DiscSprite, st.just(r), _COLOR),
            st.builds(RectSprite, st.just(r), st.just(r), _COLOR),
        ))
        objects.append(ObjectLayer(f"obj{k:02d}", sprite,
                                   Pose(x, y, orientation, scale)))

    object_ids = [o.id for o in objects]
    n_ins = draw(st.integers(0, 4))
    order_pool = draw(st.permutations(list(range(1, 10))))
    order_iter = iter(order_pool)
    instructions = []
    for k in range(n_ins):
        anchor = (draw(_coord(w)), draw(_coord(h)))
        kind = draw(st.sampled_from(
            ["bare", "arrow", "curve", "path", "follow", "translate",
             "rotate", "camera", "hold"]))
        geometry = None
        semantic = None
        target = None
        if kind == "arrow" or (kind == "translate" and draw(st.booleans())):
            tx = draw(st.floats(min_value=8.0, max_value=w - 9.0, allow_nan=False))
            ty = draw(st.floats(min_value=8.0, max_value=h - 9.0, allow_nan=False))
            angle = draw(st.floats(min_value=-3.14, max_value=3.14, allow_nan=False,
                                  ))
            length = draw(st.floats(min_value=4.5, max_value=7.5, allow_nan=False,
                                   ))
            geometry = StraightArrow(
                tail=(tx, ty),
                head=(tx + length * math.cos(angle), ty + length * math.sin(angle)))
        elif kind == "curve":
            pts = [(draw(_coord(w)), draw(_coord(h))) for _ in range(3)]
            geometry = CurvedArrow(start=pts[0], end=pts[1], control=pts[2],
                                   sense=draw(st.sampled_from(["cw", "ccw"])))
        elif kind in ("path", "follow"):
            n_pts = draw(st.integers(2, 5))
            pts = [(draw(_coord(w)), draw(_coord(h))) for _ in range(n_pts)]
            deduped = [pts[0]]
            for p in pts[1:]:
                if p != deduped[-1]:
                    deduped.append(p)
            if len(deduped) < 2:
                deduped.append((min(w - 1.0, deduped[0][0] + 1.0), deduped[0][1]))
            geometry = PathGeometry(points=tuple(deduped),
                                    interpolation=draw(st.sampled_from(
                                        ["polyline", "quadratic-spline"])))
            if kind == "follow":
                semantic = FollowPath()
        if kind == "translate":
            angle = draw(st.floats(min_value=-3.14, max_value=3.14, allow_nan=False,
                                  ))
            semantic = Translate(direction=(math.cos(angle), math.sin(angle)),
                                 distance_px=draw(st.floats(min_value=0.0,
                                                            max_value=200.0,
                                                            allow_nan=False)))
        elif kind == "rotate":
            semantic = Rotate(pivot=(draw(_coord(w)), draw(_coord(h))),
                              angle_rad=draw(st.floats(min_value=-6.28, max_value=6.28,
                                                       allow_nan=False)))
        elif kind == "camera":
            semantic = CameraMove(kind=draw(st.sampled_from(
                ["static", "pan_left", "pan_right", "tilt_down", "tilt_up",
                 "zoom_in", "zoom_out"])))
            target = GlobalTarget()
        elif kind == "hold":
            semantic = Hold()
        if target is None:
            choices = [st.just(GlobalTarget()),
                       st.builds(PointTarget, _coord(w), _coord(h))]
            if object_ids:
                choices.append(st.builds(ObjectTarget, st.sampled_from(object_ids)))
            if w > 4 and h > 4:
                rx = draw(st.floats(min_value=0.0, max_value=w / 2, allow_nan=False,
                                   ))
                ry = draw(st.floats(min_value=0.0, max_value=h / 2, allow_nan=False,
                                   ))
                choices.append(st.just(RegionTarget(rx, ry, (w - 2) / 4, (h - 2) / 4)))
            target = draw(st.one_of(*choices))
        instructions.append(Instruction(
            id=f"ins{k:02d}",
            text=draw(_TEXT)[:120],
            target=target,
            label_anchor=anchor,
            order=next(order_iter) if draw(st.booleans()) else None,
            geometry=geometry,
            semantic=semantic,
        ))

    banner = draw(st.one_of(st.none(), st.builds(BannerSpec, _TEXT)))
    panels = None
    if draw(st.integers(0, 9)) == 0:
        rows = draw(st.integers(1, 2))
        cols = draw(st.integers(1, 2))
        panels = tuple(
            PanelRef(frame=SyntheticFrame(background_color=draw(_COLOR)),
                     grid_cell=(r, c),
                     label=draw(st.one_of(st.none(), st.text(
                         alphabet="ABCDEFGH", min_size=1, max_size=2))))
            for r in range(rows) for c in range(cols)
        )
    return SceneSpec(
        canvas=canvas,
        seed_frame=SyntheticFrame(background_color=draw(_COLOR)),
        objects=tuple(objects),
        instructions=tuple(instructions),
        banner=banner,
        panels=panels,
    )
