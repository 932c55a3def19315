"""Renderer: determinism, identity case, masks, banner metrics, panels."""

import hashlib
import logging

import numpy as np
import pytest

from ivi.render import (
    AnnotatedFrame,
    StyleConfig,
    annotation_mask,
    compose_panels,
    encode_png,
    render_annotations,
    render_banner,
    scene_composite,
    wrap_text,
)
from ivi.scene import (
    BannerSpec,
    ImageFrame,
    Instruction,
    ObjectTarget,
    PanelRef,
    PathGeometry,
    PointTarget,
    StraightArrow,
    SyntheticFrame,
)

from conftest import make_object, make_scene


GOLDEN_2X2_PANEL_DIGEST = "fc9e065e0b193ac76cfff52b6bebffd86fe34f387361d9eaec6d036580937fa0"


def digest(frame: AnnotatedFrame) -> str:
    return hashlib.sha256(frame.png_bytes()).hexdigest()


class TestIdentityAndDeterminism:
    def test_zero_instructions_is_identity(self, minimal_scene):
        frame = render_annotations(minimal_scene)
        seed = scene_composite(minimal_scene)
        assert np.array_equal(frame.pixels, seed)
        assert not frame.annotation_mask.any()

    def test_same_spec_renders_byte_identical(self, birds_scene):
        assert digest(render_annotations(birds_scene)) == \
            digest(render_annotations(birds_scene))

    def test_render_pure_function_of_style(self, translate_scene):
        thin = StyleConfig(shaft_width_px=2)
        a = render_annotations(translate_scene, thin)
        b = render_annotations(translate_scene, thin)
        c = render_annotations(translate_scene, StyleConfig())
        assert digest(a) == digest(b)
        assert digest(a) != digest(c)


class TestMask:
    def test_mask_covers_every_changed_pixel(self, birds_scene):
        frame = render_annotations(birds_scene)
        composite = scene_composite(birds_scene)
        changed = np.any(frame.pixels != composite, axis=2)
        assert not np.any(changed & ~frame.annotation_mask)

    def test_arrow_mask_area_lower_bound(self):
        ins = Instruction(id="a", text="x", target=PointTarget(5, 5),
                          label_anchor=(5.0, 5.0),
                          geometry=StraightArrow(tail=(100.0, 300.0),
                                                 head=(300.0, 300.0)))
        spec = make_scene([], [ins])
        mask = annotation_mask(spec)
        # shaft alone covers >= width * length; halo and head only add
        assert mask.sum() >= 4 * 200

    def test_mask_union_is_or_of_parts(self):
        i1 = Instruction(id="a", text="one", target=PointTarget(5, 5),
                         label_anchor=(20.0, 20.0),
                         geometry=StraightArrow(tail=(100.0, 100.0),
                                                head=(200.0, 100.0)))
        i2 = Instruction(id="b", text="two", target=PointTarget(5, 5),
                         label_anchor=(20.0, 400.0),
                         geometry=StraightArrow(tail=(100.0, 300.0),
                                                head=(200.0, 380.0)))
        m_both = annotation_mask(make_scene([], [i1, i2]))
        m1 = annotation_mask(make_scene([], [i1]))
        m2 = annotation_mask(make_scene([], [i2]))
        assert np.array_equal(m_both, m1 | m2)

    def test_trajectory_dashes_alternate_ink_and_halo(self):
        ins = Instruction(id="a", text="trace", target=PointTarget(5, 5),
                          label_anchor=(5.0, 5.0),
                          geometry=PathGeometry(points=((50.0, 240.0), (590.0, 240.0))))
        frame = render_annotations(make_scene([], [ins]))
        style = StyleConfig()
        row = frame.pixels[240, 60:580]
        is_ink = np.all(row == style.ink, axis=1)
        is_halo = np.all(row == style.halo, axis=1)
        assert is_ink.sum() > 100 and is_halo.sum() > 20
        transitions = int(np.abs(np.diff(is_ink.astype(int))).sum())
        assert transitions > 20  # ink dashes separated by halo gaps


class TestSharedLabelScene:
    def test_two_arrows_one_label(self, birds_scene):
        frame = render_annotations(birds_scene)
        mask = frame.annotation_mask
        assert mask.any()
        # ink along both commanded arrows (shaft midpoints)
        assert mask[270, 140] and mask[270, 300]
        # no ink around the uninstructed third bird
        assert not mask[250:340, 420:520].any()
        # the shared label footprint: glyph rows exist at the anchor
        assert mask[16:48, 24:120].any()


class TestBanner:
    def test_pan_left_strip_1280x48(self):
        strip = render_banner("pan left", 1280)
        assert strip.shape == (48, 1280, 3)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            render_banner("   ", 640)

    def test_wrap_rule_height(self):
        text = ("the quick brown fox jumps over the lazy dog " * 7)[:300]
        strip = render_banner(text, 640)
        # independent wrap oracle: greedy word wrap at the glyph metrics
        max_chars = (640 - 16) // 16  # pad 8 each side, 8 px cell * scale 2
        lines = 0
        for segment in text.split("\n"):
            words, line = segment.split(" "), ""
            for word in words:
                cand = (line + " " + word) if line else word
                if len(cand) <= max_chars:
                    line = cand
                else:
                    lines += 1
                    line = word
            lines += 1
        expected_height = 48 * lines - 16 * (lines - 1)
        assert strip.shape == (expected_height, 640, 3)
        assert lines > 1

    def test_banner_mode_preserves_scene_rows(self, translate_scene):
        from dataclasses import replace

        bannered = replace(translate_scene, banner=BannerSpec(text="go right"))
        plain = render_annotations(translate_scene)
        with_banner = render_annotations(bannered)
        strip_h = with_banner.pixels.shape[0] - plain.pixels.shape[0]
        assert strip_h == 48
        assert np.array_equal(with_banner.pixels[strip_h:], plain.pixels)
        assert with_banner.annotation_mask[:strip_h].all()

    def test_non_ascii_renders_replacement_boxes(self):
        strip = render_banner("向左转", 640)
        assert strip.shape[0] == 48
        assert (strip == 0).any()  # replacement boxes drew black ink


class TestLabels:
    def test_label_overflow_warns_and_clips(self, caplog):
        ins = Instruction(id="a", text="a very long label that runs off the canvas",
                          target=PointTarget(5, 5), label_anchor=(500.0, 470.0))
        spec = make_scene([], [ins])
        with caplog.at_level(logging.WARNING, logger="ivi.render"):
            frame = render_annotations(spec)
        assert any("LABEL_OVERFLOW" in r.message for r in caplog.records)
        assert frame.pixels.shape == (480, 640, 3)

    def test_order_badge_drawn_next_to_label(self):
        ins = Instruction(id="a", text="step one", target=PointTarget(5, 5),
                          label_anchor=(100.0, 100.0), order=1)
        mask = annotation_mask(make_scene([], [ins]))
        # badge disc sits left of the anchor, vertically centered on the line
        assert mask[116, 80]

    def test_camera_instructions_draw_nothing_inframe(self):
        from ivi.scene import CameraMove, GlobalTarget

        ins = Instruction(id="cam", text="zoom in", target=GlobalTarget(),
                          label_anchor=(8.0, 8.0),
                          semantic=CameraMove(kind="zoom_in"))
        mask = annotation_mask(make_scene([], [ins]))
        assert not mask.any()


class TestPanels:
    def _png(self, tmp_path, name, color, size=(640, 480)):
        from PIL import Image

        path = tmp_path / name
        Image.new("RGB", size, color).save(path)
        return str(path)

    def test_1x1_grid_equals_plain_render(self, tmp_path):
        path = self._png(tmp_path, "a.png", (10, 60, 110))
        panel = PanelRef(frame=ImageFrame(path=path), grid_cell=(0, 0))
        ins = Instruction(id="a", text="go", target=PointTarget(5, 5),
                          label_anchor=(20.0, 20.0),
                          geometry=StraightArrow(tail=(100.0, 100.0),
                                                 head=(200.0, 200.0)))
        spec = make_scene([], [ins])
        composed = compose_panels([panel], spec)
        from dataclasses import replace

        plain = render_annotations(replace(spec, seed_frame=ImageFrame(path=path)))
        assert np.array_equal(composed.pixels, plain.pixels)

    def test_1x2_grid_dimensions(self, tmp_path):
        panels = [
            PanelRef(frame=ImageFrame(path=self._png(tmp_path, f"{i}.png",
                                                     (40 * i, 80, 120))),
                     grid_cell=(0, i))
            for i in range(2)
        ]
        spec = make_scene([], [], w=1288, h=480)
        composed = compose_panels(panels, spec)
        assert composed.pixels.shape == (480, 1288, 3)
        assert (composed.pixels[:, 640:648] == 0).all()  # gutter

    def test_sparse_grid_rejected(self, tmp_path):
        from ivi.render import RenderError

        panels = [
            PanelRef(frame=SyntheticFrame(background_color=(9, 9, 9)),
                     grid_cell=(0, 0)),
            PanelRef(frame=SyntheticFrame(background_color=(9, 9, 9)),
                     grid_cell=(1, 1)),
        ]
        with pytest.raises(RenderError) as exc:
            compose_panels(panels, make_scene([], []))
        assert exc.value.code == "GRID_SPARSE"

    def test_2x2_grid_golden(self):
        panels = [
            PanelRef(frame=SyntheticFrame(background_color=(30 * r + 20, 60 * c + 20, 90)),
                     grid_cell=(r, c), label=f"P{r}{c}")
            for r in range(2) for c in range(2)
        ]
        spec = make_scene([], [], w=648, h=648)
        composed = compose_panels(panels, spec)
        assert composed.pixels.shape == (648, 648, 3)
        assert digest(composed) == GOLDEN_2X2_PANEL_DIGEST


class TestFrameLoad:
    def test_missing_seed_frame_raises(self):
        from dataclasses import replace

        from ivi.render import RenderError

        spec = make_scene([], [])
        spec = replace(spec, seed_frame=ImageFrame(path="/nonexistent/frame.png"))
        with pytest.raises(RenderError) as exc:
            render_annotations(spec)
        assert exc.value.code == "FRAME_LOAD"
