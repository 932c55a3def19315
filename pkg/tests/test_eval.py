"""Evaluation checks, persistence detection, and success-rate math."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivi.evaluate import (
    EvalError,
    Judgment,
    check_camera,
    check_direction,
    check_order,
    check_path,
    check_stationary,
    detect_annotation_persistence,
    read_judgments_csv,
    success_rate_report,
    write_judgments_csv,
)
from ivi.interpreter import CameraTrack, ObjectTrack, Segment, Timeline, simulate
from ivi.scene import (
    Instruction,
    ObjectTarget,
    PathGeometry,
    Pose,
    Translate,
    derive_semantics,
)

from conftest import (
    TABLE2_COUNTS,
    TABLE2_EXPECTED_RATES,
    TABLE2_TOTAL,
    build_table2_judgments,
    make_object,
    make_scene,
)


def track_from_xy(oid, xy):
    return ObjectTrack(oid, tuple(Pose(x, y) for x, y in xy))


def translate_ins(direction, distance=100.0, iid="go"):
    return Instruction(id=iid, text="go", target=ObjectTarget("obj1"),
                       label_anchor=(10.0, 10.0),
                       semantic=Translate(direction=direction, distance_px=distance))


class TestCheckDirection:
    def test_parallel_displacement_scores_one(self):
        track = track_from_xy("obj1", [(0, 0), (50, 0), (100, 0)])
        result = check_direction(track, translate_ins((1.0, 0.0)))
        assert result.score == pytest.approx(1.0)
        assert result.passed

    def test_diagonal_against_horizontal_fails_at_0_8(self):
        # dot-product oracle: (70.7, 70.7) . (1, 0) / |(70.7, 70.7)| = cos 45
        track = track_from_xy("obj1", [(0, 0), (70.7, 70.7)])
        result = check_direction(track, translate_ins((1.0, 0.0)))
        assert result.score == pytest.approx(math.cos(math.pi / 4), abs=1e-9)
        assert not result.passed

    def test_interpreter_output_closure(self, translate_scene):
        res = simulate(translate_scene, frames=24)
        spec = derive_semantics(translate_scene)
        result = check_direction(res.tracks["obj1"], spec.instructions[0])
        assert result.score >= 1 - 1e-9

    def test_tiny_displacement_fails(self):
        track = track_from_xy("obj1", [(0, 0), (1.0, 0)])
        result = check_direction(track, translate_ins((1.0, 0.0)))
        assert result.score == pytest.approx(1.0)
        assert not result.passed  # under the 2 px minimum net displacement

    def test_wrong_semantic_rejected(self):
        ins = Instruction(id="x", text="x", target=ObjectTarget("obj1"),
                          label_anchor=(1.0, 1.0))
        with pytest.raises(EvalError) as exc:
            check_direction(track_from_xy("obj1", [(0, 0), (1, 1)]), ins)
        assert exc.value.code == "SEMANTIC_MISMATCH"


class TestCheckPath:
    GEOM = PathGeometry(points=((0.0, 0.0), (100.0, 0.0), (100.0, 100.0)))

    def test_track_on_path_scores_zero(self):
        track = track_from_xy("obj1", [(0, 0), (50, 0), (100, 0), (100, 100)])
        result = check_path(track, self.GEOM)
        assert result.score == pytest.approx(0.0, abs=1e-9)
        assert result.passed

    def test_uniform_offset_measured(self):
        track = track_from_xy("obj1", [(0, 3), (50, 3), (100, 3)])
        result = check_path(track, self.GEOM, tol_px=15.0)
        assert result.score == pytest.approx(3.0, abs=0.05)

    def test_interpreter_follow_path_closure(self):
        obj = make_object(x=60.0, y=60.0, r=10.0)
        geom = PathGeometry(points=((60.0, 60.0), (300.0, 90.0), (420.0, 360.0)),
                            interpolation="quadratic-spline")
        ins = Instruction(id="trace", text="follow", target=ObjectTarget("obj1"),
                          label_anchor=(10.0, 10.0), geometry=geom)
        res = simulate(make_scene([obj], [ins]), frames=48)
        result = check_path(res.tracks["obj1"], geom)
        assert result.score <= 1e-3
        assert result.passed  # at the 0.5 px interpreter tolerance


class TestCheckOrder:
    def _spec_three_objects(self):
        objects = [make_object(f"o{k}", 100.0 + 150 * k, 240.0) for k in range(3)]
        instructions = [
            Instruction(id=f"s{k + 1}", text=f"t{k}", target=ObjectTarget(f"o{k}"),
                        order=k + 1, label_anchor=(10.0, 10.0),
                        semantic=Translate(direction=(0.0, -1.0), distance_px=50.0))
            for k in range(3)
        ]
        return make_scene(objects, instructions)

    @staticmethod
    def _moving_track(oid, window, frames=96, speed=2.0):
        xy = []
        x = 0.0
        for f in range(frames):
            if window[0] <= f < window[1]:
                x += speed
            xy.append((x, 0.0))
        return track_from_xy(oid, xy)

    def test_interpreter_sequence_passes(self, three_step_scene):
        res = simulate(three_step_scene, frames=96)
        spec = derive_semantics(three_step_scene)
        result = check_order(res.tracks, res.timeline, spec)
        assert result.passed

    def test_swapped_steps_fail_with_pair(self):
        spec = self._spec_three_objects()
        timeline = Timeline(segments=(Segment("s1", 0, 32), Segment("s2", 32, 64),
                                      Segment("s3", 64, 96)), frames=96)
        tracks = {
            "o0": self._moving_track("o0", (0, 31)),
            "o1": self._moving_track("o1", (64, 95)),  # steps 2 and 3 swapped
            "o2": self._moving_track("o2", (32, 63)),
        }
        result = check_order(tracks, timeline, spec)
        assert not result.passed
        assert "2 and 3" in result.details

    def test_single_numbered_step_rejected(self):
        obj = make_object()
        spec = make_scene([obj], [
            Instruction(id="only", text="t", target=ObjectTarget("obj1"), order=1,
                        label_anchor=(10.0, 10.0))])
        with pytest.raises(EvalError) as exc:
            check_order({}, Timeline(segments=(), frames=10), spec)
        assert exc.value.code == "NO_NUMBERED_STEPS"


class TestCheckStationary:
    def test_constant_track(self):
        track = track_from_xy("obj1", [(5, 5)] * 10)
        result = check_stationary(track)
        assert result.score == 0.0 and result.passed

    def test_drift_beyond_eps_fails(self):
        track = track_from_xy("obj1", [(0, 0), (3, 4)])  # 5 px
        result = check_stationary(track)
        assert result.score == pytest.approx(5.0)
        assert not result.passed

    def test_interpreter_uninstructed_exactly_zero(self, birds_scene):
        res = simulate(birds_scene, frames=24)
        result = check_stationary(res.tracks["bird2"])
        assert result.score == 0.0 and result.passed


class TestCheckCamera:
    def _interp_camera(self, kind, frames=30):
        from ivi.scene import CameraMove, GlobalTarget

        ins = Instruction(id="cam", text=kind, target=GlobalTarget(),
                          label_anchor=(8.0, 8.0), semantic=CameraMove(kind=kind))
        res = simulate(make_scene([], [ins]), frames=frames)
        return res.camera

    @pytest.mark.parametrize("kind", ["static", "pan_left", "pan_right",
                                      "tilt_down", "tilt_up", "zoom_in", "zoom_out"])
    def test_all_seven_kinds_pass(self, kind):
        assert check_camera(self._interp_camera(kind), kind).passed

    def test_zoom_in_final_value(self):
        result = check_camera(self._interp_camera("zoom_in"), "zoom_in")
        assert result.score == pytest.approx(1.25, abs=1e-6)

    def test_static_vs_pan_left_fails(self):
        assert not check_camera(self._interp_camera("static"), "pan_left").passed

    def test_non_monotone_pan_fails(self):
        cam = self._interp_camera("pan_left")
        offsets = list(cam.offsets)
        offsets[10] = (offsets[10][0] + 5.0, 0.0)  # one backward jump
        broken = CameraTrack(tuple(offsets), cam.zooms, cam.width_px, cam.height_px)
        assert not check_camera(broken, "pan_left").passed


class TestPersistence:
    def test_identity_is_persisted(self):
        pixels = np.random.default_rng(0).integers(0, 255, (64, 64, 3), dtype=np.uint8)
        mask = np.zeros((64, 64), dtype=bool)
        mask[10:20, 10:20] = True
        verdict = detect_annotation_persistence(pixels, pixels.copy(), mask)
        assert verdict == {"persisted": True, "mean_diff": 0.0}

    def test_inverted_pixels_not_persisted(self):
        pixels = np.full((64, 64, 3), 200, dtype=np.uint8)
        mask = np.zeros((64, 64), dtype=bool)
        mask[:8] = True
        flipped = pixels.copy()
        flipped[mask] = 255 - flipped[mask]
        verdict = detect_annotation_persistence(pixels, flipped, mask)
        assert not verdict["persisted"]
        # analytic: every masked pixel differs by |200 - 55| = 145
        assert verdict["mean_diff"] == pytest.approx(145.0)

    def test_interpreter_bake_modes_distinguished(self, translate_scene):
        from ivi.render import render_annotations

        annotated = render_annotations(translate_scene)
        baked = simulate(translate_scene, frames=12, bake_annotations=True)
        clean = simulate(translate_scene, frames=12, bake_annotations=False)
        v_baked = detect_annotation_persistence(
            annotated.pixels, baked.frames[-1], annotated.annotation_mask)
        v_clean = detect_annotation_persistence(
            annotated.pixels, clean.frames[-1], annotated.annotation_mask)
        assert v_baked["persisted"] and not v_clean["persisted"]

    def test_empty_mask_rejected(self):
        pixels = np.zeros((8, 8, 3), dtype=np.uint8)
        with pytest.raises(EvalError) as exc:
            detect_annotation_persistence(pixels, pixels, np.zeros((8, 8), dtype=bool))
        assert exc.value.code == "EMPTY_MASK"

    @given(st.integers(0, 254))
    @settings(max_examples=30, deadline=None)
    def test_monotone_in_difference(self, level):
        """More per-pixel difference can only flip persisted true -> false."""
        base = np.full((16, 16, 3), 0, dtype=np.uint8)
        mask = np.ones((16, 16), dtype=bool)
        lower = base.copy()
        lower[:, :] = level
        higher = base.copy()
        higher[:, :] = level + 1
        v_low = detect_annotation_persistence(base, lower, mask)
        v_high = detect_annotation_persistence(base, higher, mask)
        assert v_low["mean_diff"] <= v_high["mean_diff"]
        if not v_low["persisted"]:
            assert not v_high["persisted"]


class TestSuccessRateReport:
    def test_table_counts_round_exactly(self):
        judgments, methods = build_table2_judgments()
        report = success_rate_report(judgments, methods)
        rates = {(r.instruction, r.method): r.rate for r in report.rows}
        assert rates == TABLE2_EXPECTED_RATES
        assert all(r.total == TABLE2_TOTAL for r in report.rows)

    @pytest.mark.parametrize("successes,expected", [(5, 20.8), (23, 95.8), (0, 0.0)])
    def test_single_cell_rates(self, successes, expected):
        judgments = [
            Judgment(job_id=f"j{k}", instruction_id="a",
                     verdict="success" if k < successes else "failure",
                     rater_id="r", timestamp="t")
            for k in range(24)
        ]
        report = success_rate_report(judgments)
        assert report.rows[0].rate == expected

    def test_totals_match_and_rates_bounded(self):
        judgments, methods = build_table2_judgments()
        report = success_rate_report(judgments, methods)
        assert sum(r.total for r in report.rows) == len(judgments)
        assert all(0.0 <= r.rate <= 100.0 for r in report.rows)

    def test_empty_rejected(self):
        with pytest.raises(EvalError) as exc:
            success_rate_report([])
        assert exc.value.code == "EMPTY_GROUP"

    def test_text_table_mirrors_layout(self):
        judgments, methods = build_table2_judgments()
        text = success_rate_report(judgments, methods).to_text()
        assert "20.8" in text and "58.3" in text and "95.8" in text
        lines = text.splitlines()
        assert lines[0].split()[0] == "instruction"
        assert len(lines) == 2 + len(TABLE2_COUNTS)

    def test_csv_round_trip(self):
        judgments, _ = build_table2_judgments()
        again = read_judgments_csv(write_judgments_csv(judgments))
        assert again == judgments

    def test_csv_header_enforced(self):
        with pytest.raises(EvalError):
            read_judgments_csv("a,b,c\n1,2,3\n")


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=-500, max_value=500),
       st.floats(min_value=-500, max_value=500),
       st.floats(min_value=0.1, max_value=20.0))
def test_direction_score_invariances(tx, ty, gain):
    """Cosine score ignores uniform translation and positive magnitude scaling."""
    base = [(0.0, 0.0), (30.0, 40.0), (60.0, 80.0)]
    ins = translate_ins((0.6, 0.8))
    s0 = check_direction(track_from_xy("obj1", base), ins).score
    shifted = [(x + tx, y + ty) for x, y in base]
    scaled = [(x * gain, y * gain) for x, y in base]
    assert check_direction(track_from_xy("obj1", shifted), ins).score == \
        pytest.approx(s0, abs=1e-9)
    assert check_direction(track_from_xy("obj1", scaled), ins).score == \
        pytest.approx(s0, abs=1e-9)
