"""Interpreter kinematics against independent analytic and sampling oracles."""

import math

import numpy as np
import pytest

from ivi.interpreter import (
    SimulationError,
    camera_transform,
    pose_at,
    schedule_instructions,
    simulate,
)
from ivi.scene import (
    Canvas,
    CameraMove,
    FollowPath,
    GlobalTarget,
    Hold,
    Instruction,
    ObjectTarget,
    PathGeometry,
    PointTarget,
    Pose,
    Rotate,
    StraightArrow,
    Translate,
    derive_semantics,
)

from conftest import make_object, make_scene


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------

def oracle_polyline_point(points, u, samples=20_000):
    """Arc-length position oracle by dense numeric sampling of the polyline."""
    pts = np.asarray(points, dtype=np.float64)
    dense = []
    for a, b in zip(pts[:-1], pts[1:]):
        t = np.linspace(0.0, 1.0, samples // (len(pts) - 1))[:, None]
        dense.append(a + t * (b - a))
    dense = np.concatenate(dense, axis=0)
    deltas = np.diff(dense, axis=0)
    seg = np.hypot(deltas[:, 0], deltas[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = u * cum[-1]
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = max(0, min(i, len(dense) - 2))
    frac = 0.0 if seg[i] == 0 else (s - cum[i]) / seg[i]
    return dense[i] + frac * (dense[i + 1] - dense[i])


def oracle_min_distance(point, points, samples=20_000):
    """Brute-force nearest distance from a point to a densely sampled path.

    Distance is measured to the chords between consecutive samples so that
    on-path queries score ~0 rather than half a sample gap.
    """
    pts = np.asarray(points, dtype=np.float64)
    dense = []
    for a, b in zip(pts[:-1], pts[1:]):
        t = np.linspace(0.0, 1.0, samples // (len(pts) - 1))[:, None]
        dense.append(a + t * (b - a))
    dense = np.concatenate(dense, axis=0)
    a, b = dense[:-1], dense[1:]
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2 = np.where(ab2 == 0.0, 1.0, ab2)
    ap = np.asarray(point)[None, :] - a
    t = np.clip(np.einsum("ij,ij->i", ap, ab) / ab2, 0.0, 1.0)
    d = ap - t[:, None] * ab
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", d, d))))


# ---------------------------------------------------------------------------
# Scheduling
# ---------------------------------------------------------------------------

def _numbered(spans):
    obj = make_object()
    return make_scene([obj], [
        Instruction(id=f"s{k}", text=f"t{k}", target=ObjectTarget("obj1"), order=k,
                    label_anchor=(10.0, 10.0))
        for k in spans
    ])


class TestSchedule:
    def test_equal_partition_96(self):
        tl = schedule_instructions(_numbered((1, 2, 3)), 96)
        spans = [(s.frame_start, s.frame_end) for s in tl.segments]
        assert spans == [(0, 32), (32, 64), (64, 96)]

    def test_remainder_to_last_97(self):
        tl = schedule_instructions(_numbered((1, 2, 3)), 97)
        spans = [(s.frame_start, s.frame_end) for s in tl.segments]
        assert spans == [(0, 32), (32, 64), (64, 97)]

    def test_unnumbered_run_in_parallel(self):
        obj = make_object()
        spec = make_scene([obj], [
            Instruction(id=f"p{k}", text="go", target=ObjectTarget("obj1"),
                        label_anchor=(10.0, 10.0))
            for k in range(2)
        ])
        tl = schedule_instructions(spec, 48)
        assert [(s.frame_start, s.frame_end) for s in tl.segments] == [(0, 48), (0, 48)]

    def test_numbered_sorted_by_order_index(self):
        tl = schedule_instructions(_numbered((3, 1, 2)), 96)
        assert [s.instruction_id for s in tl.segments] == ["s1", "s2", "s3"]

    def test_too_few_frames(self):
        with pytest.raises(SimulationError) as exc:
            schedule_instructions(_numbered((1,)), 1)
        assert exc.value.code == "NO_FRAMES"


# ---------------------------------------------------------------------------
# pose_at
# ---------------------------------------------------------------------------

class TestPoseAt:
    def test_quarter_turn_maps_unit_x_to_unit_y(self):
        pose = pose_at(Pose(1.0, 0.0), Rotate(pivot=(0.0, 0.0), angle_rad=math.pi / 2),
                       None, 1.0)
        assert pose.x == pytest.approx(0.0, abs=1e-9)
        assert pose.y == pytest.approx(1.0, abs=1e-9)
        assert pose.orientation == pytest.approx(math.pi / 2, abs=1e-9)

    def test_translate_is_linear(self):
        pose = pose_at(Pose(10.0, 20.0), Translate(direction=(1.0, 0.0),
                                                   distance_px=100.0), None, 0.5)
        assert (pose.x - 10.0, pose.y - 20.0) == (50.0, 0.0)

    def test_hold_is_identity(self):
        p0 = Pose(3.0, 4.0, 0.5, 1.2)
        assert pose_at(p0, Hold(), None, 0.7) == p0

    def test_follow_path_constant_speed_against_oracle(self):
        points = ((0.0, 0.0), (100.0, 0.0), (100.0, 100.0))
        geom = PathGeometry(points=points)
        pose = pose_at(Pose(0.0, 0.0), FollowPath(), geom, 0.75)
        expected = oracle_polyline_point(points, 0.75)
        assert pose.x == pytest.approx(expected[0], abs=1e-6)
        assert pose.y == pytest.approx(expected[1], abs=1e-6)
        assert (pose.x, pose.y) == (pytest.approx(100.0, abs=1e-6),
                                    pytest.approx(50.0, abs=1e-6))

    def test_follow_path_orientation_follows_tangent(self):
        geom = PathGeometry(points=((0.0, 0.0), (100.0, 0.0), (100.0, 100.0)))
        early = pose_at(Pose(0.0, 0.0), FollowPath(), geom, 0.25)
        late = pose_at(Pose(0.0, 0.0), FollowPath(), geom, 0.75)
        assert early.orientation == pytest.approx(0.0, abs=1e-9)
        assert late.orientation == pytest.approx(math.pi / 2, abs=1e-9)

    def test_missing_semantic_raises(self):
        with pytest.raises(SimulationError) as exc:
            pose_at(Pose(0.0, 0.0), None, None, 0.5)
        assert exc.value.code == "MISSING_SEMANTIC"


class TestCameraTransform:
    CANVAS = Canvas(1280, 720)

    def test_static_identity(self):
        for u in (0.0, 0.3, 1.0):
            assert camera_transform("static", u, self.CANVAS) == ((0.0, 0.0), 1.0)

    def test_zoom_in_endpoint(self):
        assert camera_transform("zoom_in", 1.0, self.CANVAS)[1] == 1.25

    def test_zoom_out_endpoint(self):
        assert camera_transform("zoom_out", 1.0, self.CANVAS)[1] == pytest.approx(0.8)

    def test_pan_left_half_progress(self):
        (dx, dy), zoom = camera_transform("pan_left", 0.5, self.CANVAS)
        assert (dx, dy, zoom) == (-128.0, 0.0, 1.0)

    @pytest.mark.parametrize("kind,axis,sign", [
        ("pan_right", 0, +1), ("tilt_down", 1, +1), ("tilt_up", 1, -1),
    ])
    def test_direction_signs(self, kind, axis, sign):
        offset, _ = camera_transform(kind, 1.0, self.CANVAS)
        assert offset[axis] * sign > 0
        assert offset[1 - axis] == 0.0


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

class TestSimulate:
    def test_static_scene(self, minimal_scene):
        from dataclasses import replace

        spec = replace(minimal_scene, objects=(make_object(),))
        res = simulate(spec, frames=48)
        track = res.tracks["obj1"]
        assert all(p == track.poses[0] for p in track.poses)
        first = res.frames[0]
        assert all(np.array_equal(first, f) for f in res.frames)

    def test_birds_selective_stationarity(self, birds_scene):
        res = simulate(birds_scene, frames=48, fps=12)
        lazy = res.tracks["bird2"].positions()
        assert np.max(np.hypot(*(lazy - lazy[0]).T)) == 0.0
        spec = derive_semantics(birds_scene)
        for i in range(2):
            track = res.tracks[f"bird{i}"].positions()
            net = track[-1] - track[0]
            sem = spec.instruction_by_id(f"fly{i}").semantic
            assert np.hypot(*net) == pytest.approx(sem.distance_px, abs=1e-6)
            cos = np.dot(net, sem.direction) / np.hypot(*net)
            assert cos >= 1 - 1e-9

    def test_three_step_total_displacement(self, three_step_scene):
        res = simulate(three_step_scene, frames=96)
        xs = res.tracks["obj1"].positions()[:, 0]
        assert xs[-1] - xs[0] == pytest.approx(300.0, abs=1e-6)
        assert np.all(np.diff(xs) >= -1e-12)

    def test_chaining_continuity_at_boundaries(self, three_step_scene):
        res = simulate(three_step_scene, frames=96)
        pos = res.tracks["obj1"].positions()
        for boundary in (32, 64):
            gap = np.hypot(*(pos[boundary] - pos[boundary - 1]))
            assert gap <= 1e-6

    def test_rotation_totality(self):
        obj = make_object(x=300.0, y=240.0, r=10.0)
        ins = Instruction(
            id="spin", text="turn", target=ObjectTarget("obj1"),
            label_anchor=(10.0, 10.0),
            semantic=Rotate(pivot=(300.0, 240.0), angle_rad=2.2))
        res = simulate(make_scene([obj], [ins]), frames=60)
        track = res.tracks["obj1"]
        delta = track.poses[-1].orientation - track.poses[0].orientation
        wrapped = (delta - 2.2 + math.pi) % (2 * math.pi) - math.pi
        assert abs(wrapped) <= 1e-9

    def test_follow_path_track_on_path(self):
        obj = make_object(x=60.0, y=60.0, r=10.0)
        points = ((60.0, 60.0), (300.0, 80.0), (500.0, 300.0), (200.0, 400.0))
        ins = Instruction(id="trace", text="follow", target=ObjectTarget("obj1"),
                          label_anchor=(10.0, 10.0),
                          geometry=PathGeometry(points=points))
        res = simulate(make_scene([obj], [ins]), frames=48)
        for pose in res.tracks["obj1"].poses:
            assert oracle_min_distance((pose.x, pose.y), points) <= 1e-3

    def test_camera_frame0_identity_and_track(self):
        ins = Instruction(id="cam", text="zoom in", target=GlobalTarget(),
                          label_anchor=(8.0, 8.0),
                          semantic=CameraMove(kind="zoom_in"))
        spec = make_scene([make_object()], [ins])
        res = simulate(spec, frames=30)
        assert res.camera.offsets[0] == (0.0, 0.0)
        assert res.camera.zooms[0] == 1.0
        assert res.camera.zooms[-1] == pytest.approx(1.25, abs=1e-6)
        plain = simulate(make_scene([make_object()], []), frames=2)
        assert np.array_equal(res.frames[0], plain.frames[0])

    def test_unbound_instruction_rejected(self):
        ins = Instruction(id="a", text="go", target=GlobalTarget(),
                          label_anchor=(10.0, 10.0),
                          geometry=StraightArrow(tail=(100.0, 100.0),
                                                 head=(200.0, 100.0)))
        with pytest.raises(SimulationError) as exc:
            simulate(make_scene([], [ins]), frames=10)
        assert exc.value.code == "UNBOUND_INSTRUCTION"

    def test_bake_annotations_persists_overlay(self, translate_scene):
        baked = simulate(translate_scene, frames=12, bake_annotations=True)
        clean = simulate(translate_scene, frames=12, bake_annotations=False)
        from ivi.render import StyleConfig, render_annotations

        mask = render_annotations(translate_scene).annotation_mask
        ink = StyleConfig().ink
        last_baked = baked.frames[-1]
        last_clean = clean.frames[-1]
        assert (last_baked[mask] == np.array(ink)).all(axis=1).any()
        assert not (last_clean[mask] == np.array(ink)).all(axis=1).any()

    def test_run_dir_layout(self, tmp_path, translate_scene):
        from ivi.interpreter import write_run

        res = simulate(translate_scene, frames=6)
        artifacts = write_run(res, str(tmp_path))
        assert (tmp_path / "frames" / "frame_00000.png").is_file()
        assert (tmp_path / "tracks.json").is_file()
        assert (tmp_path / "camera.json").is_file()
        assert (tmp_path / "timeline.json").is_file()
        assert "frames/frame_00005.png" in artifacts

    def test_tracks_round_trip_docs(self, translate_scene):
        from ivi.interpreter import (camera_from_doc, camera_to_doc,
                                     timeline_from_doc, tracks_from_doc,
                                     tracks_to_doc)

        res = simulate(translate_scene, frames=6)
        tracks = tracks_from_doc(tracks_to_doc(res))
        assert tracks["obj1"].poses == res.tracks["obj1"].poses
        cam = camera_from_doc(camera_to_doc(res))
        assert cam == res.camera
        tl = timeline_from_doc(res.timeline.to_doc())
        assert tl == res.timeline
