"""Instruction-following checks, persistence detection, and success reports.

The geometric checks consume object/camera tracks (from the built-in
interpreter or from any external tracker emitting the same tracks.json
schema). They implement the motion contracts from scratch, independently
of the interpreter's code paths, so interpreter-vs-checker agreement is a
meaningful closure test and not a tautology.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .interpreter import CameraTrack, ObjectTrack, Segment, Timeline
from .interpreter import PAN_FRACTION, ZOOM_IN_DELTA, ZOOM_OUT_DELTA
from .scene import PathGeometry, SceneSpec, Translate

# Defaults tuned for the deterministic interpreter; external videos need
# looser gates (direction 0.8 stays, path 15.0 px, stationary 2.0 px).
DIRECTION_THRESHOLD = 0.8
PATH_TOL_INTERPRETER_PX = 0.5
PATH_TOL_EXTERNAL_PX = 15.0
STATIONARY_EPS_PX = 2.0
SPEED_EPS_PX_PER_FRAME = 0.1
MIN_NET_DISPLACEMENT_PX = 2.0
PERSISTENCE_MEAN_DIFF = 12.0
CAMERA_TOL = 1e-6

# Brute-force oracle resolution for nearest-point-on-path queries.
PATH_ORACLE_SAMPLES = 10_000


class EvalError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


@dataclass(frozen=True)
class CheckResult:
    check: str
    instruction_id: str
    score: float
    passed: bool
    details: str = ""

    def to_doc(self) -> dict:
        return {"check": self.check, "instruction_id": self.instruction_id,
                "score": self.score, "pass": self.passed, "details": self.details}


# ---------------------------------------------------------------------------
# Geometry checks
# ---------------------------------------------------------------------------

def _segment_slice(track: ObjectTrack, segment: Optional[Segment]) -> np.ndarray:
    positions = track.positions()
    if segment is None:
        return positions
    return positions[segment.frame_start:segment.frame_end]


def check_direction(track: ObjectTrack, instruction, *,
                    segment: Optional[Segment] = None,
                    threshold: float = DIRECTION_THRESHOLD) -> CheckResult:
    """Cosine between the net displacement and the commanded direction."""
    sem = instruction.semantic
    if not isinstance(sem, Translate):
        raise EvalError("SEMANTIC_MISMATCH",
                        f"instruction {instruction.id!r} is not a translation")
    positions = _segment_slice(track, segment)
    if len(positions) < 2:
        raise EvalError("SEMANTIC_MISMATCH", "track needs at least 2 frames")
    net = positions[-1] - positions[0]
    magnitude = float(np.hypot(net[0], net[1]))
    if magnitude == 0.0:
        score = 0.0
    else:
        score = float((net[0] * sem.direction[0] + net[1] * sem.direction[1]) / magnitude)
    passed = score >= threshold and magnitude >= MIN_NET_DISPLACEMENT_PX
    return CheckResult("direction", instruction.id, score, passed,
                       f"net displacement {magnitude:.3f} px")


def sample_path_points(geom: PathGeometry, n: int = PATH_ORACLE_SAMPLES) -> np.ndarray:
    """Dense on-path samples for the brute-force nearest-point oracle.

    Implemented here, independently of the interpreter's arc-length code:
    polylines keep their exact vertices plus uniform subdivisions, and
    quadratic-spline paths are the midpoint-smoothed Bezier chain sampled
    uniformly in parameter.
    """
    anchors = [np.asarray(p, dtype=np.float64) for p in geom.points]
    if geom.interpolation == "polyline":
        per_seg = max(2, n // max(1, len(anchors) - 1))
        pieces = []
        for a, b in zip(anchors[:-1], anchors[1:]):
            t = np.linspace(0.0, 1.0, per_seg)[:, None]
            pieces.append(a + t * (b - a))
        return np.concatenate(pieces, axis=0)
    if len(anchors) == 2:
        t = np.linspace(0.0, 1.0, n)[:, None]
        return anchors[0] + t * (anchors[1] - anchors[0])
    segments = []
    current = anchors[0]
    for i in range(1, len(anchors) - 1):
        end = (anchors[i] + anchors[i + 1]) / 2.0 if i < len(anchors) - 2 else anchors[-1]
        segments.append((current, anchors[i], end))
        current = end
    per_seg = max(2, n // len(segments))
    pieces = []
    for p0, c, p1 in segments:
        t = np.linspace(0.0, 1.0, per_seg)[:, None]
        pieces.append((1 - t) ** 2 * p0 + 2 * (1 - t) * t * c + t ** 2 * p1)
    return np.concatenate(pieces, axis=0)


def distance_to_sampled_path(points: np.ndarray, path_samples: np.ndarray) -> np.ndarray:
    """Exact distance from each query point to the finely sampled path.

    Distances are measured to the chord segments between consecutive
    samples, so on-curve queries score ~0 instead of half a sample gap.
    """
    a = path_samples[:-1]
    b = path_samples[1:]
    ab = b - a
    ab_len2 = np.einsum("ij,ij->i", ab, ab)
    ab_len2 = np.where(ab_len2 == 0.0, 1.0, ab_len2)
    out = np.empty(len(points), dtype=np.float64)
    for i, p in enumerate(points):
        ap = p[None, :] - a
        t = np.clip(np.einsum("ij,ij->i", ap, ab) / ab_len2, 0.0, 1.0)
        closest = a + t[:, None] * ab
        d = p[None, :] - closest
        out[i] = math.sqrt(float(np.min(np.einsum("ij,ij->i", d, d))))
    return out


def check_path(track: ObjectTrack, geom: PathGeometry, *,
               segment: Optional[Segment] = None,
               tol_px: float = PATH_TOL_INTERPRETER_PX,
               instruction_id: str = "") -> CheckResult:
    """Max deviation of the track from the drawn trajectory."""
    if not isinstance(geom, PathGeometry):
        raise EvalError("SEMANTIC_MISMATCH", "check_path needs path geometry")
    positions = _segment_slice(track, segment)
    samples = sample_path_points(geom)
    deviations = distance_to_sampled_path(positions, samples)
    score = float(np.max(deviations))
    return CheckResult("path", instruction_id or track.object_id, score,
                       score <= tol_px, f"max deviation over {len(positions)} frames")


def _motion_runs(positions: np.ndarray, speed_eps: float) -> list[tuple[int, int]]:
    """Maximal frame runs where per-frame speed exceeds speed_eps.

    A run (a, b) covers motion between frames a and b inclusive.
    """
    deltas = np.diff(positions, axis=0)
    speeds = np.hypot(deltas[:, 0], deltas[:, 1])
    runs = []
    start = None
    for i, s in enumerate(speeds):
        if s > speed_eps and start is None:
            start = i
        elif s <= speed_eps and start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(speeds)))
    return runs


def check_order(tracks: Mapping[str, ObjectTrack], timeline: Timeline,
                spec: SceneSpec, *,
                speed_eps: float = SPEED_EPS_PX_PER_FRAME) -> CheckResult:
    """Verify numbered steps execute in order-index sequence.

    Each numbered instruction's motion interval is the k-th speed run of
    its target object (k = the instruction's rank among numbered
    instructions sharing that target); interval midpoints must be strictly
    increasing along the order sequence.
    """
    from .scene import ObjectTarget

    numbered = sorted((i for i in spec.instructions if i.order is not None),
                      key=lambda i: i.order)
    if len(numbered) < 2:
        raise EvalError("NO_NUMBERED_STEPS", "need at least 2 numbered instructions")

    rank_within_target: dict[str, int] = {}
    midpoints: list[tuple[int, float]] = []  # (order, midpoint)
    for ins in numbered:
        if not isinstance(ins.target, ObjectTarget):
            raise EvalError("SEMANTIC_MISMATCH",
                            f"numbered instruction {ins.id!r} has no object target")
        oid = ins.target.object_id
        rank = rank_within_target.get(oid, 0)
        rank_within_target[oid] = rank + 1
        track = tracks.get(oid)
        if track is None:
            raise EvalError("SEMANTIC_MISMATCH", f"no track for object {oid!r}")
        runs = _motion_runs(track.positions(), speed_eps)
        if rank >= len(runs):
            return CheckResult("order", ins.id, 0.0, False,
                               f"object {oid!r} shows {len(runs)} motion runs, "
                               f"step {ins.order} found none")
        a, b = runs[rank]
        midpoints.append((ins.order, (a + b) / 2.0))

    for (o1, m1), (o2, m2) in zip(midpoints, midpoints[1:]):
        if m2 <= m1:
            return CheckResult("order", "", 0.0, False,
                               f"steps {o1} and {o2} execute out of order "
                               f"(midpoints {m1:.1f} vs {m2:.1f})")
    return CheckResult("order", "", 1.0, True,
                       f"{len(numbered)} steps in order")


def check_stationary(track: ObjectTrack, *,
                     eps_px: float = STATIONARY_EPS_PX) -> CheckResult:
    """Max displacement from the initial pose over all frames."""
    positions = track.positions()
    if len(positions) == 0:
        raise EvalError("SEMANTIC_MISMATCH", "empty track")
    deltas = positions - positions[0]
    score = float(np.max(np.hypot(deltas[:, 0], deltas[:, 1])))
    return CheckResult("stationary", track.object_id, score, score <= eps_px,
                       f"max drift over {len(positions)} frames")


def _monotone(values: np.ndarray, sign: int, tol: float) -> bool:
    """Nondecreasing (sign=+1) or nonincreasing (sign=-1) within tol."""
    deltas = np.diff(values) * sign
    return bool(np.all(deltas >= -tol))


def check_camera(camera: CameraTrack, kind: str, *,
                 instruction_id: str = "") -> CheckResult:
    """Verify the camera track matches the contract for `kind`.

    Pans/tilts: the active axis sweeps monotonically to +-20% of the
    dimension, the other axis and zoom stay identity. Zooms: offsets stay
    zero and zoom sweeps monotonically to its endpoint. Static: identity
    throughout. All comparisons within 1e-6.
    """
    if len(camera) < 2:
        raise EvalError("SEMANTIC_MISMATCH", "camera track needs at least 2 frames")
    offsets = np.asarray(camera.offsets, dtype=np.float64)
    zooms = np.asarray(camera.zooms, dtype=np.float64)
    tol = CAMERA_TOL

    def result(ok: bool, score: float, details: str) -> CheckResult:
        return CheckResult("camera", instruction_id or kind, score, ok, details)

    if kind == "static":
        ok = bool(np.all(np.abs(offsets) <= tol) and np.all(np.abs(zooms - 1.0) <= tol))
        return result(ok, float(np.max(np.abs(offsets))), "identity expected")

    axis_specs = {
        "pan_left": (0, -1, -PAN_FRACTION * camera.width_px),
        "pan_right": (0, +1, PAN_FRACTION * camera.width_px),
        "tilt_up": (1, -1, -PAN_FRACTION * camera.height_px),
        "tilt_down": (1, +1, PAN_FRACTION * camera.height_px),
    }
    if kind in axis_specs:
        axis, sign, endpoint = axis_specs[kind]
        active = offsets[:, axis]
        other = offsets[:, 1 - axis]
        ok = (_monotone(active, sign, tol)
              and abs(active[0]) <= tol
              and abs(active[-1] - endpoint) <= tol
              and bool(np.all(np.abs(other) <= tol))
              and bool(np.all(np.abs(zooms - 1.0) <= tol)))
        return result(ok, float(active[-1]),
                      f"endpoint {active[-1]:.3f}, expected {endpoint:.3f}")

    if kind in ("zoom_in", "zoom_out"):
        sign = +1 if kind == "zoom_in" else -1
        endpoint = 1.0 + ZOOM_IN_DELTA if kind == "zoom_in" else 1.0 - ZOOM_OUT_DELTA
        ok = (_monotone(zooms, sign, tol)
              and abs(zooms[0] - 1.0) <= tol
              and abs(zooms[-1] - endpoint) <= tol
              and bool(np.all(np.abs(offsets) <= tol)))
        return result(ok, float(zooms[-1]),
                      f"endpoint {zooms[-1]:.4f}, expected {endpoint:.4f}")

    raise EvalError("SEMANTIC_MISMATCH", f"unknown camera kind {kind!r}")


# ---------------------------------------------------------------------------
# Annotation persistence
# ---------------------------------------------------------------------------

def detect_annotation_persistence(input_pixels: np.ndarray, last_frame: np.ndarray,
                                  mask: np.ndarray) -> dict:
    """Compare input annotations against the final frame over the mask.

    persisted means the masked pixels still look like the drawn markers
    (mean absolute RGB difference below the 12.0 gate on the 0-255 scale).
    """
    if not mask.any():
        raise EvalError("EMPTY_MASK", "annotation mask has no set pixels")
    if last_frame.shape != input_pixels.shape:
        from PIL import Image

        im = Image.fromarray(last_frame, mode="RGB").resize(
            (input_pixels.shape[1], input_pixels.shape[0]), Image.BILINEAR)
        last_frame = np.asarray(im, dtype=np.uint8)
    diff = np.abs(input_pixels.astype(np.int16) - last_frame.astype(np.int16))
    mean_diff = float(diff[mask].mean())
    return {"persisted": mean_diff < PERSISTENCE_MEAN_DIFF, "mean_diff": mean_diff}


# ---------------------------------------------------------------------------
# Judgments and success-rate reports
# ---------------------------------------------------------------------------

JUDGMENTS_CSV_HEADER = ["job_id", "instruction_id", "rater_id", "verdict", "timestamp"]


@dataclass(frozen=True)
class Judgment:
    job_id: str
    instruction_id: str
    verdict: str  # "success" | "failure"
    rater_id: str
    timestamp: str

    def __post_init__(self):
        if self.verdict not in ("success", "failure"):
            raise ValueError(f"verdict must be success or failure, got {self.verdict!r}")

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.job_id, self.instruction_id, self.rater_id)


@dataclass(frozen=True)
class ReportRow:
    instruction: str
    method: str
    successes: int
    total: int

    @property
    def rate(self) -> float:
        return round(100.0 * self.successes / self.total, 1)


@dataclass
class EvalReport:
    rows: list[ReportRow] = field(default_factory=list)

    @property
    def instructions(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row.instruction not in seen:
                seen.append(row.instruction)
        return seen

    @property
    def methods(self) -> list[str]:
        seen = []
        for row in self.rows:
            if row.method not in seen:
                seen.append(row.method)
        return seen

    def to_doc(self) -> dict:
        return {
            "rows": [
                {"instruction": r.instruction, "method": r.method,
                 "successes": r.successes, "total": r.total, "rate": r.rate}
                for r in self.rows
            ]
        }

    def to_text(self) -> str:
        """Aligned success-rate table: instruction rows x method columns."""
        methods = self.methods
        cells = {(r.instruction, r.method): r for r in self.rows}
        label_w = max([len("instruction")] + [len(i) for i in self.instructions])
        col_w = max([12] + [len(m) for m in methods])
        header = "instruction".ljust(label_w) + "".join(
            "  " + m.rjust(col_w) for m in methods)
        lines = [header, "-" * len(header)]
        for ins in self.instructions:
            cols = []
            for m in methods:
                row = cells.get((ins, m))
                cols.append(f"{row.rate}% ({row.successes}/{row.total})" if row else "-")
            lines.append(ins.ljust(label_w) + "".join("  " + c.rjust(col_w) for c in cols))
        return "\n".join(lines)


def read_judgments_csv(data: str) -> list[Judgment]:
    reader = csv.DictReader(io.StringIO(data))
    expected = set(JUDGMENTS_CSV_HEADER)
    if reader.fieldnames is None or set(reader.fieldnames) != expected:
        raise EvalError("EMPTY_GROUP",
                        f"judgments CSV must have header {','.join(JUDGMENTS_CSV_HEADER)}")
    return [Judgment(job_id=row["job_id"], instruction_id=row["instruction_id"],
                     verdict=row["verdict"], rater_id=row["rater_id"],
                     timestamp=row["timestamp"])
            for row in reader]


def write_judgments_csv(judgments: Iterable[Judgment]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(JUDGMENTS_CSV_HEADER)
    for j in judgments:
        writer.writerow([j.job_id, j.instruction_id, j.rater_id, j.verdict, j.timestamp])
    return out.getvalue()


def success_rate_report(judgments: Sequence[Judgment],
                        methods: Optional[Mapping[str, str]] = None) -> EvalReport:
    """Aggregate judgments into per-(instruction, method) success rates.

    `methods` maps job_id to a method label; unmapped jobs group under
    "all". Raters pool: every judgment counts once. Rows are ordered by
    instruction label, then method label.
    """
    if not judgments:
        raise EvalError("EMPTY_GROUP", "no judgments to aggregate")
    groups: dict[tuple[str, str], list[Judgment]] = {}
    for j in judgments:
        method = methods.get(j.job_id, "all") if methods else "all"
        groups.setdefault((j.instruction_id, method), []).append(j)
    rows = []
    for (instruction, method) in sorted(groups):
        members = groups[(instruction, method)]
        successes = sum(1 for j in members if j.verdict == "success")
        rows.append(ReportRow(instruction=instruction, method=method,
                              successes=successes, total=len(members)))
    return EvalReport(rows=rows)


# ---------------------------------------------------------------------------
# Run-directory evaluation (used by the CLI and service)
# ---------------------------------------------------------------------------

def evaluate_run(spec: SceneSpec, tracks: Mapping[str, ObjectTrack],
                 camera: Optional[CameraTrack], timeline: Timeline, *,
                 checks: Sequence[str] = ("direction", "path", "order",
                                          "stationary", "camera"),
                 input_pixels: Optional[np.ndarray] = None,
                 input_mask: Optional[np.ndarray] = None,
                 last_frame: Optional[np.ndarray] = None,
                 path_tol_px: float = PATH_TOL_INTERPRETER_PX,
                 direction_threshold: float = DIRECTION_THRESHOLD,
                 stationary_eps_px: float = STATIONARY_EPS_PX) -> list[CheckResult]:
    """Run every applicable check against one generation run."""
    from .scene import CameraMove, FollowPath, ObjectTarget, derive_semantics

    spec = derive_semantics(spec)
    results: list[CheckResult] = []
    instructed = set()
    for ins in spec.instructions:
        if isinstance(ins.target, ObjectTarget) and ins.semantic is not None \
                and not isinstance(ins.semantic, CameraMove):
            instructed.add(ins.target.object_id)
        seg = timeline.segment_for(ins.id)
        if isinstance(ins.semantic, Translate) and "direction" in checks:
            track = tracks.get(getattr(ins.target, "object_id", ""))
            if track is not None:
                results.append(check_direction(track, ins, segment=seg,
                                               threshold=direction_threshold))
        elif isinstance(ins.semantic, FollowPath) and "path" in checks:
            track = tracks.get(getattr(ins.target, "object_id", ""))
            if track is not None and isinstance(ins.geometry, PathGeometry):
                results.append(check_path(track, ins.geometry, segment=seg,
                                          tol_px=path_tol_px, instruction_id=ins.id))
        elif isinstance(ins.semantic, CameraMove) and "camera" in checks \
                and camera is not None:
            results.append(check_camera(camera, ins.semantic.kind,
                                        instruction_id=ins.id))

    if "order" in checks:
        numbered = [i for i in spec.instructions if i.order is not None]
        if len(numbered) >= 2:
            results.append(check_order(tracks, timeline, spec))

    if "stationary" in checks:
        for oid, track in tracks.items():
            if oid not in instructed:
                results.append(check_stationary(track, eps_px=stationary_eps_px))

    if "persistence" in checks and input_pixels is not None \
            and input_mask is not None and last_frame is not None:
        verdict = detect_annotation_persistence(input_pixels, last_frame, input_mask)
        results.append(CheckResult(
            "persistence", "", verdict["mean_diff"], not verdict["persisted"],
            "annotations persisted in final frame" if verdict["persisted"]
            else "final frame clean of annotations"))

    return results
