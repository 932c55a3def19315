"""ivi: author, render, execute, and evaluate in-frame visual instructions.

The toolkit treats an annotated first frame as the control surface for
image-to-video generation: scenes are authored as `.ivi.json` documents,
rendered deterministically to the exact pixels a backend receives,
executed by a built-in kinematic interpreter for ground truth, and scored
with geometric checks and success-rate reports.
"""

from .scene import (
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
    SceneError,
    SceneSpec,
    StraightArrow,
    SyntheticFrame,
    Translate,
    ValidationReport,
    canonicalize,
    derive_semantics,
    scene_hash,
    validate_scene,
)
from .specio import SceneParseError, load_scene, parse_scene, save_scene, serialize_scene
from .render import AnnotatedFrame, StyleConfig, annotation_mask, compose_panels, \
    render_annotations, render_banner
from .interpreter import CameraTrack, ObjectTrack, Timeline, camera_transform, \
    pose_at, schedule_instructions, simulate
from .gateway import FIXED_PROMPT, BackendConfig, Gateway, GenerationJob
from .evaluate import CheckResult, EvalReport, Judgment, check_camera, check_direction, \
    check_order, check_path, check_stationary, detect_annotation_persistence, \
    success_rate_report
from .scenarios import ScenarioTemplate, instantiate, text_baseline_prompt

__version__ = "0.1.0"
