// Client mirror of the scene document schema (spec_version "1") plus the
// editor's own tool and session types. Scenes are plain JSON objects so
// snapshots and server round-trips stay trivially comparable.

export type XY = [number, number];
export type RGB = [number, number, number];

export interface FrameSource {
  kind: 'image_file' | 'synthetic';
  path?: string;
  background_color?: RGB;
}

export interface SpriteDoc {
  kind: 'disc' | 'rect' | 'patch';
  radius_px?: number;
  width_px?: number;
  height_px?: number;
  color?: RGB;
  path?: string;
}

export interface PoseDoc {
  x: number;
  y: number;
  orientation?: number;
  scale?: number;
}

export interface ObjectDoc {
  id: string;
  sprite: SpriteDoc;
  pose0: PoseDoc;
}

export interface TargetDoc {
  kind: 'global' | 'point' | 'region' | 'object';
  x?: number;
  y?: number;
  width?: number;
  height?: number;
  object_id?: string;
}

export interface GeometryDoc {
  kind: 'straight_arrow' | 'curved_arrow' | 'path';
  tail?: XY;
  head?: XY;
  start?: XY;
  end?: XY;
  control?: XY;
  sense?: 'cw' | 'ccw';
  points?: XY[];
  interpolation?: 'polyline' | 'quadratic-spline';
}

export interface SemanticDoc {
  kind: 'translate' | 'rotate' | 'follow_path' | 'camera_move' | 'hold';
  direction?: XY;
  distance_px?: number;
  pivot?: XY;
  angle_rad?: number;
  camera?: string;
}

export interface InstructionDoc {
  id: string;
  text: string;
  target: TargetDoc;
  label_anchor: XY;
  order?: number;
  geometry?: GeometryDoc;
  semantic?: SemanticDoc;
}

export interface SceneDoc {
  spec_version: '1';
  canvas: { width_px: number; height_px: number };
  seed_frame: FrameSource;
  objects?: ObjectDoc[];
  instructions?: InstructionDoc[];
  banner?: { text: string };
  panels?: unknown[];
}

export type CanvasTool =
  | 'select'
  | 'text_label'
  | 'straight_arrow'
  | 'curved_arrow'
  | 'trajectory'
  | 'order_badge'
  | 'target_region'
  | 'banner';

export interface JobDoc {
  job_id: string;
  scene_hash: string;
  backend_id: string;
  prompt: string;
  status: 'queued' | 'running' | 'succeeded' | 'failed';
  failure_reason?: string;
  [extra: string]: unknown;
}

export interface ReportRowDoc {
  instruction: string;
  method: string;
  successes: number;
  total: number;
  rate: number;
}

export interface ReportDoc {
  rows: ReportRowDoc[];
}

export interface JudgmentDraft {
  job_id: string;
  instruction_id: string;
  rater_id: string;
  verdict: 'success' | 'failure';
  timestamp: string;
  experiment?: string;
}
