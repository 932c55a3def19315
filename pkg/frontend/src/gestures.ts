// Pointer gestures become scene mutations. Every tool funnels through
// SessionState.apply so undo/redo and client-side validation are uniform.
// Gestures below the 4 px degenerate-arrow span are ignored outright.

import type { SessionState } from './session.js';
import type { CanvasTool, SceneDoc, TargetDoc, XY } from './types.js';
import { downsampleStroke } from './freehand.js';

export const MIN_GESTURE_SPAN_PX = 4;

function span(a: XY, b: XY): number {
  return Math.hypot(b[0] - a[0], b[1] - a[1]);
}

function clampToCanvas(p: XY, scene: SceneDoc): XY {
  return [
    Math.min(Math.max(p[0], 0), scene.canvas.width_px - 1),
    Math.min(Math.max(p[1], 0), scene.canvas.height_px - 1),
  ];
}

/** Nearest object within reach of a click, for implicit target binding. */
export function nearestTarget(scene: SceneDoc, p: XY, reach = 120): TargetDoc {
  let best: { id: string; d: number } | null = null;
  for (const obj of scene.objects ?? []) {
    const d = span(p, [obj.pose0.x, obj.pose0.y]);
    if (d <= reach && (best === null || d < best.d)) {
      best = { id: obj.id, d };
    }
  }
  return best ? { kind: 'object', object_id: best.id } : { kind: 'global' };
}

function anchorAbove(scene: SceneDoc, p: XY): XY {
  return clampToCanvas([p[0], p[1] - 40], scene);
}

/** Drag tail->head creates a straight arrow bound to the nearest object. */
export function dragStraightArrow(
  session: SessionState,
  tail: XY,
  head: XY,
  text = 'move',
): boolean {
  if (span(tail, head) < MIN_GESTURE_SPAN_PX) return false;
  return session.apply((scene) => {
    scene.instructions = scene.instructions ?? [];
    scene.instructions.push({
      id: session.freshInstructionId(),
      text,
      target: nearestTarget(scene, tail),
      label_anchor: anchorAbove(scene, tail),
      geometry: {
        kind: 'straight_arrow',
        tail: clampToCanvas(tail, scene),
        head: clampToCanvas(head, scene),
      },
    });
  });
}

/** Click-drag-click: start, control, end of a curved arrow. */
export function clickCurvedArrow(
  session: SessionState,
  start: XY,
  control: XY,
  end: XY,
  sense: 'cw' | 'ccw' = 'ccw',
  text = 'turn',
): boolean {
  if (span(start, end) < MIN_GESTURE_SPAN_PX) return false;
  return session.apply((scene) => {
    scene.instructions = scene.instructions ?? [];
    scene.instructions.push({
      id: session.freshInstructionId(),
      text,
      target: nearestTarget(scene, start),
      label_anchor: anchorAbove(scene, start),
      geometry: {
        kind: 'curved_arrow',
        start: clampToCanvas(start, scene),
        control: clampToCanvas(control, scene),
        end: clampToCanvas(end, scene),
        sense,
      },
    });
  });
}

/** Freehand stroke, downsampled to at most 32 trajectory anchors. */
export function strokeTrajectory(
  session: SessionState,
  rawStroke: XY[],
  text = 'follow this path',
): boolean {
  const anchors = downsampleStroke(rawStroke);
  if (anchors.length < 2) return false;
  if (span(anchors[0], anchors[anchors.length - 1]) < MIN_GESTURE_SPAN_PX) {
    return false;
  }
  return session.apply((scene) => {
    scene.instructions = scene.instructions ?? [];
    scene.instructions.push({
      id: session.freshInstructionId(),
      text,
      target: nearestTarget(scene, anchors[0]),
      label_anchor: anchorAbove(scene, anchors[0]),
      geometry: {
        kind: 'path',
        points: anchors.map((p) => clampToCanvas(p, scene)),
        interpolation: 'quadratic-spline',
      },
    });
  });
}

/** Click opens the inline editor; commits a text label at the click point. */
export function placeTextLabel(session: SessionState, at: XY, text: string): boolean {
  if (text.trim() === '') return false;
  return session.apply((scene) => {
    scene.instructions = scene.instructions ?? [];
    scene.instructions.push({
      id: session.freshInstructionId(),
      text,
      target: nearestTarget(scene, at),
      label_anchor: clampToCanvas(at, scene),
    });
  });
}

/** Assign the next free order index to an instruction (or a given one). */
export function assignOrderBadge(
  session: SessionState,
  instructionId: string,
  order?: number,
): boolean {
  return session.apply((scene) => {
    const instructions = scene.instructions ?? [];
    const target = instructions.find((i) => i.id === instructionId);
    if (!target) throw new Error(`no instruction ${instructionId}`);
    const taken = new Set(
      instructions.filter((i) => i.order !== undefined).map((i) => i.order),
    );
    let next = order ?? 1;
    while (order === undefined && taken.has(next)) next += 1;
    target.order = next;
  });
}

/** Drag a rectangle to scope an instruction to a region. */
export function dragTargetRegion(
  session: SessionState,
  corner1: XY,
  corner2: XY,
  text = 'act here',
): boolean {
  if (span(corner1, corner2) < MIN_GESTURE_SPAN_PX) return false;
  return session.apply((scene) => {
    const a = clampToCanvas(corner1, scene);
    const b = clampToCanvas(corner2, scene);
    const x = Math.min(a[0], b[0]);
    const y = Math.min(a[1], b[1]);
    const region: TargetDoc = {
      kind: 'region',
      x,
      y,
      width: Math.max(1, Math.abs(b[0] - a[0]) - 1),
      height: Math.max(1, Math.abs(b[1] - a[1]) - 1),
    };
    scene.instructions = scene.instructions ?? [];
    scene.instructions.push({
      id: session.freshInstructionId(),
      text,
      target: region,
      label_anchor: [x, y],
    });
  });
}

/** Set or replace the banner caption strip. */
export function setBanner(session: SessionState, text: string): boolean {
  if (text.trim() === '') return false;
  return session.apply((scene) => {
    scene.banner = { text };
  });
}

/** Hit-test for the select tool: nearest instruction label within reach. */
export function pickInstruction(scene: SceneDoc, p: XY, reach = 24): string | null {
  let best: { id: string; d: number } | null = null;
  for (const ins of scene.instructions ?? []) {
    const d = span(p, ins.label_anchor);
    if (d <= reach && (best === null || d < best.d)) best = { id: ins.id, d };
  }
  return best?.id ?? null;
}

export const TOOLBAR: CanvasTool[] = [
  'select',
  'text_label',
  'straight_arrow',
  'curved_arrow',
  'trajectory',
  'order_badge',
  'target_region',
  'banner',
];
