// Scene document helpers: stable serialization (for undo snapshots and
// export) and the client-side validation mirror of the server schema, so
// every mutation the editor produces is a scene the server will accept.

import type { InstructionDoc, SceneDoc, XY } from './types.js';

const MIN_CANVAS = 64;
const MIN_ARROW_LEN = 4;
const MAX_TEXT = 120;
const MAX_BANNER = 200;

/** Deterministic JSON: keys sorted, object/instruction lists sorted by id. */
export function serializeScene(scene: SceneDoc): string {
  const prepared: SceneDoc = {
    ...scene,
    objects: [...(scene.objects ?? [])].sort((a, b) => a.id.localeCompare(b.id)),
    instructions: [...(scene.instructions ?? [])].sort((a, b) =>
      a.id.localeCompare(b.id),
    ),
  };
  return stableStringify(prepared);
}

export function parseScene(data: string): SceneDoc {
  return JSON.parse(data) as SceneDoc;
}

export function cloneScene(scene: SceneDoc): SceneDoc {
  return JSON.parse(JSON.stringify(scene)) as SceneDoc;
}

function stableStringify(value: unknown): string {
  if (value === null || typeof value !== 'object') {
    return JSON.stringify(value);
  }
  if (Array.isArray(value)) {
    return `[${value.map(stableStringify).join(',')}]`;
  }
  const entries = Object.entries(value as Record<string, unknown>)
    .filter(([, v]) => v !== undefined)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([k, v]) => `${JSON.stringify(k)}:${stableStringify(v)}`);
  return `{${entries.join(',')}}`;
}

/** Structural equality ignoring key order and list order of id'd lists. */
export function scenesFieldIdentical(a: SceneDoc, b: SceneDoc): boolean {
  return serializeScene(a) === serializeScene(b);
}

export interface ValidationIssue {
  code: string;
  path: string;
  message: string;
}

function inBounds(p: XY, scene: SceneDoc): boolean {
  return (
    p[0] >= 0 &&
    p[0] < scene.canvas.width_px &&
    p[1] >= 0 &&
    p[1] < scene.canvas.height_px
  );
}

function arrowLength(tail: XY, head: XY): number {
  return Math.hypot(head[0] - tail[0], head[1] - tail[1]);
}

/** Mirror of the server's structural validation; empty result means the
 *  server will accept the scene. */
export function validateScene(scene: SceneDoc): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  const err = (code: string, path: string, message: string) =>
    issues.push({ code, path, message });

  if (scene.spec_version !== '1') {
    err('BAD_VERSION', '$.spec_version', 'spec_version must be "1"');
  }
  if (scene.canvas.width_px < MIN_CANVAS || scene.canvas.height_px < MIN_CANVAS) {
    err('CANVAS_TOO_SMALL', '$.canvas', `canvas must be at least ${MIN_CANVAS}px`);
  }

  const objectIds = new Set<string>();
  (scene.objects ?? []).forEach((obj, i) => {
    if (objectIds.has(obj.id)) {
      err('DUPLICATE_ID', `$.objects[${i}].id`, `object id ${obj.id} repeats`);
    }
    objectIds.add(obj.id);
  });

  const insIds = new Set<string>();
  const orders = new Set<number>();
  (scene.instructions ?? []).forEach((ins, i) => {
    const path = `$.instructions[${i}]`;
    if (insIds.has(ins.id)) {
      err('DUPLICATE_ID', `${path}.id`, `instruction id ${ins.id} repeats`);
    }
    insIds.add(ins.id);
    if (ins.text.trim() === '') err('EMPTY_TEXT', `${path}.text`, 'empty text');
    if (ins.text.length > MAX_TEXT) {
      err('TEXT_TOO_LONG', `${path}.text`, `text over ${MAX_TEXT} chars`);
    }
    if (ins.order !== undefined) {
      if (!Number.isInteger(ins.order) || ins.order < 1) {
        err('ORDER_NOT_POSITIVE', `${path}.order`, 'order must be a positive int');
      } else if (orders.has(ins.order)) {
        err('DUPLICATE_ORDER', `${path}.order`, `order ${ins.order} repeats`);
      }
      orders.add(ins.order);
    }
    if (!inBounds(ins.label_anchor, scene)) {
      err('COORD_OUT_OF_BOUNDS', `${path}.label_anchor`, 'anchor outside canvas');
    }
    if (ins.target.kind === 'object' && !objectIds.has(ins.target.object_id ?? '')) {
      err('UNKNOWN_OBJECT', `${path}.target.object_id`, 'unknown target object');
    }
    validateGeometry(ins, path, scene, err);
    if (ins.semantic?.kind === 'camera_move' && ins.target.kind !== 'global') {
      err('CAMERA_NEEDS_GLOBAL', `${path}.target`, 'camera moves must target the scene');
    }
  });

  if (scene.banner !== undefined) {
    if (scene.banner.text.trim() === '') err('EMPTY_TEXT', '$.banner.text', 'empty banner');
    if (scene.banner.text.length > MAX_BANNER) {
      err('TEXT_TOO_LONG', '$.banner.text', `banner over ${MAX_BANNER} chars`);
    }
  }
  return issues;
}

function validateGeometry(
  ins: InstructionDoc,
  path: string,
  scene: SceneDoc,
  err: (code: string, path: string, message: string) => void,
): void {
  const geom = ins.geometry;
  if (!geom) return;
  if (geom.kind === 'straight_arrow') {
    if (arrowLength(geom.tail!, geom.head!) < MIN_ARROW_LEN) {
      err('DEGENERATE_ARROW', `${path}.geometry`, 'arrow shorter than 4 px');
    }
    for (const p of [geom.tail!, geom.head!]) {
      if (!inBounds(p, scene)) {
        err('COORD_OUT_OF_BOUNDS', `${path}.geometry`, 'arrow endpoint outside canvas');
      }
    }
  } else if (geom.kind === 'curved_arrow') {
    for (const p of [geom.start!, geom.end!, geom.control!]) {
      if (!inBounds(p, scene)) {
        err('COORD_OUT_OF_BOUNDS', `${path}.geometry`, 'curve point outside canvas');
      }
    }
  } else {
    const pts = geom.points ?? [];
    if (pts.length < 2) err('PATH_TOO_SHORT', `${path}.geometry.points`, 'need 2+ points');
    pts.forEach((p, k) => {
      if (!inBounds(p, scene)) {
        err('COORD_OUT_OF_BOUNDS', `${path}.geometry.points[${k}]`, 'point outside canvas');
      }
      if (k > 0 && p[0] === pts[k - 1][0] && p[1] === pts[k - 1][1]) {
        err('DUPLICATE_PATH_POINT', `${path}.geometry.points[${k}]`, 'repeated point');
      }
    });
  }
}

export function emptyScene(width = 640, height = 480): SceneDoc {
  return {
    spec_version: '1',
    canvas: { width_px: width, height_px: height },
    seed_frame: { kind: 'synthetic', background_color: [208, 208, 200] },
    objects: [],
    instructions: [],
  };
}
