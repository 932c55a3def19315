// Freehand stroke simplification: raw pointer trails become trajectory
// anchors. Ramer-Douglas-Peucker with an escalating tolerance keeps the
// anchor count within the scene budget while bounding deviation from the
// raw stroke.

import type { XY } from './types.js';

export const MAX_TRAJECTORY_ANCHORS = 32;

function pointSegmentDistance(p: XY, a: XY, b: XY): number {
  const abx = b[0] - a[0];
  const aby = b[1] - a[1];
  const len2 = abx * abx + aby * aby;
  if (len2 === 0) return Math.hypot(p[0] - a[0], p[1] - a[1]);
  let t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2;
  t = Math.max(0, Math.min(1, t));
  return Math.hypot(p[0] - (a[0] + t * abx), p[1] - (a[1] + t * aby));
}

function rdp(points: XY[], epsilon: number): XY[] {
  if (points.length <= 2) return [...points];
  let maxDist = -1;
  let index = -1;
  const [first, last] = [points[0], points[points.length - 1]];
  for (let i = 1; i < points.length - 1; i++) {
    const d = pointSegmentDistance(points[i], first, last);
    if (d > maxDist) {
      maxDist = d;
      index = i;
    }
  }
  if (maxDist <= epsilon) return [first, last];
  const left = rdp(points.slice(0, index + 1), epsilon);
  const right = rdp(points.slice(index), epsilon);
  return [...left.slice(0, -1), ...right];
}

function dedupeConsecutive(points: XY[]): XY[] {
  const out: XY[] = [];
  for (const p of points) {
    const prev = out[out.length - 1];
    if (!prev || prev[0] !== p[0] || prev[1] !== p[1]) out.push([p[0], p[1]]);
  }
  return out;
}

/** Max distance from any raw point to the simplified polyline. */
export function strokeDeviation(raw: XY[], simplified: XY[]): number {
  if (simplified.length < 2) return 0;
  let worst = 0;
  for (const p of raw) {
    let best = Infinity;
    for (let i = 0; i < simplified.length - 1; i++) {
      best = Math.min(best, pointSegmentDistance(p, simplified[i], simplified[i + 1]));
    }
    worst = Math.max(worst, best);
  }
  return worst;
}

/**
 * Downsample a raw stroke to at most `maxAnchors` trajectory anchors.
 * Tolerance starts tight and doubles until the budget is met, so smooth
 * strokes keep sub-pixel fidelity and jittery ones degrade gracefully.
 */
export function downsampleStroke(
  raw: XY[],
  maxAnchors: number = MAX_TRAJECTORY_ANCHORS,
): XY[] {
  const points = dedupeConsecutive(raw);
  if (points.length <= 2) return points;
  let epsilon = 0.25;
  let simplified = rdp(points, epsilon);
  while (simplified.length > maxAnchors && epsilon < 1e4) {
    epsilon *= 2;
    simplified = rdp(points, epsilon);
  }
  return simplified;
}
