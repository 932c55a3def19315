import { describe, expect, it } from 'vitest';

import {
  MAX_TRAJECTORY_ANCHORS,
  downsampleStroke,
  strokeDeviation,
} from '../src/freehand.js';
import type { XY } from '../src/types.js';

function spiral(n: number): XY[] {
  const points: XY[] = [];
  for (let i = 0; i < n; i++) {
    const t = (i / (n - 1)) * 4 * Math.PI;
    const r = 20 + 60 * (i / (n - 1));
    points.push([320 + r * Math.cos(t), 240 + r * Math.sin(t)]);
  }
  return points;
}

describe('downsampleStroke', () => {
  it('reduces a 500-point stroke to at most 32 anchors within 2 px', () => {
    const raw = spiral(500);
    const anchors = downsampleStroke(raw);
    expect(anchors.length).toBeLessThanOrEqual(MAX_TRAJECTORY_ANCHORS);
    expect(anchors.length).toBeGreaterThanOrEqual(2);
    expect(strokeDeviation(raw, anchors)).toBeLessThanOrEqual(2.0);
  });

  it('keeps endpoints exactly', () => {
    const raw = spiral(500);
    const anchors = downsampleStroke(raw);
    expect(anchors[0]).toEqual(raw[0]);
    expect(anchors[anchors.length - 1]).toEqual(raw[raw.length - 1]);
  });

  it('passes short strokes through', () => {
    const raw: XY[] = [
      [0, 0],
      [10, 10],
    ];
    expect(downsampleStroke(raw)).toEqual(raw);
  });

  it('drops consecutive duplicate samples', () => {
    const raw: XY[] = [
      [0, 0],
      [0, 0],
      [5, 5],
      [5, 5],
      [10, 0],
    ];
    const anchors = downsampleStroke(raw);
    for (let i = 1; i < anchors.length; i++) {
      expect(anchors[i]).not.toEqual(anchors[i - 1]);
    }
  });

  it('is a no-op deviation for a straight line', () => {
    const raw: XY[] = Array.from({ length: 100 }, (_, i) => [i * 3, 50] as XY);
    const anchors = downsampleStroke(raw);
    expect(anchors).toEqual([
      [0, 50],
      [297, 50],
    ]);
    expect(strokeDeviation(raw, anchors)).toBeLessThan(1e-9);
  });
});
