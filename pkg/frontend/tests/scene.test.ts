import { describe, expect, it } from 'vitest';

import {
  emptyScene,
  parseScene,
  scenesFieldIdentical,
  serializeScene,
  validateScene,
} from '../src/scene.js';
import type { SceneDoc } from '../src/types.js';

describe('serializeScene', () => {
  it('is stable under key order and list order', () => {
    const a = emptyScene();
    a.instructions = [
      { id: 'b', text: 'two', target: { kind: 'global' }, label_anchor: [2, 2] },
      { id: 'a', text: 'one', target: { kind: 'global' }, label_anchor: [1, 1] },
    ];
    const b = parseScene(serializeScene(a));
    b.instructions = [...b.instructions!].reverse();
    expect(serializeScene(b)).toBe(serializeScene(a));
    expect(scenesFieldIdentical(a, b)).toBe(true);
  });

  it('round-trips through parse', () => {
    const scene = emptyScene();
    scene.banner = { text: 'pan left' };
    const again = parseScene(serializeScene(scene));
    expect(serializeScene(again)).toBe(serializeScene(scene));
  });
});

describe('validateScene (server mirror)', () => {
  it('accepts the empty scene', () => {
    expect(validateScene(emptyScene())).toEqual([]);
  });

  it('flags degenerate arrows like the server does', () => {
    const scene = emptyScene();
    scene.instructions = [
      {
        id: 'a',
        text: 'go',
        target: { kind: 'global' },
        label_anchor: [10, 10],
        geometry: { kind: 'straight_arrow', tail: [10, 10], head: [10, 10] },
      },
    ];
    const issues = validateScene(scene);
    expect(issues.map((i) => i.code)).toContain('DEGENERATE_ARROW');
  });

  it('flags duplicate orders', () => {
    const scene = emptyScene();
    scene.instructions = [
      { id: 'a', text: 'x', target: { kind: 'global' }, label_anchor: [1, 1], order: 1 },
      { id: 'b', text: 'y', target: { kind: 'global' }, label_anchor: [2, 2], order: 1 },
    ];
    expect(validateScene(scene).map((i) => i.code)).toContain('DUPLICATE_ORDER');
  });

  it('flags out-of-bounds coordinates and unknown targets', () => {
    const scene: SceneDoc = emptyScene();
    scene.instructions = [
      {
        id: 'a',
        text: 'x',
        target: { kind: 'object', object_id: 'ghost' },
        label_anchor: [9999, 10],
      },
    ];
    const codes = validateScene(scene).map((i) => i.code);
    expect(codes).toContain('COORD_OUT_OF_BOUNDS');
    expect(codes).toContain('UNKNOWN_OBJECT');
  });

  it('requires global targets for camera moves', () => {
    const scene = emptyScene();
    scene.instructions = [
      {
        id: 'cam',
        text: 'zoom in',
        target: { kind: 'point', x: 5, y: 5 },
        label_anchor: [5, 5],
        semantic: { kind: 'camera_move', camera: 'zoom_in' },
      },
    ];
    expect(validateScene(scene).map((i) => i.code)).toContain('CAMERA_NEEDS_GLOBAL');
  });
});
