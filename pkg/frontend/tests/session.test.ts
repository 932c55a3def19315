import { describe, expect, it } from 'vitest';

import { emptyScene, serializeScene } from '../src/scene.js';
import { SessionState } from '../src/session.js';

function sessionWithObject(): SessionState {
  const scene = emptyScene();
  scene.objects = [
    {
      id: 'ball',
      sprite: { kind: 'disc', radius_px: 20, color: [46, 104, 180] },
      pose0: { x: 200, y: 240 },
    },
  ];
  return new SessionState(scene);
}

describe('SessionState undo/redo', () => {
  it('restores the initial bytes after N mutations and N undos', () => {
    const session = sessionWithObject();
    const initial = session.serialized();
    const n = 7;
    for (let k = 0; k < n; k++) {
      const ok = session.apply((scene) => {
        scene.instructions!.push({
          id: `ins-${k}`,
          text: `step ${k}`,
          target: { kind: 'global' },
          label_anchor: [10 + k, 10],
        });
      });
      expect(ok).toBe(true);
    }
    expect(session.serialized()).not.toBe(initial);
    for (let k = 0; k < n; k++) expect(session.undo()).toBe(true);
    expect(session.serialized()).toBe(initial);
    expect(session.undo()).toBe(false);
  });

  it('redo replays an undone mutation byte-for-byte', () => {
    const session = sessionWithObject();
    session.apply((scene) => {
      scene.banner = { text: 'pan left' };
    });
    const after = session.serialized();
    session.undo();
    expect(session.redo()).toBe(true);
    expect(session.serialized()).toBe(after);
  });

  it('rejects mutations that break validation and keeps the stack clean', () => {
    const session = sessionWithObject();
    const before = session.serialized();
    const ok = session.apply((scene) => {
      scene.instructions!.push({
        id: 'bad',
        text: 'x',
        target: { kind: 'global' },
        label_anchor: [10, 10],
        geometry: { kind: 'straight_arrow', tail: [10, 10], head: [10, 10] },
      });
    });
    expect(ok).toBe(false);
    expect(session.serialized()).toBe(before);
    expect(session.canUndo()).toBe(false);
  });

  it('tracks dirty state and preview staleness', () => {
    const session = sessionWithObject();
    expect(session.previewStale()).toBe(true); // never saved
    session.markSaved('abc123');
    expect(session.dirty).toBe(false);
    expect(session.previewStale()).toBe(false);
    session.apply((scene) => {
      scene.banner = { text: 'zoom in' };
    });
    expect(session.dirty).toBe(true);
    expect(session.previewStale()).toBe(true); // edited without save
  });

  it('serialization matches scene.serializeScene', () => {
    const session = sessionWithObject();
    expect(session.serialized()).toBe(serializeScene(session.scene));
  });

  it('generates fresh instruction ids that never collide', () => {
    const session = sessionWithObject();
    const a = session.freshInstructionId();
    session.apply((scene) => {
      scene.instructions!.push({
        id: a,
        text: 'x',
        target: { kind: 'global' },
        label_anchor: [1, 1],
      });
    });
    const b = session.freshInstructionId();
    expect(b).not.toBe(a);
  });
});
