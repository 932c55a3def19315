// Browser entry point: wires the tool palette, the editing canvas, the
// save/preview/submit flow, and the judgment panel to the session state
// and the HTTP API. The canvas overlay here is cosmetic; the preview pane
// always shows the server's authoritative raster.

import { StudioApi, sha256Hex } from './api.js';
import {
  TOOLBAR,
  assignOrderBadge,
  clickCurvedArrow,
  dragStraightArrow,
  dragTargetRegion,
  pickInstruction,
  placeTextLabel,
  setBanner,
  strokeTrajectory,
} from './gestures.js';
import { emptyScene, validateScene } from './scene.js';
import { buildReportTable, recordVerdict, submitAndAwait } from './review.js';
import { SessionState } from './session.js';
import type { CanvasTool, XY } from './types.js';

const api = new StudioApi('', (url, init) =>
  fetch(url, init as RequestInit).then((r) => r),
);
const session = new SessionState(emptyScene());

let activeTool: CanvasTool = 'straight_arrow';
let dragStart: XY | null = null;
let curvePoints: XY[] = [];
let stroke: XY[] = [];
let selectedInstruction: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function canvasPoint(event: PointerEvent, canvas: HTMLCanvasElement): XY {
  const rect = canvas.getBoundingClientRect();
  return [
    ((event.clientX - rect.left) / rect.width) * canvas.width,
    ((event.clientY - rect.top) / rect.height) * canvas.height,
  ];
}

function redrawOverlay(canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const scene = session.scene;
  canvas.width = scene.canvas.width_px;
  canvas.height = scene.canvas.height_px;
  const bg = scene.seed_frame.background_color ?? [208, 208, 200];
  ctx.fillStyle = `rgb(${bg.join(',')})`;
  ctx.fillRect(0, 0, canvas.width, canvas.height);

  for (const obj of scene.objects ?? []) {
    const color = obj.sprite.color ?? [80, 80, 80];
    ctx.fillStyle = `rgb(${color.join(',')})`;
    if (obj.sprite.kind === 'disc') {
      ctx.beginPath();
      ctx.arc(obj.pose0.x, obj.pose0.y, obj.sprite.radius_px ?? 10, 0, Math.PI * 2);
      ctx.fill();
    } else if (obj.sprite.kind === 'rect') {
      const w = obj.sprite.width_px ?? 20;
      const h = obj.sprite.height_px ?? 20;
      ctx.fillRect(obj.pose0.x - w / 2, obj.pose0.y - h / 2, w, h);
    }
  }

  ctx.strokeStyle = 'rgb(255,42,42)';
  ctx.fillStyle = 'rgb(255,42,42)';
  ctx.lineWidth = 3;
  ctx.font = '16px monospace';
  for (const ins of scene.instructions ?? []) {
    const geom = ins.geometry;
    if (geom?.kind === 'straight_arrow') {
      ctx.beginPath();
      ctx.moveTo(geom.tail![0], geom.tail![1]);
      ctx.lineTo(geom.head![0], geom.head![1]);
      ctx.stroke();
    } else if (geom?.kind === 'curved_arrow') {
      ctx.beginPath();
      ctx.moveTo(geom.start![0], geom.start![1]);
      ctx.quadraticCurveTo(geom.control![0], geom.control![1],
                           geom.end![0], geom.end![1]);
      ctx.stroke();
    } else if (geom?.kind === 'path' && geom.points) {
      ctx.save();
      ctx.setLineDash([8, 6]);
      ctx.beginPath();
      ctx.moveTo(geom.points[0][0], geom.points[0][1]);
      for (const p of geom.points.slice(1)) ctx.lineTo(p[0], p[1]);
      ctx.stroke();
      ctx.restore();
    }
    const prefix = ins.order !== undefined ? `${ins.order}. ` : '';
    ctx.fillText(`${prefix}${ins.text}`, ins.label_anchor[0], ins.label_anchor[1]);
    if (ins.id === selectedInstruction) {
      ctx.strokeRect(ins.label_anchor[0] - 4, ins.label_anchor[1] - 16, 140, 24);
    }
  }
  el<HTMLElement>('status').textContent =
    `${session.dirty ? 'unsaved changes' : 'saved'} | ` +
    `issues: ${validateScene(scene).length} | tool: ${activeTool}`;
}

function bindToolbar(canvas: HTMLCanvasElement): void {
  const bar = el<HTMLElement>('toolbar');
  for (const tool of TOOLBAR) {
    const button = document.createElement('button');
    button.textContent = tool.replace('_', ' ');
    button.onclick = () => {
      activeTool = tool;
      curvePoints = [];
      if (tool === 'banner') {
        const text = window.prompt('banner text', session.scene.banner?.text ?? '');
        if (text) setBanner(session, text);
      }
      redrawOverlay(canvas);
    };
    bar.appendChild(button);
  }
  el<HTMLButtonElement>('undo').onclick = () => {
    session.undo();
    redrawOverlay(canvas);
  };
  el<HTMLButtonElement>('redo').onclick = () => {
    session.redo();
    redrawOverlay(canvas);
  };
}

function bindCanvas(canvas: HTMLCanvasElement): void {
  canvas.onpointerdown = (event) => {
    const p = canvasPoint(event, canvas);
    if (activeTool === 'straight_arrow' || activeTool === 'target_region') {
      dragStart = p;
    } else if (activeTool === 'trajectory') {
      stroke = [p];
    } else if (activeTool === 'curved_arrow') {
      curvePoints.push(p);
      if (curvePoints.length === 3) {
        clickCurvedArrow(session, curvePoints[0], curvePoints[1], curvePoints[2]);
        curvePoints = [];
        redrawOverlay(canvas);
      }
    } else if (activeTool === 'text_label') {
      const text = window.prompt('instruction text');
      if (text) placeTextLabel(session, p, text);
      redrawOverlay(canvas);
    } else if (activeTool === 'order_badge') {
      const id = pickInstruction(session.scene, p);
      if (id) assignOrderBadge(session, id);
      redrawOverlay(canvas);
    } else if (activeTool === 'select') {
      selectedInstruction = pickInstruction(session.scene, p);
      redrawOverlay(canvas);
    }
  };
  canvas.onpointermove = (event) => {
    if (activeTool === 'trajectory' && stroke.length > 0 && event.buttons === 1) {
      stroke.push(canvasPoint(event, canvas));
    }
  };
  canvas.onpointerup = (event) => {
    const p = canvasPoint(event, canvas);
    if (activeTool === 'straight_arrow' && dragStart) {
      dragStraightArrow(session, dragStart, p);
    } else if (activeTool === 'target_region' && dragStart) {
      dragTargetRegion(session, dragStart, p);
    } else if (activeTool === 'trajectory' && stroke.length > 1) {
      strokeTrajectory(session, stroke);
    }
    dragStart = null;
    stroke = [];
    redrawOverlay(canvas);
  };
}

async function saveScene(): Promise<void> {
  const issues = validateScene(session.scene);
  if (issues.length > 0) {
    el<HTMLElement>('log').textContent =
      `invalid scene: ${issues[0].code} at ${issues[0].path}`;
    return;
  }
  const saved = await api.postScene(session.scene);
  session.markSaved(saved.scene_id);
  el<HTMLElement>('log').textContent = `saved scene ${saved.scene_hash.slice(0, 12)}`;
}

async function previewRender(canvas: HTMLCanvasElement): Promise<void> {
  if (session.previewStale()) await saveScene();
  if (!session.sceneId) return;
  const png = await api.renderScene(session.sceneId);
  session.lastRenderDigest = await sha256Hex(png);
  const blob = new Blob([png.slice().buffer as ArrayBuffer], { type: 'image/png' });
  el<HTMLImageElement>('preview').src = URL.createObjectURL(blob);
  el<HTMLElement>('digest').textContent = `server digest ${session.lastRenderDigest}`;
  redrawOverlay(canvas);
}

async function submitJob(): Promise<void> {
  if (session.previewStale()) await saveScene();
  const job = await submitAndAwait(api, session, 'interpreter');
  el<HTMLElement>('log').textContent = `job ${job.job_id.slice(0, 8)}: ${job.status}` +
    (job.failure_reason ? ` (${job.failure_reason})` : '');
  const panel = el<HTMLElement>('judgments');
  panel.innerHTML = '';
  for (const ins of session.scene.instructions ?? []) {
    for (const verdict of ['success', 'failure'] as const) {
      const button = document.createElement('button');
      button.textContent = `${ins.id}: ${verdict}`;
      button.onclick = async () => {
        const result = await recordVerdict(api, session, {
          job_id: job.job_id,
          instruction_id: ins.id,
          rater_id: 'studio',
          verdict,
          timestamp: new Date().toISOString(),
        });
        el<HTMLElement>('log').textContent = result.conflict
          ? 'verdict already recorded for this instruction'
          : `recorded ${verdict} for ${ins.id}`;
        await refreshReport();
      };
      panel.appendChild(button);
    }
  }
}

async function refreshReport(): Promise<void> {
  try {
    const table = buildReportTable(await api.getSuccessRateReport());
    const target = el<HTMLElement>('report');
    const header = ['instruction', ...table.methods].join(' | ');
    const lines = table.rows.map(
      (row) => [row.instruction, ...row.cells.map((c) => c ?? '-')].join(' | '),
    );
    target.textContent = [header, ...lines].join('\n');
  } catch {
    el<HTMLElement>('report').textContent = 'no judgments yet';
  }
}

export function start(): void {
  const canvas = el<HTMLCanvasElement>('editor');
  bindToolbar(canvas);
  bindCanvas(canvas);
  el<HTMLButtonElement>('save').onclick = () => void saveScene();
  el<HTMLButtonElement>('render').onclick = () => void previewRender(canvas);
  el<HTMLButtonElement>('submit').onclick = () => void submitJob();
  redrawOverlay(canvas);
  void refreshReport();
}

if (typeof document !== 'undefined' && document.getElementById('editor')) {
  start();
}
