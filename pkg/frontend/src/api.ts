// Typed client over the local service's HTTP API. The fetch implementation
// is injectable so tests can run against an in-memory fake; the browser
// app passes window.fetch.

import { serializeScene } from './scene.js';
import type { JobDoc, JudgmentDraft, ReportDoc, SceneDoc } from './types.js';

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    body?: string | Uint8Array;
    headers?: Record<string, string>;
  },
) => Promise<{
  status: number;
  arrayBuffer(): Promise<ArrayBuffer>;
  json(): Promise<unknown>;
}>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly jsonPath?: string,
  ) {
    super(message);
  }
}

async function errorFrom(resp: {
  status: number;
  json(): Promise<unknown>;
}): Promise<ApiError> {
  try {
    const body = (await resp.json()) as {
      code?: string;
      message?: string;
      json_path?: string;
    };
    return new ApiError(
      resp.status,
      body.code ?? 'HTTP_ERROR',
      body.message ?? `http ${resp.status}`,
      body.json_path,
    );
  } catch {
    return new ApiError(resp.status, 'HTTP_ERROR', `http ${resp.status}`);
  }
}

export class StudioApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike,
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async postScene(scene: SceneDoc): Promise<{ scene_id: string; scene_hash: string }> {
    const resp = await this.fetchImpl(this.url('/api/scenes'), {
      method: 'POST',
      body: serializeScene(scene),
      headers: { 'Content-Type': 'application/json' },
    });
    if (resp.status !== 201) throw await errorFrom(resp);
    return (await resp.json()) as { scene_id: string; scene_hash: string };
  }

  async getScene(sceneId: string): Promise<SceneDoc> {
    const resp = await this.fetchImpl(this.url(`/api/scenes/${sceneId}`));
    if (resp.status !== 200) throw await errorFrom(resp);
    return (await resp.json()) as SceneDoc;
  }

  /** Server-rendered PNG bytes; the canvas overlay is cosmetic only. */
  async renderScene(sceneId: string, styleOverrides?: object): Promise<Uint8Array> {
    const resp = await this.fetchImpl(this.url(`/api/scenes/${sceneId}/render`), {
      method: 'POST',
      body: styleOverrides ? JSON.stringify(styleOverrides) : '',
      headers: { 'Content-Type': 'application/json' },
    });
    if (resp.status !== 200) throw await errorFrom(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }

  async postJob(body: {
    scene_id: string;
    backend_id?: string;
    frames?: number;
    fps?: number;
  }): Promise<JobDoc> {
    const resp = await this.fetchImpl(this.url('/api/jobs'), {
      method: 'POST',
      body: JSON.stringify(body),
      headers: { 'Content-Type': 'application/json' },
    });
    if (resp.status !== 201) throw await errorFrom(resp);
    return (await resp.json()) as JobDoc;
  }

  async getJob(jobId: string): Promise<JobDoc> {
    const resp = await this.fetchImpl(this.url(`/api/jobs/${jobId}`));
    if (resp.status !== 200) throw await errorFrom(resp);
    return (await resp.json()) as JobDoc;
  }

  async getArtifacts(jobId: string): Promise<{ artifacts: { path: string }[] }> {
    const resp = await this.fetchImpl(this.url(`/api/jobs/${jobId}/artifacts`));
    if (resp.status !== 200) throw await errorFrom(resp);
    return (await resp.json()) as { artifacts: { path: string }[] };
  }

  /** 409 (duplicate triple) surfaces as ApiError with status 409. */
  async postJudgment(draft: JudgmentDraft): Promise<void> {
    const resp = await this.fetchImpl(this.url('/api/judgments'), {
      method: 'POST',
      body: JSON.stringify(draft),
      headers: { 'Content-Type': 'application/json' },
    });
    if (resp.status !== 201) throw await errorFrom(resp);
  }

  async getSuccessRateReport(experiment = 'default'): Promise<ReportDoc> {
    const resp = await this.fetchImpl(
      this.url(`/api/reports/success-rate?experiment=${encodeURIComponent(experiment)}`),
    );
    if (resp.status !== 200) throw await errorFrom(resp);
    return (await resp.json()) as ReportDoc;
  }
}

/** Hex SHA-256 of raw bytes; works in browsers and in node test runs. */
export async function sha256Hex(bytes: Uint8Array): Promise<string> {
  const subtle = globalThis.crypto?.subtle;
  if (subtle) {
    const digest = await subtle.digest('SHA-256', bytes.slice().buffer);
    return [...new Uint8Array(digest)]
      .map((b) => b.toString(16).padStart(2, '0'))
      .join('');
  }
  const { createHash } = await import('node:crypto');
  return createHash('sha256').update(bytes).digest('hex');
}
