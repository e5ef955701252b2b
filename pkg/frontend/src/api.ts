// Thin typed client over the studio HTTP API. The fetch implementation is
// injectable so tests can stub the transport.

import type {
  HyperParams,
  OverviewPayload,
  RecordPayload,
  SampleMeta,
  SessionInfo,
  TimeseriesPayload,
  ViewKind,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class BackendError extends Error {
  constructor(
    public status: number,
    public kind: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class StudioClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, method = "GET", body?: unknown): Promise<T> {
    const init: { method: string; headers?: Record<string, string>; body?: string } = {
      method,
    };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const doc = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      const kind = typeof doc.error === "string" ? doc.error : "HttpError";
      const detail = typeof doc.detail === "string" ? doc.detail : `status ${resp.status}`;
      throw new BackendError(resp.status, kind, detail);
    }
    return doc as T;
  }

  createSession(config: Record<string, unknown>): Promise<SessionInfo> {
    return this.request<SessionInfo>("/session", "POST", config);
  }

  getHyperparams(id: string): Promise<{ hyperparams: HyperParams; stale: boolean }> {
    return this.request(`/session/${id}/hyperparams`);
  }

  patchHyperparams(
    id: string,
    patch: Partial<HyperParams>,
  ): Promise<{ hyperparams: HyperParams; stale: boolean; p: number }> {
    return this.request(`/session/${id}/hyperparams`, "PATCH", patch);
  }

  generateSamples(id: string, q: number, seed: number): Promise<SampleMeta> {
    return this.request(`/session/${id}/samples`, "POST", { q, seed });
  }

  getOverview(id: string, view: ViewKind): Promise<OverviewPayload> {
    return this.request(`/session/${id}/overview?view=${view}`);
  }

  getRecord(id: string, i: number, k: number): Promise<RecordPayload> {
    return this.request(`/session/${id}/sample/${i}/${k}`);
  }

  getTimeseries(id: string): Promise<TimeseriesPayload> {
    return this.request(`/session/${id}/timeseries`);
  }

  exportSession(id: string): Promise<Record<string, unknown>> {
    return this.request(`/session/${id}/export`);
  }
}
