// Session state machine: one live session, one in-flight mutation at a
// time, stale tracking, and the PATCH + resample workflow. No DOM here.

import { BackendError, StudioClient } from "./api.js";
import type {
  HyperParams,
  OverviewPayload,
  RecordPayload,
  TimeseriesPayload,
  ViewKind,
} from "./types.js";
import { diffPatch, validateHyperParams } from "./hyperform.js";

export interface AppState {
  sessionId: string | null;
  problem: string | null;
  hyper: HyperParams | null;
  view: ViewKind;
  overview: OverviewPayload | null;
  record: RecordPayload | null;
  selection: { i: number; k: number } | null;
  timeseries: TimeseriesPayload | null;
  pending: boolean;
  stale: boolean;
  seed: number;
  q: number;
  error: string | null;
  p: number;
}

export function initialState(): AppState {
  return {
    sessionId: null,
    problem: null,
    hyper: null,
    view: "control",
    overview: null,
    record: null,
    selection: null,
    timeseries: null,
    pending: false,
    stale: false,
    seed: 0,
    q: 200,
    error: null,
    p: 0,
  };
}

export type Listener = (state: AppState) => void;

export class StudioStore {
  state: AppState = initialState();
  private listeners: Listener[] = [];

  constructor(private client: StudioClient) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private set(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T | null> {
    if (this.state.pending) return null; // one in-flight mutation at a time
    this.set({ pending: true, error: null });
    try {
      return await work();
    } catch (err) {
      const message =
        err instanceof BackendError ? `${err.kind}: ${err.message}` : String(err);
      this.set({ error: message });
      return null;
    } finally {
      this.set({ pending: false });
    }
  }

  async createSession(config: Record<string, unknown>): Promise<void> {
    await this.guarded(async () => {
      const info = await this.client.createSession(config);
      this.set({
        sessionId: info.id,
        problem: typeof info.scenario.problem === "string" ? info.scenario.problem : null,
        hyper: info.hyperparams,
        p: info.p,
        overview: null,
        record: null,
        selection: null,
        timeseries: null,
        stale: false,
      });
    });
  }

  async resample(): Promise<void> {
    await this.guarded(async () => {
      const id = this.requireSession();
      await this.client.generateSamples(id, this.state.q, this.state.seed);
      const overview = await this.client.getOverview(id, this.state.view);
      this.set({ overview, stale: overview.stale, record: null, selection: null });
    });
  }

  async switchView(view: ViewKind): Promise<void> {
    await this.guarded(async () => {
      const id = this.requireSession();
      const overview = await this.client.getOverview(id, view);
      this.set({ view, overview, stale: overview.stale, record: null, selection: null });
    });
  }

  async loadTimeseries(): Promise<void> {
    await this.guarded(async () => {
      const id = this.requireSession();
      const timeseries = await this.client.getTimeseries(id);
      this.set({ timeseries });
    });
  }

  async select(i: number, k: number): Promise<void> {
    await this.guarded(async () => {
      const id = this.requireSession();
      const record = await this.client.getRecord(id, i, k);
      this.set({ record, selection: { i, k } });
    });
  }

  /**
   * Validate client-side, PATCH the changed keys, then regenerate with a
   * fresh seed and refresh the overview.
   */
  async applyHyperParams(edited: Partial<HyperParams>): Promise<void> {
    await this.guarded(async () => {
      const id = this.requireSession();
      const current = this.state.hyper;
      if (current === null) throw new Error("no hyper-parameters loaded");
      const issues = validateHyperParams(edited);
      if (issues.length > 0) {
        throw new Error(issues.map((x) => x.message).join("; "));
      }
      const patch = diffPatch(current, edited);
      const resp = await this.client.patchHyperparams(id, patch);
      const seed = this.state.seed + 1; // fresh seed per regeneration
      await this.client.generateSamples(id, this.state.q, seed);
      const overview = await this.client.getOverview(id, this.state.view);
      this.set({
        hyper: resp.hyperparams,
        p: resp.p,
        seed,
        overview,
        stale: overview.stale,
        record: null,
        selection: null,
      });
    });
  }

  private requireSession(): string {
    if (this.state.sessionId === null) throw new Error("no session");
    return this.state.sessionId;
  }
}
