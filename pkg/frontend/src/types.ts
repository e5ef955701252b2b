// Wire types mirroring the backend JSON payloads exactly.

export type ViewKind = "state" | "control";

export interface Quantiles {
  q05: number;
  q25: number;
  q50: number;
  q75: number;
  q95: number;
}

export interface OverviewPoint {
  i: number;
  k: number;
  x: number;
  y: number;
}

export interface OverviewBin {
  lo: number;
  hi: number;
  count: number;
  label: number;
  quantiles?: Quantiles;
  values?: number[];
  points?: OverviewPoint[];
}

export interface OverviewPayload {
  view: ViewKind;
  stale: boolean;
  total: number;
  q: number;
  p: number;
  seed: number;
  bins: OverviewBin[];
}

export interface FieldPayload {
  dim: 1 | 2;
  nodes: number[][];
  // 1D/2D stationary: flat list; transient: time-major rows.
  values: number[] | number[][];
}

export interface RecordPayload {
  i: number;
  k: number;
  stale: boolean;
  metrics: {
    max_abs_base: number;
    max_abs_diff: number;
    kappa_delta_z: number;
    kappa_base: number;
  };
  delta_z: FieldPayload;
  base_field: FieldPayload;
  diff_field: FieldPayload;
}

export interface HyperParams {
  alpha_u: number;
  beta_u: number;
  alpha_z: number;
  beta_z: number;
  alpha_d: number;
  eps_t: number;
  alpha_t?: number[];
  beta_t?: number;
}

export interface SessionInfo {
  id: string;
  scenario: Record<string, unknown>;
  hyperparams: HyperParams;
  p: number;
  n_data: number;
}

export interface SampleMeta {
  q: number;
  p: number;
  count: number;
  seed: number;
}

export interface TimeseriesPayload {
  t: number[];
  curves: number[][];
  data_curve: number[];
  stale: boolean;
}

export interface ApiError {
  error: string;
  detail: string;
}
