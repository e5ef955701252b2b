// Hyper-parameter form model: client-side validation mirroring the backend
// invariants, patch diffing, and the PATCH-then-resample orchestration.

import type { HyperParams } from "./types.js";

export interface FieldSpec {
  key: keyof HyperParams & string;
  label: string;
  strictlyPositive: boolean;
  tab: "state" | "control" | "noise" | "temporal";
}

// Two tabs mirror the two hyper-parameter subsets the sample views target:
// the state prior over base fields, the control sensitivity over differences.
export const FIELD_SPECS: FieldSpec[] = [
  { key: "alpha_u", label: "state variance", strictlyPositive: true, tab: "state" },
  { key: "beta_u", label: "state smoothness", strictlyPositive: false, tab: "state" },
  { key: "alpha_z", label: "control variance", strictlyPositive: true, tab: "control" },
  { key: "beta_z", label: "control smoothness", strictlyPositive: false, tab: "control" },
  { key: "alpha_d", label: "noise variance", strictlyPositive: true, tab: "noise" },
];

export interface ValidationIssue {
  key: string;
  message: string;
}

export function validateHyperParams(
  values: Partial<HyperParams>,
): ValidationIssue[] {
  const issues: ValidationIssue[] = [];
  for (const spec of FIELD_SPECS) {
    const v = values[spec.key];
    if (v === undefined) continue;
    if (typeof v !== "number" || !Number.isFinite(v)) {
      issues.push({ key: spec.key, message: `${spec.label} must be a finite number` });
    } else if (spec.strictlyPositive && v <= 0) {
      issues.push({ key: spec.key, message: `${spec.label} must be > 0` });
    } else if (!spec.strictlyPositive && v < 0) {
      issues.push({ key: spec.key, message: `${spec.label} must be >= 0` });
    }
  }
  const alphaT = values.alpha_t;
  if (alphaT !== undefined) {
    const eps = values.eps_t ?? 0.01;
    if (alphaT.some((v) => !Number.isFinite(v) || v < eps)) {
      issues.push({
        key: "alpha_t",
        message: `temporal weights must be >= ${eps}`,
      });
    }
  }
  if (values.beta_t !== undefined && values.beta_t < 0) {
    issues.push({ key: "beta_t", message: "temporal smoothness must be >= 0" });
  }
  return issues;
}

/** Keys whose values differ from the current hyper-parameters. */
export function diffPatch(
  current: HyperParams,
  edited: Partial<HyperParams>,
): Partial<HyperParams> {
  const patch: Record<string, unknown> = {};
  for (const [key, value] of Object.entries(edited)) {
    if (value === undefined) continue;
    const base = (current as unknown as Record<string, unknown>)[key];
    if (Array.isArray(value) && Array.isArray(base)) {
      if (JSON.stringify(value) !== JSON.stringify(base)) patch[key] = value;
    } else if (value !== base) {
      patch[key] = value;
    }
  }
  return patch as Partial<HyperParams>;
}

export interface FormState {
  current: HyperParams;
  edited: Partial<HyperParams>;
  issues: ValidationIssue[];
  backendError: string | null;
  submitting: boolean;
}

export function makeFormState(current: HyperParams): FormState {
  return { current, edited: {}, issues: [], backendError: null, submitting: false };
}

export function editField(state: FormState, key: string, raw: string): FormState {
  const value = raw.trim() === "" ? undefined : Number(raw);
  const edited = { ...state.edited, [key]: value };
  if (value === undefined) delete (edited as Record<string, unknown>)[key];
  const issues = validateHyperParams(edited);
  return { ...state, edited, issues, backendError: null };
}

export function canSubmit(state: FormState): boolean {
  return !state.submitting && state.issues.length === 0;
}
