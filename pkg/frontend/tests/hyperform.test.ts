import { describe, expect, it } from "vitest";

import {
  canSubmit,
  diffPatch,
  editField,
  makeFormState,
  validateHyperParams,
} from "../src/hyperform.js";
import type { HyperParams } from "../src/types.js";

const CURRENT: HyperParams = {
  alpha_u: 2.0,
  beta_u: 0.03,
  alpha_z: 0.5,
  beta_z: 0.01,
  alpha_d: 1e-5,
  eps_t: 0.01,
};

describe("validateHyperParams", () => {
  it("accepts valid partial edits", () => {
    expect(validateHyperParams({ alpha_z: 0.125 })).toHaveLength(0);
    expect(validateHyperParams({ beta_u: 0 })).toHaveLength(0);
  });

  it("blocks negative smoothness client-side", () => {
    const issues = validateHyperParams({ beta_u: -1 });
    expect(issues).toHaveLength(1);
    expect(issues[0].key).toBe("beta_u");
  });

  it("blocks non-positive variances", () => {
    expect(validateHyperParams({ alpha_u: 0 })).toHaveLength(1);
    expect(validateHyperParams({ alpha_d: -2 })).toHaveLength(1);
  });

  it("rejects non-finite entries", () => {
    expect(validateHyperParams({ alpha_z: Number.NaN })).toHaveLength(1);
  });

  it("enforces the temporal weight floor", () => {
    expect(validateHyperParams({ alpha_t: [0.001, 1], eps_t: 0.01 })).toHaveLength(1);
    expect(validateHyperParams({ alpha_t: [0.01, 1], eps_t: 0.01 })).toHaveLength(0);
  });
});

describe("diffPatch", () => {
  it("keeps only changed keys", () => {
    const patch = diffPatch(CURRENT, { alpha_z: CURRENT.alpha_z / 4, beta_u: 0.03 });
    expect(patch).toEqual({ alpha_z: 0.125 });
  });

  it("is empty for unchanged submissions", () => {
    expect(diffPatch(CURRENT, { alpha_u: 2.0 })).toEqual({});
  });
});

describe("form state", () => {
  it("tracks edits and validation issues", () => {
    let state = makeFormState(CURRENT);
    expect(canSubmit(state)).toBe(true);
    state = editField(state, "beta_z", "-0.5");
    expect(state.issues).toHaveLength(1);
    expect(canSubmit(state)).toBe(false);
    state = editField(state, "beta_z", "0.04");
    expect(state.issues).toHaveLength(0);
    expect(state.edited.beta_z).toBe(0.04);
    expect(canSubmit(state)).toBe(true);
  });

  it("clearing a field removes it from the patch", () => {
    let state = makeFormState(CURRENT);
    state = editField(state, "alpha_u", "5");
    state = editField(state, "alpha_u", "  ");
    expect(state.edited).toEqual({});
  });

  it("blocks submission while in flight", () => {
    const state = { ...makeFormState(CURRENT), submitting: true };
    expect(canSubmit(state)).toBe(false);
  });
});
