import { describe, expect, it } from "vitest";

import {
  RenderError,
  buildInspectionViewModel,
  makeScrubber,
  renderHeatmap,
  renderLinePlot,
  renderTimeseries,
} from "../src/fields.js";
import type { FieldPayload, RecordPayload } from "../src/types.js";

function gridNodes(n: number): number[][] {
  const nodes: number[][] = [];
  for (let j = 0; j < n; j++)
    for (let i = 0; i < n; i++) nodes.push([i / (n - 1), j / (n - 1)]);
  return nodes;
}

function record1d(): RecordPayload {
  const xs = [0, 0.25, 0.5, 0.75, 1.0];
  return {
    i: 2,
    k: 1,
    stale: false,
    metrics: {
      max_abs_base: 2.0,
      max_abs_diff: 1.5,
      kappa_delta_z: 0.3,
      kappa_base: 0.2,
    },
    delta_z: { dim: 1, nodes: xs.map((x) => [x]), values: [0, 1, 0, -1, 0] },
    base_field: { dim: 1, nodes: xs.map((x) => [x]), values: [2, 1, 0, -1, -2] },
    diff_field: { dim: 1, nodes: xs.map((x) => [x]), values: [1.5, 0, 0, 0, -1.5] },
  };
}

describe("renderLinePlot", () => {
  it("draws a flat line for a constant field", () => {
    const svg = renderLinePlot([0, 0.5, 1], [2, 2, 2], "flat");
    const ys = [...svg.matchAll(/[ML][\d.]+,([\d.]+)/g)].map((m) => Number(m[1]));
    expect(new Set(ys).size).toBe(1);
  });

  it("rejects mismatched lengths", () => {
    expect(() => renderLinePlot([0, 1], [1], "bad")).toThrow(RenderError);
  });
});

describe("renderHeatmap", () => {
  it("renders one cell per node", () => {
    const nodes = gridNodes(4);
    const values = nodes.map(() => 0.5);
    const svg = renderHeatmap(nodes, values, "uniform");
    expect(svg.match(/<rect/g)).toHaveLength(16);
    // constant field -> a single fill color
    const fills = new Set([...svg.matchAll(/fill="(rgb[^"]+)"/g)].map((m) => m[1]));
    expect(fills.size).toBe(1);
  });
});

describe("makeScrubber", () => {
  it("exposes the full time index range", () => {
    const field: FieldPayload = {
      dim: 1,
      nodes: [[0], [1]],
      values: [
        [0, 0],
        [1, 2],
        [3, 4],
      ],
    };
    const scrubber = makeScrubber(field);
    expect(scrubber.nSteps).toBe(3);
    expect(scrubber.frame(2)).toEqual([3, 4]);
    expect(() => scrubber.frame(3)).toThrow(RenderError);
  });

  it("requires time-major values", () => {
    expect(() =>
      makeScrubber({ dim: 1, nodes: [[0]], values: [1, 2, 3] }),
    ).toThrow(RenderError);
  });
});

describe("buildInspectionViewModel", () => {
  it("produces two linked panels with the record's metrics verbatim", () => {
    const rec = record1d();
    const vm = buildInspectionViewModel(rec, "control");
    expect(vm.panels).toHaveLength(2);
    expect(vm.metrics).toBe(rec.metrics);
    expect(vm.panels[1].title).toContain("i=2, k=1");
  });

  it("uses the base field in the state view", () => {
    const vm = buildInspectionViewModel(record1d(), "state");
    expect(vm.panels[1].title).toContain("sample field");
  });

  it("supports toggling the shared scale", () => {
    const on = buildInspectionViewModel(record1d(), "control", true);
    const off = buildInspectionViewModel(record1d(), "control", false);
    expect(on.sharedScale).toBe(true);
    expect(off.sharedScale).toBe(false);
    // shared scale changes the perturbation panel's vertical mapping
    expect(on.panels[0].svg).not.toEqual(off.panels[0].svg);
  });
});

describe("renderTimeseries", () => {
  it("draws every sample curve plus the data overlay", () => {
    const svg = renderTimeseries({
      t: [0, 0.5, 1],
      curves: [
        [0, 1, 2],
        [0, 2, 3],
      ],
      data_curve: [0, 1.5, 2.5],
      stale: false,
    });
    expect(svg.match(/sample-curve/g)).toHaveLength(2);
    expect(svg.match(/data-curve/g)).toHaveLength(1);
  });
});
