import { describe, expect, it } from "vitest";

import {
  buildOverviewViewModel,
  countRenderedPoints,
  renderOverview,
} from "../src/overview.js";
import type { OverviewBin, OverviewPayload } from "../src/types.js";

function makeBin(count: number, label: number, offset: number): OverviewBin {
  const points = Array.from({ length: count }, (_, j) => ({
    i: offset + j,
    k: 0,
    x: label,
    y: 1 + j,
  }));
  return {
    lo: label - 0.05,
    hi: label + 0.05,
    count,
    label,
    quantiles: { q05: 1, q25: 2, q50: 3, q75: 4, q95: count },
    values: points.map((p) => p.y),
    points,
  };
}

function makePayload(counts: number[]): OverviewPayload {
  let offset = 0;
  const bins = counts.map((c, idx) => {
    const bin = makeBin(c, 0.1 * (idx + 1), offset);
    offset += c;
    return bin;
  });
  return {
    view: "control",
    stale: false,
    total: counts.reduce((a, b) => a + b, 0),
    q: offset,
    p: 1,
    seed: 0,
    bins,
  };
}

describe("buildOverviewViewModel", () => {
  it("mirrors the backend payload exactly", () => {
    const payload = makePayload([10, 20, 30]);
    const vm = buildOverviewViewModel(payload);
    expect(vm.empty).toBe(false);
    expect(vm.total).toBe(60);
    expect(vm.bins).toBe(payload.bins);
  });

  it("collapses to an empty state without a payload", () => {
    const vm = buildOverviewViewModel(null);
    expect(vm.empty).toBe(true);
    expect(vm.bins).toHaveLength(0);
  });
});

describe("renderOverview", () => {
  it("renders one selectable entity per record", () => {
    const svg = renderOverview(buildOverviewViewModel(makePayload([10, 20, 30])));
    expect(countRenderedPoints(svg)).toBe(60);
    // quantile handles: one median line per occupied bin
    expect(svg.match(/class="median"/g)).toHaveLength(3);
  });

  it("labels the axis with the bin mean correlation lengths", () => {
    const svg = renderOverview(buildOverviewViewModel(makePayload([5, 5])));
    expect(svg).toContain(">0.1<");
    expect(svg).toContain(">0.2<");
  });

  it("shows the stale banner when flagged", () => {
    const payload = makePayload([4]);
    payload.stale = true;
    const svg = renderOverview(buildOverviewViewModel(payload));
    expect(svg).toContain("stale-banner");
    expect(svg).toContain("resample to refresh");
  });

  it("offers a regenerate prompt on the empty state", () => {
    const svg = renderOverview(buildOverviewViewModel(null));
    expect(svg).toContain("empty-state");
    expect(svg).toContain('data-action="resample"');
  });

  it("highlights exactly one selected record", () => {
    const payload = makePayload([6, 6]);
    const vm = buildOverviewViewModel(payload, { i: 7, k: 0 });
    const svg = renderOverview(vm);
    expect(svg.match(/class="pt selected"/g)).toHaveLength(1);
    expect(svg).toContain('data-i="7"');
  });

  it("attaches record indices for hit testing", () => {
    const svg = renderOverview(buildOverviewViewModel(makePayload([3])));
    for (const i of [0, 1, 2]) {
      expect(svg).toContain(`data-i="${i}" data-k="0"`);
    }
  });
});
