// Field rendering: 1D line plots, 2D heatmaps over the unit square, and a
// time-major scrubber model for transient states. All values arrive from
// the backend; only plotting transforms happen here.

import {
  divergingColor,
  extent,
  flattenValues,
  formatNumber,
  linearScale,
  sharedAbsMax,
} from "./scales.js";
import type { FieldPayload, RecordPayload, TimeseriesPayload } from "./types.js";

export const FIELD_PLOT = { width: 320, height: 220, margin: 30 };

export class RenderError extends Error {}

export interface ScrubberModel {
  nSteps: number;
  index: number;
  frame(index: number): number[];
}

/** Time-major scrubber over a transient field payload. */
export function makeScrubber(field: FieldPayload): ScrubberModel {
  if (!Array.isArray(field.values[0])) {
    throw new RenderError("scrubber requires time-major values");
  }
  const rows = field.values as number[][];
  return {
    nSteps: rows.length,
    index: 0,
    frame(index: number): number[] {
      if (index < 0 || index >= rows.length) {
        throw new RenderError(`frame ${index} out of range`);
      }
      return rows[index];
    },
  };
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderLinePlot(
  xs: number[],
  ys: number[],
  title: string,
  yAbsMax?: number,
): string {
  if (xs.length !== ys.length) {
    throw new RenderError(`length mismatch: ${xs.length} vs ${ys.length}`);
  }
  const { width, height, margin } = FIELD_PLOT;
  const x = linearScale(extent(xs), [margin, width - margin]);
  const yDomain: [number, number] =
    yAbsMax !== undefined ? [-yAbsMax, yAbsMax] : extent(ys);
  const y = linearScale(yDomain, [height - margin, margin]);
  const path = ys
    .map((v, idx) => `${idx === 0 ? "M" : "L"}${x(xs[idx]).toFixed(2)},${y(v).toFixed(2)}`)
    .join("");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="field-1d">` +
    `<text x="${width / 2}" y="14" text-anchor="middle" class="title">${esc(title)}</text>` +
    `<line x1="${margin}" x2="${width - margin}" y1="${y(0)}" y2="${y(0)}" class="zero"/>` +
    `<path d="${path}" class="line" fill="none"/>` +
    `<text x="${margin}" y="${height - 8}" class="tick">${esc(formatNumber(x.domain[0]))}</text>` +
    `<text x="${width - margin}" y="${height - 8}" text-anchor="end" class="tick">` +
    `${esc(formatNumber(x.domain[1]))}</text>` +
    `</svg>`
  );
}

export function renderHeatmap(
  nodes: number[][],
  values: number[],
  title: string,
  absMax?: number,
): string {
  if (nodes.length !== values.length) {
    throw new RenderError(`length mismatch: ${nodes.length} vs ${values.length}`);
  }
  const { width, height, margin } = FIELD_PLOT;
  const xs = [...new Set(nodes.map((n) => n[0]))].sort((a, b) => a - b);
  const ys = [...new Set(nodes.map((n) => n[1]))].sort((a, b) => a - b);
  const m = absMax ?? sharedAbsMax(values, []);
  const cw = (width - 2 * margin) / xs.length;
  const ch = (height - 2 * margin) / ys.length;
  const xi = new Map(xs.map((v, idx) => [v, idx]));
  const yi = new Map(ys.map((v, idx) => [v, idx]));
  const cells = nodes
    .map((n, idx) => {
      const cx = margin + (xi.get(n[0]) ?? 0) * cw;
      const cy = height - margin - ((yi.get(n[1]) ?? 0) + 1) * ch;
      const color = divergingColor(values[idx] / m);
      return (
        `<rect x="${cx.toFixed(2)}" y="${cy.toFixed(2)}" width="${cw.toFixed(2)}" ` +
        `height="${ch.toFixed(2)}" fill="${color}"/>`
      );
    })
    .join("");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="field-2d">` +
    `<text x="${width / 2}" y="14" text-anchor="middle" class="title">${esc(title)}</text>` +
    cells +
    `</svg>`
  );
}

export interface InspectionViewModel {
  i: number;
  k: number;
  metrics: RecordPayload["metrics"];
  sharedScale: boolean;
  panels: { title: string; svg: string }[];
}

/**
 * Two linked plots for a fetched record: the control perturbation and the
 * difference field (control view) or the base field (state view). With the
 * shared color/axis scale enabled, both field panels use one symmetric
 * domain.
 */
export function buildInspectionViewModel(
  record: RecordPayload,
  view: "state" | "control",
  sharedScale = true,
  timeIndex = 0,
): InspectionViewModel {
  const field = view === "control" ? record.diff_field : record.base_field;
  const fieldTitle =
    view === "control"
      ? `difference field (i=${record.i}, k=${record.k})`
      : `sample field (i=${record.i})`;
  const panels: { title: string; svg: string }[] = [];

  const dzValues = record.delta_z.values as number[];
  const fieldValues = Array.isArray(field.values[0])
    ? makeScrubber(field).frame(timeIndex)
    : (field.values as number[]);

  if (field.dim === 1) {
    const xs1 = record.delta_z.nodes.map((n) => n[0]);
    const xsF = field.nodes.map((n) => n[0]);
    const absMax = sharedScale ? sharedAbsMax(dzValues, fieldValues) : undefined;
    panels.push({
      title: "control perturbation",
      svg: renderLinePlot(xs1, dzValues, "control perturbation", absMax),
    });
    panels.push({
      title: fieldTitle,
      svg: renderLinePlot(xsF, fieldValues, fieldTitle, absMax),
    });
  } else if (field.dim === 2) {
    const absMax = sharedScale ? sharedAbsMax(dzValues, fieldValues) : undefined;
    panels.push({
      title: "control perturbation",
      svg: renderHeatmap(record.delta_z.nodes, dzValues, "control perturbation", absMax),
    });
    panels.push({
      title: fieldTitle,
      svg: renderHeatmap(field.nodes, fieldValues, fieldTitle, absMax),
    });
  } else {
    throw new RenderError(`unsupported dimension ${field.dim}`);
  }
  return {
    i: record.i,
    k: record.k,
    metrics: record.metrics,
    sharedScale,
    panels,
  };
}

/** Spatial-norm-vs-time curves with the data curve overlaid. */
export function renderTimeseries(payload: TimeseriesPayload): string {
  const { width, height, margin } = FIELD_PLOT;
  const x = linearScale(extent(payload.t), [margin, width - margin]);
  const all = payload.curves.flat().concat(payload.data_curve);
  const y = linearScale([0, Math.max(...all) * 1.05 || 1], [height - margin, margin]);
  const path = (vals: number[]) =>
    vals
      .map(
        (v, idx) =>
          `${idx === 0 ? "M" : "L"}${x(payload.t[idx]).toFixed(2)},${y(v).toFixed(2)}`,
      )
      .join("");
  const curves = payload.curves
    .map((c) => `<path d="${path(c)}" class="sample-curve" fill="none"/>`)
    .join("");
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="timeseries">` +
    curves +
    `<path d="${path(payload.data_curve)}" class="data-curve" fill="none"/>` +
    `</svg>`
  );
}
