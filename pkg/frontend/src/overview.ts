// Overview view model and SVG rendering: one vertical quantile band per
// correlation-length bin with clickable raw points, axis labels carrying
// each bin's mean correlation length.

import { formatNumber, linearScale, ticks } from "./scales.js";
import type { OverviewBin, OverviewPayload, ViewKind } from "./types.js";

export interface Selection {
  i: number;
  k: number;
}

export interface OverviewViewModel {
  view: ViewKind;
  stale: boolean;
  total: number;
  empty: boolean;
  bins: OverviewBin[];
  selection: Selection | null;
}

export function buildOverviewViewModel(
  payload: OverviewPayload | null,
  selection: Selection | null = null,
): OverviewViewModel {
  if (payload === null || payload.total === 0) {
    return {
      view: payload?.view ?? "control",
      stale: payload?.stale ?? false,
      total: 0,
      empty: true,
      bins: [],
      selection: null,
    };
  }
  return {
    view: payload.view,
    stale: payload.stale,
    total: payload.total,
    empty: false,
    bins: payload.bins,
    selection,
  };
}

export const PLOT = { width: 640, height: 360, margin: 42 };

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

/** SVG document for the overview; points carry data-i/data-k for hit tests. */
export function renderOverview(vm: OverviewViewModel): string {
  const { width, height, margin } = PLOT;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
      `class="overview" role="img">`,
  );
  if (vm.empty) {
    parts.push(
      `<text x="${width / 2}" y="${height / 2}" text-anchor="middle" ` +
        `class="empty-state">No samples yet - generate to populate the overview</text>`,
    );
    parts.push(
      `<text x="${width / 2}" y="${height / 2 + 22}" text-anchor="middle" ` +
        `class="empty-hint" data-action="resample">[ resample ]</text>`,
    );
    parts.push("</svg>");
    return parts.join("");
  }

  const occupied = vm.bins.filter((b) => b.count > 0);
  const yMax = Math.max(
    ...occupied.map((b) => (b.quantiles ? b.quantiles.q95 : 0)),
    ...occupied.flatMap((b) => (b.points ?? []).map((p) => p.y)),
  );
  const y = linearScale([0, yMax * 1.05 || 1], [height - margin, margin / 2]);
  const slot = (width - 2 * margin) / vm.bins.length;

  if (vm.stale) {
    parts.push(
      `<rect x="0" y="0" width="${width}" height="20" class="stale-banner"/>` +
        `<text x="${width / 2}" y="14" text-anchor="middle" class="stale-text">` +
        `hyper-parameters changed - resample to refresh</text>`,
    );
  }

  // y axis
  for (const t of ticks(y.domain, 5)) {
    parts.push(
      `<line x1="${margin}" x2="${width - margin}" y1="${y(t)}" y2="${y(t)}" class="grid"/>`,
    );
    parts.push(
      `<text x="${margin - 6}" y="${y(t) + 4}" text-anchor="end" class="tick">` +
        `${esc(formatNumber(t))}</text>`,
    );
  }

  vm.bins.forEach((bin, idx) => {
    const cx = margin + slot * (idx + 0.5);
    // axis label: the bin's mean correlation length
    parts.push(
      `<text x="${cx}" y="${height - margin + 18}" text-anchor="middle" class="tick">` +
        `${esc(formatNumber(bin.label))}</text>`,
    );
    if (!bin.count || !bin.quantiles) return;
    const qs = bin.quantiles;
    const bw = Math.min(26, slot * 0.5);
    // 5-95 whisker, 25-75 band, median handle
    parts.push(
      `<line x1="${cx}" x2="${cx}" y1="${y(qs.q05)}" y2="${y(qs.q95)}" class="whisker"/>`,
    );
    parts.push(
      `<rect x="${cx - bw / 2}" y="${y(qs.q75)}" width="${bw}" ` +
        `height="${Math.max(1, y(qs.q25) - y(qs.q75))}" class="band" data-bin="${idx}"/>`,
    );
    parts.push(
      `<line x1="${cx - bw / 2}" x2="${cx + bw / 2}" y1="${y(qs.q50)}" y2="${y(qs.q50)}" ` +
        `class="median" data-bin="${idx}"/>`,
    );
    for (const p of bin.points ?? []) {
      const selected =
        vm.selection !== null && vm.selection.i === p.i && vm.selection.k === p.k;
      const jitter = ((p.i * 31 + p.k * 17) % 13) / 13 - 0.5;
      parts.push(
        `<circle cx="${cx + jitter * bw}" cy="${y(p.y)}" r="${selected ? 5 : 2.5}" ` +
          `class="pt${selected ? " selected" : ""}" data-i="${p.i}" data-k="${p.k}"/>`,
      );
    }
  });

  parts.push(
    `<text x="${width / 2}" y="${height - 6}" text-anchor="middle" class="axis-label">` +
      `correlation length (bin means)</text>`,
  );
  parts.push(
    `<text x="12" y="${height / 2}" class="axis-label" ` +
      `transform="rotate(-90 12 ${height / 2})" text-anchor="middle">max |field value|</text>`,
  );
  parts.push("</svg>");
  return parts.join("");
}

/** Count the selectable point glyphs in a rendered overview. */
export function countRenderedPoints(svg: string): number {
  return (svg.match(/class="pt/g) ?? []).length;
}
