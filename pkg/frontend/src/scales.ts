// Plot-space transforms: linear scales, nice ticks, and a diverging color
// ramp. Pure functions; everything else renders through these.

export interface Scale {
  (v: number): number;
  domain: [number, number];
  range: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 === 0 ? 1 : d1 - d0;
  const f = ((v: number) => r0 + ((v - d0) / span) * (r1 - r0)) as Scale;
  f.domain = domain;
  f.range = range;
  return f;
}

export function extent(values: number[]): [number, number] {
  if (values.length === 0) return [0, 1];
  let lo = values[0];
  let hi = values[0];
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    const pad = Math.abs(lo) > 0 ? Math.abs(lo) * 1e-3 : 1;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (!(hi > lo) || count < 1) return [lo];
  const rawStep = (hi - lo) / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  const norm = rawStep / mag;
  const step = (norm >= 5 ? 5 : norm >= 2 ? 2 : 1) * mag;
  const start = Math.ceil(lo / step) * step;
  const out: number[] = [];
  for (let v = start; v <= hi + step * 1e-9; v += step) {
    out.push(Number(v.toPrecision(12)));
  }
  return out;
}

export function formatNumber(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(2);
  return Number(v.toPrecision(4)).toString();
}

// Symmetric blue-white-red ramp for signed fields; t in [-1, 1].
export function divergingColor(t: number): string {
  const clamp = Math.max(-1, Math.min(1, t));
  const mix = (a: number, b: number, u: number) => Math.round(a + (b - a) * u);
  let r: number, g: number, b: number;
  if (clamp < 0) {
    const u = clamp + 1; // 0 at -1 -> blue, 1 at 0 -> white
    r = mix(33, 255, u);
    g = mix(102, 255, u);
    b = mix(172, 255, u);
  } else {
    const u = clamp; // 0 -> white, 1 -> red
    r = mix(255, 178, u);
    g = mix(255, 24, u);
    b = mix(255, 43, u);
  }
  return `rgb(${r},${g},${b})`;
}

// Shared symmetric color domain across linked fields: the largest absolute
// value of either array (a plotting transform, not an analysis).
export function sharedAbsMax(a: number[], b: number[]): number {
  let m = 0;
  for (const v of a) m = Math.max(m, Math.abs(v));
  for (const v of b) m = Math.max(m, Math.abs(v));
  return m === 0 ? 1 : m;
}

export function flattenValues(values: number[] | number[][]): number[] {
  return Array.isArray(values[0])
    ? (values as number[][]).flat()
    : (values as number[]);
}
