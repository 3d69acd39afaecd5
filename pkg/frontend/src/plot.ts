/** Screen-space plot geometry.
 *
 * These functions turn service-published models and points into SVG
 * coordinates. All domain quantities (bandwidths, peaks, AI, region
 * labels) come straight from the service payloads; nothing is classified
 * or recomputed here — a point's displayed region is exactly the region
 * string the service attached to it.
 */

import type { MemcurveRecord, PlotModel, PlotPoint } from "./types.js";

export interface ViewBox {
  width: number;
  height: number;
  margin: number;
}

export const DEFAULT_VIEW: ViewBox = { width: 800, height: 500, margin: 60 };

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const f = ((v: number) =>
    pxLo + ((Math.log10(v) - llo) / (lhi - llo)) * (pxHi - pxLo)) as Scale;
  f.domain = [lo, hi];
  return f;
}

export function niceLogDomain(values: number[], padFactor = 2): [number, number] {
  const finite = values.filter((v) => Number.isFinite(v) && v > 0);
  if (finite.length === 0) return [0.01, 100];
  const lo = Math.min(...finite) / padFactor;
  const hi = Math.max(...finite) * padFactor;
  return [10 ** Math.floor(Math.log10(lo)), 10 ** Math.ceil(Math.log10(hi))];
}

export function decadeTicks([lo, hi]: [number, number]): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(Math.log10(lo)); e <= Math.floor(Math.log10(hi)); e++) {
    ticks.push(10 ** e);
  }
  return ticks;
}

export interface RoofSegment {
  level: string;
  /** polyline in screen space: sloped memory-bound part then flat part */
  path: { x: number; y: number }[];
  ridgeAi: number;
}

/** Screen polylines for every roof of a model, clipped to the AI domain.
 * The ridge AI of each roof is read off the model (peak / bandwidth) —
 * a presentation of two published numbers, not a classification. */
export function roofSegments(
  model: PlotModel,
  sx: Scale,
  sy: Scale,
): RoofSegment[] {
  const [aiLo, aiHi] = sx.domain;
  return model.roofs.map((roof) => {
    const ridgeAi = model.fp_peak_gflops / roof.bandwidth_gbps;
    const path: { x: number; y: number }[] = [];
    const startAi = aiLo;
    const kneeAi = Math.min(Math.max(ridgeAi, aiLo), aiHi);
    path.push({ x: sx(startAi), y: sy(roof.bandwidth_gbps * startAi) });
    path.push({ x: sx(kneeAi), y: sy(roof.bandwidth_gbps * kneeAi) });
    if (kneeAi < aiHi) {
      path.push({ x: sx(aiHi), y: sy(model.fp_peak_gflops) });
    }
    return { level: roof.level, path, ridgeAi };
  });
}

export interface CeilingSegment {
  op: string;
  y: number;
  xStart: number;
  xEnd: number;
}

export function ceilingSegments(model: PlotModel, sx: Scale, sy: Scale): CeilingSegment[] {
  const [aiLo, aiHi] = sx.domain;
  const fastest = Math.max(...model.roofs.map((r) => r.bandwidth_gbps));
  return model.ceilings.map((c) => ({
    op: c.op,
    y: sy(c.gflops),
    // a ceiling starts where the fastest roof reaches it
    xStart: sx(Math.min(Math.max(c.gflops / fastest, aiLo), aiHi)),
    xEnd: sx(aiHi),
  }));
}

export interface ScreenPoint {
  x: number;
  y: number;
  point: PlotPoint;
  /** hover text; the region string is verbatim from the service */
  tooltip: string;
}

export function projectPoints(points: PlotPoint[], sx: Scale, sy: Scale): ScreenPoint[] {
  return points.map((p) => ({
    x: sx(p.ai),
    y: sy(p.gflops),
    point: p,
    tooltip:
      `${p.label || p.source}: AI ${p.ai.toPrecision(4)} FLOP/byte, ` +
      `${p.gflops.toPrecision(4)} GFLOP/s (${p.source})` +
      (p.region ? ` — ${p.region}` : ""),
  }));
}

export interface CacheMarker {
  label: string;
  x: number;
}

export function cacheMarkers(
  topology: { l1d_kib: number | null; l2_kib: number | null; l3_slice_kib: number | null } | null,
  sx: Scale,
): CacheMarker[] {
  if (!topology) return [];
  const markers: CacheMarker[] = [];
  const entries: [string, number | null][] = [
    ["L1", topology.l1d_kib],
    ["L2", topology.l2_kib],
    ["L3 slice", topology.l3_slice_kib],
  ];
  const [lo, hi] = sx.domain;
  for (const [name, kib] of entries) {
    if (kib === null) continue;
    const bytes = kib * 1024;
    if (bytes >= lo && bytes <= hi) {
      markers.push({ label: `${name} (${kib} KiB)`, x: sx(bytes) });
    }
  }
  return markers;
}

export interface CurveGeometry {
  line: { x: number; y: number }[];
  markers: CacheMarker[];
  xTicks: { x: number; label: string }[];
}

export function memcurveGeometry(
  record: MemcurveRecord,
  topology: { l1d_kib: number | null; l2_kib: number | null; l3_slice_kib: number | null } | null,
  view: ViewBox = DEFAULT_VIEW,
): CurveGeometry {
  const sizes = record.points.map(([s]) => s);
  const bws = record.points.map(([, b]) => b);
  const sx = logScale(Math.min(...sizes), Math.max(...sizes),
    view.margin, view.width - view.margin);
  const sy = logScale(...niceLogDomain(bws),
    view.height - view.margin, view.margin);
  return {
    line: record.points.map(([s, b]) => ({ x: sx(s), y: sy(b) })),
    markers: cacheMarkers(topology, sx),
    xTicks: sizes
      .filter((s) => Number.isInteger(Math.log2(s)))
      .map((s) => ({ x: sx(s), label: formatBytes(s) })),
  };
}

export function formatBytes(n: number): string {
  if (n >= 1 << 30) return `${n / (1 << 30)} GiB`;
  if (n >= 1 << 20) return `${n / (1 << 20)} MiB`;
  if (n >= 1 << 10) return `${n / (1 << 10)} KiB`;
  return `${n} B`;
}
