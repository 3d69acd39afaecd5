/** Browser entry point: wires the sidebar form, run polling, the result
 * table, and the SVG plot views together against the live service. */

import { BusyApiError, ServiceClient } from "./api.js";
import {
  DEFAULT_FORM,
  FP_OPS,
  FormState,
  PRECISIONS,
  TESTS,
  formToCliArgs,
  formToConfig,
  validateForm,
} from "./config.js";
import {
  DEFAULT_VIEW,
  ceilingSegments,
  decadeTicks,
  logScale,
  memcurveGeometry,
  niceLogDomain,
  projectPoints,
  roofSegments,
} from "./plot.js";
import { pollUntilDone } from "./poller.js";
import {
  DashboardState,
  initialState,
  launchAllowed,
  setRecords,
  toggleOverlay,
} from "./state.js";
import type { MemcurveRecord, PlotPayload, RooflineRecord } from "./types.js";

const client = new ServiceClient((url, init) => fetch(url, init));
let state: DashboardState = initialState();
let lastPlot: PlotPayload | null = null;
let lastCurve: MemcurveRecord | null = null;
const form: FormState = { ...DEFAULT_FORM };

const $ = (id: string) => document.getElementById(id)!;

function option(value: string): HTMLOptionElement {
  const o = document.createElement("option");
  o.value = value;
  o.textContent = value;
  return o;
}

function renderBanner(): void {
  const el = $("banner");
  if (!state.banner) {
    el.hidden = true;
    return;
  }
  el.hidden = false;
  el.className = `banner ${state.banner.kind}`;
  el.textContent = state.banner.text;
}

function renderProgress(): void {
  const el = $("progress");
  const run = state.activeRun;
  if (!run || run.state === "done" || run.state === "failed") {
    el.textContent = run ? `last run ${run.id}: ${run.state}` : "";
  } else {
    const p = run.progress;
    el.textContent = `${run.state}: ${p.completed}/${p.total} ${p.current}`;
  }
  ($("launch") as HTMLButtonElement).disabled = !launchAllowed(state);
}

function renderTable(): void {
  const tbody = $("results-body");
  tbody.textContent = "";
  state.records.forEach((r, i) => {
    const tr = document.createElement("tr");
    const toggle = document.createElement("input");
    toggle.type = "checkbox";
    toggle.checked = state.overlay.includes(i);
    toggle.addEventListener("change", () => {
      state = toggleOverlay(state, i);
      renderPlot();
    });
    const cells: (string | HTMLElement)[] = [
      toggle, r.date, r.isa, r.precision, String(r.threads),
      r.l1_gbps?.toPrecision(4) ?? "—",
      r.dram_gbps?.toPrecision(4) ?? "—",
      r.fma_gflops?.toPrecision(4) ?? r.fp_gflops?.toPrecision(4) ?? "—",
    ];
    for (const c of cells) {
      const td = document.createElement("td");
      if (typeof c === "string") td.textContent = c;
      else td.appendChild(c);
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  });
}

function svgEl<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, String(v));
  return el;
}

const ROOF_COLORS = ["#1f77b4", "#2ca02c", "#ff7f0e", "#d62728", "#9467bd"];

function renderPlot(): void {
  const svg = $("roofline-plot") as unknown as SVGSVGElement;
  svg.textContent = "";
  if (!lastPlot || lastPlot.models.length === 0) return;
  const v = DEFAULT_VIEW;
  const models = lastPlot.models;
  const points = lastPlot.points;
  const ais = points.map((p) => p.ai)
    .concat(models.flatMap((m) => m.roofs.map((r) => m.fp_peak_gflops / r.bandwidth_gbps)));
  const perf = points.map((p) => p.gflops)
    .concat(models.map((m) => m.fp_peak_gflops));
  const sx = logScale(...niceLogDomain(ais), v.margin, v.width - v.margin);
  const sy = logScale(...niceLogDomain(perf), v.height - v.margin, v.margin);

  for (const t of decadeTicks(sx.domain)) {
    svg.appendChild(svgEl("line", {
      x1: sx(t), x2: sx(t), y1: v.margin, y2: v.height - v.margin,
      stroke: "#eee",
    }));
    const label = svgEl("text", {
      x: sx(t), y: v.height - v.margin + 16, "text-anchor": "middle",
      "font-size": 10,
    });
    label.textContent = String(t);
    svg.appendChild(label);
  }
  for (const t of decadeTicks(sy.domain)) {
    svg.appendChild(svgEl("line", {
      x1: v.margin, x2: v.width - v.margin, y1: sy(t), y2: sy(t),
      stroke: "#eee",
    }));
    const label = svgEl("text", {
      x: v.margin - 6, y: sy(t) + 3, "text-anchor": "end", "font-size": 10,
    });
    label.textContent = String(t);
    svg.appendChild(label);
  }

  models.forEach((model, mi) => {
    for (const seg of roofSegments(model, sx, sy)) {
      const d = seg.path.map((p, i) =>
        `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
      svg.appendChild(svgEl("path", {
        d, fill: "none", stroke: ROOF_COLORS[mi % ROOF_COLORS.length],
        "stroke-width": 1.5,
      }));
    }
    for (const c of ceilingSegments(model, sx, sy)) {
      svg.appendChild(svgEl("line", {
        x1: c.xStart, x2: c.xEnd, y1: c.y, y2: c.y,
        stroke: ROOF_COLORS[mi % ROOF_COLORS.length], "stroke-dasharray": "4 3",
      }));
    }
  });

  for (const sp of projectPoints(points, sx, sy)) {
    const dot = svgEl("circle", { cx: sp.x, cy: sp.y, r: 4, fill: "#333" });
    const title = document.createElementNS("http://www.w3.org/2000/svg", "title");
    title.textContent = sp.tooltip;
    dot.appendChild(title);
    svg.appendChild(dot);
  }
}

function renderMemcurve(): void {
  const svg = $("memcurve-plot") as unknown as SVGSVGElement;
  svg.textContent = "";
  if (!lastCurve) return;
  const geo = memcurveGeometry(lastCurve, state.machine?.topology ?? null);
  const d = geo.line.map((p, i) =>
    `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
  svg.appendChild(svgEl("path", { d, fill: "none", stroke: "#1f77b4", "stroke-width": 1.5 }));
  for (const m of geo.markers) {
    svg.appendChild(svgEl("line", {
      x1: m.x, x2: m.x, y1: DEFAULT_VIEW.margin,
      y2: DEFAULT_VIEW.height - DEFAULT_VIEW.margin,
      stroke: "#999", "stroke-dasharray": "2 3",
    }));
    const label = svgEl("text", {
      x: m.x + 3, y: DEFAULT_VIEW.margin + 12, "font-size": 10, fill: "#666",
    });
    label.textContent = m.label;
    svg.appendChild(label);
  }
}

async function refreshResults(): Promise<void> {
  const payload = await client.results<RooflineRecord>("roofline");
  state = setRecords(state, payload.records);
  renderTable();
  try {
    const curves = await client.results<MemcurveRecord>("memcurve");
    lastCurve = curves.records[curves.records.length - 1] ?? null;
    renderMemcurve();
  } catch {
    /* no curve results yet */
  }
}

async function launch(): Promise<void> {
  const machine = state.machine;
  const errors = validateForm(form, machine?.isas ?? []);
  if (Object.keys(errors).length > 0) {
    state.banner = { kind: "error", text: Object.values(errors).join("; ") };
    renderBanner();
    return;
  }
  state.banner = null;
  try {
    const run = await client.submitRun(formToConfig(form));
    state.activeRun = run;
    renderProgress();
    const finished = await pollUntilDone(client, run.id, (r) => {
      state.activeRun = r;
      renderProgress();
    });
    if (finished.state === "failed") {
      state.banner = { kind: "error", text: finished.error ?? "run failed" };
    } else {
      lastPlot = await client.rooflinePlot(finished.id).catch(() => null);
      renderPlot();
      await refreshResults();
    }
  } catch (err) {
    if (err instanceof BusyApiError) {
      state.banner = {
        kind: "info",
        text: `another run (${err.activeRunId}) is in flight`,
      };
      const finished = await pollUntilDone(client, err.activeRunId, (r) => {
        state.activeRun = r;
        renderProgress();
      });
      void finished;
    } else {
      state.banner = { kind: "error", text: String(err) };
    }
  }
  renderBanner();
  renderProgress();
}

async function init(): Promise<void> {
  for (const t of TESTS) $("f-test").appendChild(option(t));
  for (const p of PRECISIONS) $("f-precision").appendChild(option(p));
  for (const op of FP_OPS) $("f-op").appendChild(option(op));

  state.machine = await client.machine();
  $("machine-name").textContent = state.machine.machine;
  $("f-isa").appendChild(option("auto"));
  for (const isa of state.machine.isas) $("f-isa").appendChild(option(isa));

  const bind = (id: string, apply: (v: string) => void) =>
    $(id).addEventListener("change", (e) => {
      apply((e.target as HTMLInputElement).value);
      $("cli-echo").textContent = "carm " + formToCliArgs(form).join(" ");
    });
  bind("f-test", (v) => (form.test = v as FormState["test"]));
  bind("f-isa", (v) => (form.isa = v as FormState["isa"]));
  bind("f-precision", (v) => (form.precision = v as FormState["precision"]));
  bind("f-threads", (v) => (form.threads = Number(v)));
  bind("f-loads", (v) => (form.loads = Number(v)));
  bind("f-stores", (v) => (form.stores = Number(v)));
  bind("f-op", (v) => (form.fpOp = v as FormState["fpOp"]));
  bind("f-fpldst", (v) => (form.fpPerMem = v === "" ? null : Number(v)));

  $("launch").addEventListener("click", () => void launch());
  $("refresh").addEventListener("click", () => void refreshResults());
  await refreshResults();
  renderProgress();
}

void init();
