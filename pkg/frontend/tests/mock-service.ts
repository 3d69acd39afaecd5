/** An in-memory scripted service implementing the documented HTTP
 * endpoints, exposed as a FetchLike for driving the dashboard in tests. */

import type { FetchLike } from "../src/api.js";
import type {
  MachineInfo,
  PlotPayload,
  PlotPoint,
  RooflineRecord,
  RunConfig,
  RunHandle,
} from "../src/types.js";

const MACHINE: MachineInfo = {
  schema_version: 1,
  machine: "sklx-sim",
  architecture: "x86_64",
  isas: ["scalar", "sse", "avx2", "avx512"],
  topology: {
    l1d_kib: 32,
    l2_kib: 1024,
    l3_total_kib: 19712,
    l3_slice_kib: 1408,
    source: "cpuid",
  },
};

export function sampleRecord(date: string, isa = "avx2", threads = 1): RooflineRecord {
  return {
    machine: "sklx-sim",
    date,
    isa,
    precision: "dp",
    threads,
    ld_st_ratio: [2, 1],
    frequency_ghz: 3.0,
    l1_gbps: 576.0,
    l1_ipc: 3.0,
    l2_gbps: 288.0,
    l2_ipc: 1.5,
    l3_gbps: 144.0,
    l3_ipc: 0.75,
    dram_gbps: 24.0,
    dram_ipc: 0.125,
    fp_op: "add",
    fp_gflops: 48.0,
    fp_ipc: 2.0,
    fma_gflops: 96.0,
    fma_ipc: 2.0,
    warnings: [],
  };
}

export function samplePlot(points: PlotPoint[]): PlotPayload {
  return {
    schema_version: 1,
    models: [
      {
        machine: "sklx-sim",
        frequency_ghz: 3.0,
        fp_peak_gflops: 96.0,
        roofs: [
          { level: "L1", bandwidth_gbps: 576.0, ipc: 3.0, ld_st_ratio: [2, 1], isa: "avx2", precision: "dp", threads: 1 },
          { level: "L2", bandwidth_gbps: 288.0, ipc: 1.5, ld_st_ratio: [2, 1], isa: "avx2", precision: "dp", threads: 1 },
          { level: "L3", bandwidth_gbps: 144.0, ipc: 0.75, ld_st_ratio: [2, 1], isa: "avx2", precision: "dp", threads: 1 },
          { level: "DRAM", bandwidth_gbps: 24.0, ipc: 0.125, ld_st_ratio: [2, 1], isa: "avx2", precision: "dp", threads: 1 },
        ],
        ceilings: [
          { op: "fma", gflops: 96.0, ipc: 2.0, isa: "avx2", precision: "dp", threads: 1 },
        ],
        warnings: [],
      },
    ],
    points,
  };
}

export interface MockOptions {
  /** runStatus polls a run must survive before it reports done */
  pollsUntilDone?: number;
  plotPoints?: PlotPoint[];
  records?: RooflineRecord[];
  failWith?: string;
}

export interface MockService {
  fetch: FetchLike;
  /** every (method, path) the dashboard issued, in order */
  calls: { method: string; path: string }[];
  submitted: RunConfig[];
}

function reply(status: number, body: unknown): Promise<{ status: number; json(): Promise<unknown> }> {
  return Promise.resolve({ status, json: () => Promise.resolve(body) });
}

export function mockService(options: MockOptions = {}): MockService {
  const pollsUntilDone = options.pollsUntilDone ?? 3;
  const records = options.records ?? [sampleRecord("2026-08-23T10:00:00")];
  const calls: { method: string; path: string }[] = [];
  const submitted: RunConfig[] = [];
  const runs = new Map<string, { config: RunConfig; polls: number }>();
  let nextId = 1;
  let activeRunId: string | null = null;

  const stateOf = (polls: number): RunHandle["state"] => {
    if (polls >= pollsUntilDone) return options.failWith ? "failed" : "done";
    return polls === 0 ? "queued" : "running";
  };

  const handle = (id: string, run: { config: RunConfig; polls: number }): RunHandle => {
    const state = stateOf(run.polls);
    return {
      schema_version: 1,
      id,
      state,
      config: run.config as unknown as Record<string, unknown>,
      progress: {
        phase: state === "queued" ? "idle" : state === "running" ? "running" : state,
        completed: Math.min(run.polls, pollsUntilDone),
        total: pollsUntilDone,
        current: state === "done" ? "" : "L1",
      },
      result: state === "done" ? { ok: true } : null,
      error: state === "failed" ? options.failWith ?? null : null,
    };
  };

  const fetch: FetchLike = (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    calls.push({ method, path });

    if (method === "GET" && path === "/api/machine") return reply(200, MACHINE);

    if (method === "POST" && path === "/api/runs") {
      if (activeRunId && runs.get(activeRunId)!.polls < pollsUntilDone) {
        return reply(409, {
          error: "a run is already in progress",
          active_run_id: activeRunId,
          schema_version: 1,
        });
      }
      const config = JSON.parse(init!.body!) as RunConfig;
      if (!Number.isInteger(config.threads) || config.threads < 1) {
        return reply(400, {
          error: "invalid run configuration",
          field_errors: { threads: "must be a positive integer" },
          schema_version: 1,
        });
      }
      submitted.push(config);
      const id = `run-${nextId++}`;
      const run = { config, polls: 0 };
      runs.set(id, run);
      activeRunId = id;
      return reply(202, handle(id, run));
    }

    const statusMatch = path.match(/^\/api\/runs\/([^/]+)$/);
    if (method === "GET" && statusMatch) {
      const run = runs.get(statusMatch[1]);
      if (!run) return reply(404, { error: "no such run", schema_version: 1 });
      const out = handle(statusMatch[1], run);
      run.polls += 1;
      return reply(200, out);
    }

    if (method === "GET" && path.startsWith("/api/results")) {
      const suite = new URLSearchParams(path.split("?")[1] ?? "").get("suite");
      if (suite === "roofline") {
        return reply(200, { schema_version: 1, suite, records });
      }
      return reply(200, { schema_version: 1, suite, records: [] });
    }

    const plotMatch = path.match(/^\/api\/plots\/roofline\/([^/]+)$/);
    if (method === "GET" && plotMatch) {
      if (!runs.has(plotMatch[1])) {
        return reply(404, { error: "no such run", schema_version: 1 });
      }
      return reply(200, samplePlot(options.plotPoints ?? []));
    }

    return reply(404, { error: `no route for ${method} ${path}`, schema_version: 1 });
  };

  return { fetch, calls, submitted };
}
