/** JSON shapes published by the benchmarking service (schema_version 1).
 *
 * These mirror the service's JSON schemas field for field; the dashboard
 * performs no domain math of its own, so every derived quantity (AI,
 * attainable performance, region labels) arrives through these types.
 */

export type IsaName = "auto" | "scalar" | "sse" | "avx2" | "avx512" | "neon" | "rvv";
export type Precision = "sp" | "dp";
export type FpOp = "add" | "mul" | "div" | "fma";
export type TestName =
  | "roofline" | "L1" | "L2" | "L3" | "DRAM" | "FP" | "MEM"
  | "mixedL1" | "mixedL2" | "mixedL3" | "mixedDRAM";
export type RunStateName = "queued" | "running" | "done" | "failed";
export type Region = "memory-bound" | "mixed" | "compute-bound";

export interface MachineInfo {
  schema_version: number;
  machine: string;
  architecture: string;
  isas: string[];
  topology: {
    l1d_kib: number | null;
    l2_kib: number | null;
    l3_total_kib: number | null;
    l3_slice_kib: number | null;
    source: string;
  } | null;
}

export interface RunConfig {
  test: TestName;
  isa: IsaName;
  precision: Precision;
  threads: number;
  ld_st_ratio: [number, number];
  fp_op: FpOp;
  fp_per_mem: number | [number, number];
  verbosity: number;
}

export interface RunProgress {
  phase: "idle" | "running" | "done" | "failed";
  completed: number;
  total: number;
  current: string;
}

export interface RunHandle {
  schema_version: number;
  id: string;
  state: RunStateName;
  config: Record<string, unknown>;
  progress: RunProgress;
  result: Record<string, unknown> | null;
  error: string | null;
}

export interface BusyError {
  error: string;
  active_run_id: string;
  schema_version: number;
}

export interface FieldErrors {
  error: string;
  field_errors?: Record<string, string>;
  schema_version: number;
}

export interface RooflineRecord {
  machine: string;
  date: string;
  isa: string;
  precision: string;
  threads: number;
  ld_st_ratio: [number, number];
  frequency_ghz: number;
  l1_gbps: number | null;
  l1_ipc: number | null;
  l2_gbps: number | null;
  l2_ipc: number | null;
  l3_gbps: number | null;
  l3_ipc: number | null;
  dram_gbps: number | null;
  dram_ipc: number | null;
  fp_op: string;
  fp_gflops: number | null;
  fp_ipc: number | null;
  fma_gflops: number | null;
  fma_ipc: number | null;
  warnings: string[];
}

export interface MemcurveRecord {
  machine: string;
  date: string;
  isa: string;
  precision: string;
  threads: number;
  ld_st_ratio: [number, number];
  frequency_ghz: number;
  points: [number, number, number][]; // [bytes, GB/s, IPC]
  warnings: string[];
}

export interface MixedResultRow {
  machine: string;
  isa: string;
  precision: string;
  threads: number;
  point: {
    ai: number;
    gflops: number;
    ipc: number;
    fp_per_mem: number;
    level: string;
    fp_op: string;
  };
}

export interface ResultsPayload<T> {
  schema_version: number;
  suite: string;
  records: T[];
}

export interface PlotModel {
  machine: string;
  frequency_ghz: number;
  fp_peak_gflops: number;
  roofs: {
    level: string;
    bandwidth_gbps: number;
    ipc: number;
    ld_st_ratio: [number, number];
    isa: string;
    precision: string;
    threads: number;
  }[];
  ceilings: {
    op: string;
    gflops: number;
    ipc: number;
    isa: string;
    precision: string;
    threads: number;
  }[];
  warnings: string[];
}

export interface PlotPoint {
  ai: number;
  gflops: number;
  source: string;
  label: string;
  region: Region | null;
}

export interface PlotPayload {
  schema_version: number;
  models: PlotModel[];
  points: PlotPoint[];
}

export interface AnalysisPayload {
  schema_version: number;
  point: { ai: number; gflops: number; source: string; label: string };
  region: Region | null;
  flops?: number;
  bytes_moved?: number;
  counts?: { lst_ins: number; sp_ops: number; dp_ops: number };
  warnings?: string[];
}
