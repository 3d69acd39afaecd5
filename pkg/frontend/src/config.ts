/** Sidebar form state and its mapping onto run configurations.
 *
 * formToConfig/configToForm form a bijection: every reachable form state
 * maps to exactly one run configuration and back. The same configuration
 * domain is what the service validates and what the CLI flags express,
 * so a launched run is always reproducible from the command line.
 */

import type { FpOp, IsaName, Precision, RunConfig, TestName } from "./types.js";

export interface FormState {
  test: TestName;
  isa: IsaName;
  precision: Precision;
  threads: number;
  loads: number;
  stores: number;
  fpOp: FpOp;
  /** null = sweep 1..6, a number = fixed ratio (mixed suites only) */
  fpPerMem: number | null;
}

export const DEFAULT_FORM: FormState = {
  test: "roofline",
  isa: "auto",
  precision: "dp",
  threads: 1,
  loads: 2,
  stores: 1,
  fpOp: "add",
  fpPerMem: null,
};

export const TESTS: TestName[] = [
  "roofline", "L1", "L2", "L3", "DRAM", "FP", "MEM",
  "mixedL1", "mixedL2", "mixedL3", "mixedDRAM",
];
export const PRECISIONS: Precision[] = ["sp", "dp"];
export const FP_OPS: FpOp[] = ["add", "mul", "div", "fma"];

export function validateForm(form: FormState, detectedIsas: string[]): Record<string, string> {
  const errors: Record<string, string> = {};
  if (!TESTS.includes(form.test)) errors.test = "unknown test";
  if (form.isa !== "auto" && !detectedIsas.includes(form.isa)) {
    errors.isa = `not detected on this machine (${detectedIsas.join(", ")})`;
  }
  if (!Number.isInteger(form.threads) || form.threads < 1) {
    errors.threads = "must be a positive integer";
  }
  if (
    !Number.isInteger(form.loads) || !Number.isInteger(form.stores) ||
    form.loads < 0 || form.stores < 0 || form.loads + form.stores < 1
  ) {
    errors.ratio = "loads + stores must be at least 1";
  }
  if (form.fpPerMem !== null && (!Number.isInteger(form.fpPerMem) || form.fpPerMem < 1)) {
    errors.fpPerMem = "must be a positive integer or blank for a sweep";
  }
  return errors;
}

export function formToConfig(form: FormState): RunConfig {
  return {
    test: form.test,
    isa: form.isa,
    precision: form.precision,
    threads: form.threads,
    ld_st_ratio: [form.loads, form.stores],
    fp_op: form.fpOp,
    fp_per_mem: form.fpPerMem === null ? [1, 6] : form.fpPerMem,
    verbosity: 0,
  };
}

export function configToForm(config: RunConfig): FormState {
  let fpPerMem: number | null;
  if (typeof config.fp_per_mem === "number") {
    fpPerMem = config.fp_per_mem;
  } else if (config.fp_per_mem[0] === 1 && config.fp_per_mem[1] === 6) {
    fpPerMem = null;
  } else if (config.fp_per_mem[0] === config.fp_per_mem[1]) {
    fpPerMem = config.fp_per_mem[0];
  } else {
    throw new Error(`form cannot express fp_per_mem range ${config.fp_per_mem}`);
  }
  return {
    test: config.test,
    isa: config.isa,
    precision: config.precision,
    threads: config.threads,
    loads: config.ld_st_ratio[0],
    stores: config.ld_st_ratio[1],
    fpOp: config.fp_op,
    fpPerMem,
  };
}

/** The CLI argument vector equivalent to a form state, for display. */
export function formToCliArgs(form: FormState): string[] {
  const args = [
    "--test", form.test, "--isa", form.isa, "--precision", form.precision,
    "--threads", String(form.threads),
    "--ld_st_ratio", `${form.loads}:${form.stores}`,
    "--inst", form.fpOp,
  ];
  if (form.fpPerMem !== null) args.push("--fpldst", String(form.fpPerMem));
  return args;
}
