/** Dashboard state: machine facts, the fetched result index, the
 * in-flight run (at most one), and the plot overlay selection.
 *
 * Invariant: the overlay set only ever references records that are
 * present in the fetched result index; refreshing the index drops any
 * overlay entries whose records disappeared.
 */

import type { MachineInfo, RooflineRecord, RunHandle } from "./types.js";

export interface DashboardState {
  machine: MachineInfo | null;
  records: RooflineRecord[];
  /** indices into records that are overlaid on the plot */
  overlay: number[];
  activeRun: RunHandle | null;
  banner: { kind: "info" | "error"; text: string } | null;
}

export function initialState(): DashboardState {
  return { machine: null, records: [], overlay: [], activeRun: null, banner: null };
}

export function setRecords(state: DashboardState, records: RooflineRecord[]): DashboardState {
  // keep overlay entries whose (machine, date, isa, threads) tuple still
  // exists; re-point them at the new index
  const key = (r: RooflineRecord) => `${r.machine}|${r.date}|${r.isa}|${r.threads}`;
  const oldKeys = state.overlay.map((i) => key(state.records[i]));
  const overlay: number[] = [];
  records.forEach((r, i) => {
    if (oldKeys.includes(key(r))) overlay.push(i);
  });
  return { ...state, records, overlay };
}

export function toggleOverlay(state: DashboardState, index: number): DashboardState {
  if (index < 0 || index >= state.records.length) {
    return state; // never reference a record outside the index
  }
  const overlay = state.overlay.includes(index)
    ? state.overlay.filter((i) => i !== index)
    : [...state.overlay, index];
  return { ...state, overlay };
}

export function launchAllowed(state: DashboardState): boolean {
  const run = state.activeRun;
  return run === null || run.state === "done" || run.state === "failed";
}
