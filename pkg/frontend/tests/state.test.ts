import { describe, expect, it } from "vitest";
import {
  initialState,
  launchAllowed,
  setRecords,
  toggleOverlay,
} from "../src/state.js";
import type { RunHandle } from "../src/types.js";
import { sampleRecord } from "./mock-service.js";

function runInState(state: RunHandle["state"]): RunHandle {
  return {
    schema_version: 1,
    id: "run-1",
    state,
    config: {},
    progress: { phase: "running", completed: 0, total: 1, current: "L1" },
    result: null,
    error: null,
  };
}

describe("overlay invariant", () => {
  it("only references records present in the index", () => {
    let state = initialState();
    state = setRecords(state, [
      sampleRecord("d1"), sampleRecord("d2"), sampleRecord("d3"),
    ]);
    state = toggleOverlay(state, 1);
    state = toggleOverlay(state, 2);
    expect(state.overlay).toEqual([1, 2]);

    // refresh drops a record: overlay entries follow or disappear
    state = setRecords(state, [sampleRecord("d2")]);
    expect(state.overlay).toEqual([0]);
    for (const i of state.overlay) {
      expect(state.records[i]).toBeDefined();
    }
  });

  it("ignores out-of-range toggles", () => {
    let state = setRecords(initialState(), [sampleRecord("d1")]);
    state = toggleOverlay(state, 5);
    state = toggleOverlay(state, -1);
    expect(state.overlay).toEqual([]);
  });

  it("toggling twice removes the entry", () => {
    let state = setRecords(initialState(), [sampleRecord("d1")]);
    state = toggleOverlay(state, 0);
    state = toggleOverlay(state, 0);
    expect(state.overlay).toEqual([]);
  });
});

describe("launchAllowed", () => {
  it("allows a launch when idle or after a terminal state", () => {
    const state = initialState();
    expect(launchAllowed(state)).toBe(true);
    expect(launchAllowed({ ...state, activeRun: runInState("done") })).toBe(true);
    expect(launchAllowed({ ...state, activeRun: runInState("failed") })).toBe(true);
  });

  it("blocks a launch while a run is queued or running", () => {
    const state = initialState();
    expect(launchAllowed({ ...state, activeRun: runInState("queued") })).toBe(false);
    expect(launchAllowed({ ...state, activeRun: runInState("running") })).toBe(false);
  });
});
