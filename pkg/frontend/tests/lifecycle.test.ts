/** The full launch -> poll -> refresh cycle against a scripted service.
 * Sleep is injected, so the cycle runs in virtual time and the whole
 * test finishes in well under the ten-second budget. */

import { describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api.js";
import { DEFAULT_FORM, formToConfig } from "../src/config.js";
import {
  POLL_BACKOFF,
  POLL_INTERVAL_MS,
  POLL_MAX_INTERVAL_MS,
  SleepLike,
  pollUntilDone,
} from "../src/poller.js";
import { initialState, setRecords } from "../src/state.js";
import type { RooflineRecord, RunStateName } from "../src/types.js";
import { mockService, sampleRecord } from "./mock-service.js";

function virtualClock(): { sleep: SleepLike; slept: number[] } {
  const slept: number[] = [];
  return {
    slept,
    sleep: (ms) => {
      slept.push(ms);
      return Promise.resolve();
    },
  };
}

describe("launch -> poll -> refresh", () => {
  it("completes the whole cycle against a mocked service in under 10 s", async () => {
    const started = Date.now();
    const svc = mockService({
      pollsUntilDone: 4,
      records: [sampleRecord("2026-08-23T11:00:00")],
    });
    const client = new ServiceClient(svc.fetch);
    const clock = virtualClock();

    // launch
    const run = await client.submitRun(formToConfig(DEFAULT_FORM));
    expect(run.state).toBe("queued");

    // poll with 1 s base interval and backoff, on virtual time
    const seen: RunStateName[] = [];
    const finished = await pollUntilDone(client, run.id, (r) => seen.push(r.state), clock.sleep);
    expect(finished.state).toBe("done");
    expect(finished.progress.phase).toBe("done");

    // states never regress while polling
    const rank: Record<RunStateName, number> = { queued: 0, running: 1, done: 2, failed: 2 };
    for (let i = 1; i < seen.length; i++) {
      expect(rank[seen[i]]).toBeGreaterThanOrEqual(rank[seen[i - 1]]);
    }

    // the poller asked for 1 s first, then backed off geometrically
    expect(clock.slept[0]).toBe(POLL_INTERVAL_MS);
    for (let i = 1; i < clock.slept.length; i++) {
      expect(clock.slept[i]).toBe(
        Math.min(clock.slept[i - 1] * POLL_BACKOFF, POLL_MAX_INTERVAL_MS),
      );
    }

    // refresh the result index, as the dashboard does after a run
    let state = initialState();
    const payload = await client.results<RooflineRecord>("roofline");
    state = setRecords(state, payload.records);
    expect(state.records).toHaveLength(1);
    expect(state.records[0].l1_gbps).toBe(576.0);

    // every request went to a documented endpoint
    const paths = svc.calls.map((c) => c.path);
    expect(paths[0]).toBe("/api/runs");
    expect(paths.filter((p) => p.startsWith("/api/runs/run-")).length).toBeGreaterThan(1);
    expect(paths[paths.length - 1]).toBe("/api/results?suite=roofline");

    expect(Date.now() - started).toBeLessThan(10_000);
  });

  it("reports a failed run's server message", async () => {
    const svc = mockService({ pollsUntilDone: 2, failWith: "machine on fire" });
    const client = new ServiceClient(svc.fetch);
    const clock = virtualClock();
    const run = await client.submitRun(formToConfig(DEFAULT_FORM));
    const finished = await pollUntilDone(client, run.id, () => {}, clock.sleep);
    expect(finished.state).toBe("failed");
    expect(finished.error).toBe("machine on fire");
  });
});
