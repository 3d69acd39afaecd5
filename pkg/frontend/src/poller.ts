/** Run polling: 1 s interval with backoff, one poller per in-flight run.
 *
 * The sleep function is injected so tests can drive the loop with
 * virtual time and complete a launch -> poll -> refresh cycle instantly.
 */

import type { ServiceClient } from "./api.js";
import type { RunHandle } from "./types.js";

export const POLL_INTERVAL_MS = 1000;
export const POLL_BACKOFF = 1.5;
export const POLL_MAX_INTERVAL_MS = 10_000;

export type SleepLike = (ms: number) => Promise<void>;

const realSleep: SleepLike = (ms) => new Promise((r) => setTimeout(r, ms));

export async function pollUntilDone(
  client: ServiceClient,
  runId: string,
  onProgress: (run: RunHandle) => void,
  sleep: SleepLike = realSleep,
): Promise<RunHandle> {
  let interval = POLL_INTERVAL_MS;
  for (;;) {
    const run = await client.runStatus(runId);
    onProgress(run);
    if (run.state === "done" || run.state === "failed") {
      return run;
    }
    await sleep(interval);
    // back off while the run is still going so long benchmarks do not
    // hammer the service; cap the interval
    interval = Math.min(interval * POLL_BACKOFF, POLL_MAX_INTERVAL_MS);
  }
}
