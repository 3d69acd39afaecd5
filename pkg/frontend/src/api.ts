/** Typed client for the benchmarking service.
 *
 * The fetch function is injected so contract tests can run the whole
 * dashboard logic against a scripted mock service; the browser entry
 * point passes window.fetch.
 */

import type {
  AnalysisPayload,
  MachineInfo,
  PlotPayload,
  ResultsPayload,
  RunConfig,
  RunHandle,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public body: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

export class BusyApiError extends ApiError {
  constructor(status: number, message: string, public activeRunId: string) {
    super(status, message);
  }
}

async function parse<T>(res: { status: number; json(): Promise<unknown> }): Promise<T> {
  const body = (await res.json()) as Record<string, unknown>;
  if (res.status >= 200 && res.status < 300) {
    return body as T;
  }
  const message = typeof body.error === "string" ? body.error : `HTTP ${res.status}`;
  if (res.status === 409 && typeof body.active_run_id === "string") {
    throw new BusyApiError(res.status, message, body.active_run_id);
  }
  throw new ApiError(res.status, message, body);
}

export class ServiceClient {
  constructor(
    private fetchFn: FetchLike,
    private base: string = "",
  ) {}

  private get(path: string): Promise<{ status: number; json(): Promise<unknown> }> {
    return this.fetchFn(this.base + path);
  }

  private post(path: string, body: unknown): Promise<{ status: number; json(): Promise<unknown> }> {
    return this.fetchFn(this.base + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async machine(): Promise<MachineInfo> {
    return parse(await this.get("/api/machine"));
  }

  async submitRun(config: RunConfig): Promise<RunHandle> {
    return parse(await this.post("/api/runs", config));
  }

  async runStatus(id: string): Promise<RunHandle> {
    return parse(await this.get(`/api/runs/${id}`));
  }

  async results<T>(suite: string): Promise<ResultsPayload<T>> {
    return parse(await this.get(`/api/results?suite=${encodeURIComponent(suite)}`));
  }

  async analysis(body: Record<string, unknown>): Promise<AnalysisPayload> {
    return parse(await this.post("/api/analysis", body));
  }

  async rooflinePlot(runId: string): Promise<PlotPayload> {
    return parse(await this.get(`/api/plots/roofline/${runId}`));
  }
}
