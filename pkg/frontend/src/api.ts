/** Typed client for the /v1 review API. The fetch implementation is
 * injectable so tests can run against a fixture server. */

import type {
  ApiErrorBody,
  LabelEntry,
  LabelsResponse,
  ReviewItemsResponse,
  RunSummary,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: ApiErrorBody["error"]["code"];
  readonly detail: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody["error"]) {
    super(body.message);
    this.status = status;
    this.code = body.code;
    this.detail = body.detail ?? {};
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = "", fetchImpl: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchImpl = fetchImpl;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    if (!resp.ok) {
      let body: ApiErrorBody;
      try {
        body = (await resp.json()) as ApiErrorBody;
      } catch {
        body = {
          error: { code: "internal", message: `HTTP ${resp.status}`, detail: {} },
        };
      }
      throw new ApiError(resp.status, body.error);
    }
    return (await resp.json()) as T;
  }

  listRuns(): Promise<{ runs: RunSummary[] }> {
    return this.request("/v1/runs");
  }

  getRun(runId: string): Promise<RunSummary & Record<string, unknown>> {
    return this.request(`/v1/runs/${runId}`);
  }

  reviewItems(
    runId: string,
    state: "all" | "unreviewed" | "labeled" = "all",
  ): Promise<ReviewItemsResponse> {
    return this.request(`/v1/runs/${runId}/review-items?state=${state}`);
  }

  postLabels(runId: string, labels: LabelEntry[]): Promise<LabelsResponse> {
    return this.request(`/v1/runs/${runId}/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ labels }),
    });
  }

  advance(runId: string): Promise<RunSummary> {
    return this.request(`/v1/runs/${runId}/advance`, { method: "POST" });
  }
}
