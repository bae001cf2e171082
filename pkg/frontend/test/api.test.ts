import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function capture(status = 200, body: unknown = {}) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchImpl = async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    return new Response(JSON.stringify(body), { status });
  };
  return { calls, client: new ApiClient("http://api", fetchImpl) };
}

describe("request shapes", () => {
  it("builds the documented paths", async () => {
    const { calls, client } = capture(200, { runs: [] });
    await client.listRuns();
    expect(calls[0]!.url).toBe("http://api/v1/runs");
  });

  it("review-items carries the state filter", async () => {
    const { calls, client } = capture(200, { run_id: "r", state: "s", items: [] });
    await client.reviewItems("r", "unreviewed");
    expect(calls[0]!.url).toBe("http://api/v1/runs/r/review-items?state=unreviewed");
  });

  it("labels POST body matches the frozen field names", async () => {
    const { calls, client } = capture(200, { run_id: "r", remaining: 0, state: "curated", applied: 1 });
    await client.postLabels("r", [
      { item_id: "a", human_label: "creative", edited_completion: null, revision: 2 },
    ]);
    expect(calls[0]!.init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0]!.init?.body))).toEqual({
      labels: [
        { item_id: "a", human_label: "creative", edited_completion: null, revision: 2 },
      ],
    });
  });
});

describe("error mapping", () => {
  it("exposes the error envelope", async () => {
    const { client } = capture(409, {
      error: { code: "conflict", message: "stale revision", detail: { stale_items: ["a"] } },
    });
    const err = await client.advance("r").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
    expect(err.detail).toEqual({ stale_items: ["a"] });
  });

  it("survives a non-JSON error body", async () => {
    const fetchImpl = async () => new Response("boom", { status: 500 });
    const client = new ApiClient("http://api", fetchImpl);
    const err = await client.listRuns().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("internal");
  });
});
