/** In-memory fixture server implementing the /v1 surface the UI consumes:
 * review items with revision checks, label application, and advance. */

import type { FetchLike } from "../src/api.js";
import type { HumanLabel, ReviewItem } from "../src/types.js";

export function makeItem(overrides: Partial<ReviewItem> & { item_id: string }): ReviewItem {
  return {
    run_id: "run1",
    record_index: 0,
    sentence_index: 0,
    sentence_text: `sentence ${overrides.item_id}`,
    completion_context: `full completion for ${overrides.item_id}`,
    asls: 8.0,
    cross_entropy: 12.0,
    entity_count: 3,
    relation_count: 1,
    machine_flag: "low_certainty",
    pair_index: 0,
    human_label: "unreviewed",
    edited_completion: null,
    revision: 0,
    ...overrides,
  };
}

interface LabelPost {
  labels: {
    item_id: string;
    human_label: HumanLabel;
    edited_completion?: string | null;
    revision: number;
  }[];
}

export class FixtureServer {
  items: ReviewItem[];
  runState = "curation_open";
  advanceCount = 0;
  failNextAdvanceWithConflict = false;

  constructor(items: ReviewItem[]) {
    this.items = items.map((i) => ({ ...i }));
  }

  private remaining(): number {
    return this.items.filter((i) => i.human_label === "unreviewed").length;
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private error(status: number, code: string, message: string, detail: object = {}) {
    return this.json(status, { error: { code, message, detail } });
  }

  private summary() {
    return {
      run_id: "run1",
      state: this.runState,
      created_at: "t0",
      updated_at: "t1",
      stage1_model: "mock:stage1-ft-x",
      stage2_model: null,
      eval_summary: {},
      remaining_unreviewed: this.remaining(),
      review_item_count: this.items.length,
    };
  }

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");

    if (method === "GET" && /\/v1\/runs$/.test(path)) {
      return this.json(200, { runs: [this.summary()] });
    }
    if (method === "GET" && /\/v1\/runs\/run1\/review-items/.test(path)) {
      const state = new URL(`http://x${path}`).searchParams.get("state") ?? "all";
      let items = this.items;
      if (state === "unreviewed") items = items.filter((i) => i.human_label === "unreviewed");
      if (state === "labeled") items = items.filter((i) => i.human_label !== "unreviewed");
      return this.json(200, { run_id: "run1", state: this.runState, items });
    }
    if (method === "POST" && /\/v1\/runs\/run1\/labels$/.test(path)) {
      if (this.runState !== "curation_open" && this.runState !== "curated") {
        return this.error(409, "conflict", `cannot label while ${this.runState}`);
      }
      const body = JSON.parse(String(init?.body)) as LabelPost;
      const stale = body.labels.filter((l) => {
        const item = this.items.find((i) => i.item_id === l.item_id);
        return !item || item.revision !== l.revision;
      });
      if (stale.length > 0) {
        return this.error(409, "conflict", "stale revision", {
          stale_items: stale.map((l) => l.item_id),
        });
      }
      for (const label of body.labels) {
        const item = this.items.find((i) => i.item_id === label.item_id)!;
        item.human_label = label.human_label;
        item.edited_completion = label.edited_completion ?? null;
        item.revision += 1;
      }
      if (this.remaining() === 0 && this.runState === "curation_open") {
        this.runState = "curated";
      }
      return this.json(200, {
        run_id: "run1",
        remaining: this.remaining(),
        state: this.runState,
        applied: body.labels.length,
      });
    }
    if (method === "POST" && /\/v1\/runs\/run1\/advance$/.test(path)) {
      if (this.failNextAdvanceWithConflict) {
        this.failNextAdvanceWithConflict = false;
        return this.error(409, "conflict", "already advanced elsewhere");
      }
      if (this.runState !== "curated") {
        return this.error(409, "conflict", `no transition from ${this.runState}`);
      }
      this.advanceCount += 1;
      this.runState = "stage2_submitted";
      return this.json(200, this.summary());
    }
    return this.error(404, "not_found", `no route for ${method} ${path}`);
  };
}
