import { describe, expect, it } from "vitest";

import {
  initialState,
  labelCommitted,
  labelOptimistic,
  labelRolledBack,
  loaded,
  progress,
  releaseEnabled,
  rowView,
  sortItems,
  visibleItems,
} from "../src/state.js";
import type { ReviewItem } from "../src/types.js";
import { makeItem } from "./fixture.js";

/** small deterministic LCG so the ordering property is reproducible */
function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (s * 1664525 + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

function randomItems(seed: number, n: number): ReviewItem[] {
  const rand = lcg(seed);
  return Array.from({ length: n }, (_, i) =>
    makeItem({
      item_id: `i${String(i).padStart(3, "0")}`,
      asls: Math.round(rand() * 2000) / 100,
      cross_entropy: Math.round(rand() * 3000) / 100,
      human_label: rand() < 0.3 ? "creative" : "unreviewed",
      machine_flag: rand() < 0.5 ? "low_certainty" : "none",
    }),
  );
}

describe("queue ordering", () => {
  it("displays items ascending by the payload's asls values", () => {
    // property: for 50 random payloads, every adjacent displayed pair is ordered
    for (let seed = 1; seed <= 50; seed++) {
      const items = randomItems(seed, 1 + (seed % 17));
      const state = loaded(initialState("run1"), items, "curation_open");
      const shown = visibleItems(state);
      expect(shown.length).toBe(items.length);
      for (let i = 1; i < shown.length; i++) {
        expect(shown[i - 1]!.asls).toBeLessThanOrEqual(shown[i]!.asls);
      }
      // the displayed values are exactly the payload values, reordered
      const payloadSorted = [...items].map((i) => i.asls).sort((a, b) => a - b);
      expect(shown.map((i) => i.asls)).toEqual(payloadSorted);
    }
  });

  it("breaks asls ties stably by item id", () => {
    const items = [
      makeItem({ item_id: "b", asls: 5 }),
      makeItem({ item_id: "a", asls: 5 }),
    ];
    expect(sortItems(items).map((i) => i.item_id)).toEqual(["a", "b"]);
  });
});

describe("filters and progress", () => {
  const items = [
    makeItem({ item_id: "a", asls: 1, human_label: "unreviewed", machine_flag: "low_certainty" }),
    makeItem({ item_id: "b", asls: 2, human_label: "creative", machine_flag: "none" }),
    makeItem({ item_id: "c", asls: 3, human_label: "unreviewed", machine_flag: "none" }),
  ];
  const state = loaded(initialState("run1"), items, "curation_open");

  it("filter views are projections of the payload", () => {
    expect(visibleItems({ ...state, filter: "unreviewed" }).map((i) => i.item_id)).toEqual(["a", "c"]);
    expect(visibleItems({ ...state, filter: "labeled" }).map((i) => i.item_id)).toEqual(["b"]);
    expect(visibleItems({ ...state, filter: "flagged" }).map((i) => i.item_id)).toEqual(["a"]);
  });

  it("progress counts unreviewed items", () => {
    expect(progress(state)).toEqual({ total: 3, remaining: 2, done: 1 });
  });

  it("release stays disabled while items remain", () => {
    expect(releaseEnabled(state)).toBe(false);
  });
});

describe("optimistic labeling", () => {
  const base = loaded(
    initialState("run1"),
    [makeItem({ item_id: "a", asls: 1 })],
    "curation_open",
  );

  it("applies locally, commits with a revision bump", () => {
    let state = labelOptimistic(base, "a", "creative");
    expect(state.items[0]!.human_label).toBe("creative");
    expect(state.pending["a"]).toEqual({ human_label: "unreviewed", revision: 0 });
    state = labelCommitted(state, "a");
    expect(state.items[0]!.revision).toBe(1);
    expect(state.pending["a"]).toBeUndefined();
  });

  it("rolls back to the prior label on failure", () => {
    let state = labelOptimistic(base, "a", "hallucination");
    state = labelRolledBack(state, "a", "stale revision");
    expect(state.items[0]!.human_label).toBe("unreviewed");
    expect(state.items[0]!.revision).toBe(0);
    expect(state.lastError).toBe("stale revision");
  });
});

describe("row projection", () => {
  it("renders every number verbatim from the API payload", () => {
    const view = rowView(
      makeItem({
        item_id: "x1",
        asls: 8.04719,
        cross_entropy: 14.78861,
        entity_count: 5,
        relation_count: 2,
      }),
    );
    expect(view).toMatchSnapshot();
    expect(view.asls).toBe("8.0472");
    expect(view.ce).toBe("14.7886");
  });
});
