/** Pure queue model. The view is a projection of the last API payload:
 * ordering, filtering, progress, and optimistic label bookkeeping happen
 * here, with no metric arithmetic beyond comparing server-sent values. */

import type { HumanLabel, ReviewItem } from "./types.js";

export type FlagFilter = "all" | "flagged" | "unreviewed" | "labeled";

export interface QueueState {
  runId: string;
  runState: string;
  items: ReviewItem[];
  filter: FlagFilter;
  cursor: number; // index into visibleItems
  /** item_id -> label present before an optimistic update, for rollback */
  pending: Record<string, { human_label: HumanLabel; revision: number }>;
  lastError: string | null;
  releaseInFlight: boolean;
}

export function initialState(runId: string): QueueState {
  return {
    runId,
    runState: "",
    items: [],
    filter: "all",
    cursor: 0,
    pending: {},
    lastError: null,
    releaseInFlight: false,
  };
}

/** Ascending ASLS (lowest certainty first); item_id breaks ties stably. */
export function sortItems(items: ReviewItem[]): ReviewItem[] {
  return [...items].sort((a, b) =>
    a.asls !== b.asls ? a.asls - b.asls : a.item_id < b.item_id ? -1 : 1,
  );
}

export function visibleItems(state: QueueState): ReviewItem[] {
  const sorted = sortItems(state.items);
  switch (state.filter) {
    case "flagged":
      return sorted.filter((i) => i.machine_flag === "low_certainty");
    case "unreviewed":
      return sorted.filter((i) => i.human_label === "unreviewed");
    case "labeled":
      return sorted.filter((i) => i.human_label !== "unreviewed");
    default:
      return sorted;
  }
}

export interface Progress {
  total: number;
  remaining: number;
  done: number;
}

export function progress(state: QueueState): Progress {
  const total = state.items.length;
  const remaining = state.items.filter((i) => i.human_label === "unreviewed").length;
  return { total, remaining, done: total - remaining };
}

export function releaseEnabled(state: QueueState): boolean {
  return (
    progress(state).remaining === 0 &&
    !state.releaseInFlight &&
    (state.runState === "curated" || state.runState === "curation_open")
  );
}

export function selected(state: QueueState): ReviewItem | undefined {
  return visibleItems(state)[state.cursor];
}

// --- transitions ------------------------------------------------------------

export function loaded(
  state: QueueState,
  items: ReviewItem[],
  runState: string,
): QueueState {
  const visible = visibleItems({ ...state, items });
  return {
    ...state,
    items,
    runState,
    cursor: Math.min(state.cursor, Math.max(0, visible.length - 1)),
    lastError: null,
  };
}

export function moveCursor(state: QueueState, delta: number): QueueState {
  const max = Math.max(0, visibleItems(state).length - 1);
  const cursor = Math.min(max, Math.max(0, state.cursor + delta));
  return { ...state, cursor };
}

export function setFilter(state: QueueState, filter: FlagFilter): QueueState {
  return { ...state, filter, cursor: 0 };
}

/** Apply a label locally before the server confirms. */
export function labelOptimistic(
  state: QueueState,
  itemId: string,
  label: HumanLabel,
  edited?: string | null,
): QueueState {
  const item = state.items.find((i) => i.item_id === itemId);
  if (!item) return state;
  const pending = {
    ...state.pending,
    [itemId]: { human_label: item.human_label, revision: item.revision },
  };
  const items = state.items.map((i) =>
    i.item_id === itemId
      ? { ...i, human_label: label, edited_completion: edited ?? i.edited_completion }
      : i,
  );
  return { ...state, items, pending };
}

/** Server accepted: bump the revision and clear the pending slot. */
export function labelCommitted(state: QueueState, itemId: string): QueueState {
  const { [itemId]: _, ...pending } = state.pending;
  const items = state.items.map((i) =>
    i.item_id === itemId ? { ...i, revision: i.revision + 1 } : i,
  );
  return { ...state, items, pending };
}

/** Server rejected (e.g. stale revision): restore the previous label. */
export function labelRolledBack(
  state: QueueState,
  itemId: string,
  message: string,
): QueueState {
  const prior = state.pending[itemId];
  const { [itemId]: _, ...pending } = state.pending;
  const items = prior
    ? state.items.map((i) =>
        i.item_id === itemId ? { ...i, human_label: prior.human_label } : i,
      )
    : state.items;
  return { ...state, items, pending, lastError: message };
}

export function setError(state: QueueState, message: string | null): QueueState {
  return { ...state, lastError: message };
}

export function setReleaseInFlight(state: QueueState, value: boolean): QueueState {
  return { ...state, releaseInFlight: value };
}

// --- row projection (snapshot-tested; formatting only, no arithmetic) -------

export interface RowView {
  itemId: string;
  sentence: string;
  context: string;
  asls: string;
  ce: string;
  entities: number;
  relations: number;
  machineFlag: string;
  label: HumanLabel;
  edited: boolean;
}

export function rowView(item: ReviewItem): RowView {
  return {
    itemId: item.item_id,
    sentence: item.sentence_text,
    context: item.completion_context,
    asls: item.asls.toFixed(4),
    ce: item.cross_entropy.toFixed(4),
    entities: item.entity_count,
    relations: item.relation_count,
    machineFlag: item.machine_flag,
    label: item.human_label,
    edited: item.edited_completion != null,
  };
}
