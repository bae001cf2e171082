/** Orchestrates the API against the pure queue model: optimistic labels
 * with rollback-and-refetch on conflict, and a single-flight release that
 * can never double-fire the advance call. */

import { ApiClient, ApiError } from "./api.js";
import {
  QueueState,
  initialState,
  labelCommitted,
  labelOptimistic,
  labelRolledBack,
  loaded,
  releaseEnabled,
  selected,
  setError,
  setReleaseInFlight,
} from "./state.js";
import type { HumanLabel } from "./types.js";

export type Listener = (state: QueueState) => void;

export class QueueController {
  private state: QueueState;
  private readonly api: ApiClient;
  private readonly listeners: Listener[] = [];
  /** counts every POST /advance actually issued; tests assert it never
   * exceeds one per release */
  advanceCalls = 0;

  constructor(api: ApiClient, runId: string) {
    this.api = api;
    this.state = initialState(runId);
  }

  getState(): QueueState {
    return this.state;
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private commit(next: QueueState): void {
    this.state = next;
    for (const listener of this.listeners) listener(next);
  }

  update(fn: (s: QueueState) => QueueState): void {
    this.commit(fn(this.state));
  }

  async refresh(): Promise<void> {
    const payload = await this.api.reviewItems(this.state.runId, "all");
    this.commit(loaded(this.state, payload.items, payload.state));
  }

  /** Label the item under the cursor; optimistic, rolled back on failure. */
  async labelSelected(label: HumanLabel, edited?: string | null): Promise<void> {
    const item = selected(this.state);
    if (!item || item.run_id !== this.state.runId) return;
    await this.label(item.item_id, label, edited);
  }

  async label(itemId: string, label: HumanLabel, edited?: string | null): Promise<void> {
    const item = this.state.items.find((i) => i.item_id === itemId);
    if (!item) return;
    const revision = item.revision;
    this.commit(labelOptimistic(this.state, itemId, label, edited));
    try {
      const resp = await this.api.postLabels(this.state.runId, [
        { item_id: itemId, human_label: label, edited_completion: edited ?? null, revision },
      ]);
      this.commit({ ...labelCommitted(this.state, itemId), runState: resp.state });
    } catch (err) {
      const message =
        err instanceof ApiError && err.code === "conflict"
          ? "label conflicted with another reviewer; queue refreshed"
          : String(err instanceof Error ? err.message : err);
      this.commit(labelRolledBack(this.state, itemId, message));
      if (err instanceof ApiError && err.code === "conflict") {
        await this.refresh(); // pick up the other reviewer's revisions
        this.commit(setError(this.state, message));
      }
    }
  }

  /** Advance the run to stage-2 submission. Disabled while items remain
   * unreviewed; conflicts re-fetch instead of re-firing. */
  async release(): Promise<boolean> {
    if (!releaseEnabled(this.state)) return false;
    this.commit(setReleaseInFlight(this.state, true));
    try {
      this.advanceCalls += 1;
      const summary = await this.api.advance(this.state.runId);
      this.commit({ ...this.state, runState: summary.state, releaseInFlight: false });
      return true;
    } catch (err) {
      this.commit(setReleaseInFlight(this.state, false));
      if (err instanceof ApiError && err.code === "conflict") {
        await this.refresh(); // someone else advanced; do not fire again
        this.commit(setError(this.state, "run state changed; queue refreshed"));
        return false;
      }
      this.commit(setError(this.state, String(err instanceof Error ? err.message : err)));
      return false;
    }
  }
}
