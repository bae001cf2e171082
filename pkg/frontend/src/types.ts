/** Payload shapes of the /v1 review API (see docs/api.md). The UI never
 * computes metric values; every number rendered comes from these fields. */

export type HumanLabel = "unreviewed" | "hallucination" | "creative" | "correct";

export interface ReviewItem {
  item_id: string;
  run_id: string;
  record_index: number;
  sentence_index: number;
  sentence_text: string;
  completion_context: string;
  asls: number;
  cross_entropy: number;
  entity_count: number;
  relation_count: number;
  machine_flag: string;
  pair_index: number | null;
  human_label: HumanLabel;
  edited_completion: string | null;
  revision: number;
}

export interface RunSummary {
  run_id: string;
  state: string;
  created_at: string;
  updated_at: string;
  stage1_model: string | null;
  stage2_model: string | null;
  eval_summary: Record<string, number>;
  remaining_unreviewed: number;
  review_item_count: number;
}

export interface ReviewItemsResponse {
  run_id: string;
  state: string;
  items: ReviewItem[];
}

export interface LabelsResponse {
  run_id: string;
  remaining: number;
  state: string;
  applied: number;
}

export interface LabelEntry {
  item_id: string;
  human_label: HumanLabel;
  edited_completion?: string | null;
  revision: number;
}

export interface ApiErrorBody {
  error: {
    code: "bad_request" | "not_found" | "conflict" | "provider_unavailable" | "internal";
    message: string;
    detail: Record<string, unknown>;
  };
}
