/** Payload shapes of the session-service JSON API. */

export interface TensorInfo {
  name: string;
  shape: number[];
  lb: number;
  ub: number;
}

export interface Binding {
  tensor: string;
  index: number[];
  value: number;
}

export interface StatsPayload {
  bias_size: number;
  learned_size: number;
  queries_total: number;
  queries_by_layer: Record<string, number>;
  max_wait_seconds: number;
}

export interface QueryPayload {
  query_id: number;
  bindings: Binding[];
  layer: "top" | "findscope" | "findc";
  stats: StatsPayload;
}

export interface SessionPayload {
  id: string;
  phase: Phase;
  tensors: TensorInfo[];
  stats: StatsPayload;
  error?: string;
}

export interface AnswerResult {
  phase: Phase;
  candidates_removed: number;
  constraints_learned: number;
  stats: StatsPayload;
}

export interface ConstraintDict {
  relation: string;
  scope: string[];
  param?: number;
}

export interface LearnedRow {
  constraint: ConstraintDict;
  text: string;
  probability?: number;
}

export type Phase = "GENERATING" | "AWAITING_ANSWER" | "CONVERGED" | "COLLAPSED";

export interface ApiErrorBody {
  code: string;
  message: string;
}
