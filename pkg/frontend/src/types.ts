// Shapes of the trial-service JSON responses the console consumes.
// The console never derives these numbers itself; every rendered value is
// traceable to one of these fields.

export interface RecommendationView {
  patient_id: number;
  arm: number;
  recommended_arm: number;
  phase: "run_in" | "adaptive" | "stopped";
  allocation_mode: string;
  q: Record<string, number>;
  posterior_snapshot: string;
  seq: number;
}

export interface OutcomeDelta {
  patient_id: number;
  dropped_arms: number[];
  stopped: boolean;
  stop_reason: string | null;
  active_arms: number[];
  seq: number;
}

export interface PendingPatient {
  patient_id: number;
  arm: number;
}

export interface TrialStateView {
  trial_id: string;
  phase: "run_in" | "adaptive" | "stopped";
  stop_reason: string | null;
  n_enrolled: number;
  n_observed: number;
  n_max: number;
  n_runin: number;
  arm_universe: number[];
  active_arms: number[];
  drops: { arm: number; at_observed: number }[];
  pending_outcomes: PendingPatient[];
  marker_labels: string[];
  n_markers: number;
  biomarker_ranges: [number, number][] | null;
  allocation_mode: string;
  posterior_snapshot: string;
  seq: number;
}

export interface PartitionLeaf {
  kind: "leaf";
  leaf_index: number;
  recommended_arm: number;
  post_mean: Record<string, number>;
  counts: Record<string, number>;
  successes: Record<string, number>;
  n_patients: number;
}

export interface PartitionSplit {
  kind: "split";
  marker: number;
  threshold: number;
  lower: PartitionNode;
  upper: PartitionNode;
}

export type PartitionNode = PartitionLeaf | PartitionSplit;

export interface PartitionView {
  partition: PartitionNode;
  layout: string;
  objective: string;
  objective_value: number;
  stop_reason: string | null;
  stop_size: number;
  n_enrolled: number;
  n_observed: number;
  drops: { arm: number; at_observed: number }[];
  disposition: {
    arm: number;
    active: boolean;
    dropped_at: number | null;
    n_assigned: number;
    n_responses: number;
  }[];
  posterior_snapshot: string;
}

export interface PredictiveView {
  q: Record<string, number>;
  active_arms: number[];
  posterior_snapshot: string;
}

export interface TrialEvent {
  seq: number;
  ts: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface EventsPage {
  events: TrialEvent[];
  last_seq: number;
}

export interface ServiceError {
  error: string;
  detail: string;
}
