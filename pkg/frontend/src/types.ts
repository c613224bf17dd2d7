/** Payload shapes of the documented /api contract. */

export interface AssociationTable {
  target: string | null;
  rows: Record<string, string[]>;
  unresolved: string[];
  notes: string[];
}

export interface TraceEntry {
  iteration: number;
  broad_table: AssociationTable | null;
  broad_selection: string | null;
  feature_table: AssociationTable | null;
  feature_selection: string[] | null;
  label: string;
  graph_uninformed: boolean;
  notes: string[];
}

export interface AnnotationResultPayload {
  label: string;
  votes: Record<string, number>;
  mode: string;
  trace: TraceEntry[];
}

export interface JobRequestPayload {
  markers: string[];
  tissues: string[];
  global: boolean;
  iterations: number;
  mode: string;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobPayload {
  job_id: string;
  state: JobState;
  request: JobRequestPayload;
  result: AnnotationResultPayload | null;
  error: string | null;
  events: number;
}

export interface JobEvent {
  seq: number;
  job_id: string;
  iteration: number;
  task: string;
  status: string;
  summary: string;
  timestamp: number;
  terminal: boolean;
}

export interface AnnotateBody {
  markers: string[];
  tissues: string[];
  global: boolean;
  iterations: number;
  mode: string;
}

/** Raw input-field values; parsing happens at submit time. */
export interface FormState {
  markersText: string;
  tissuesText: string;
  global: boolean;
  iterations: number;
  mode: string;
}
