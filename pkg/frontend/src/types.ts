export interface TaskItem {
  id: string;
  title: string;
  description: string;
  status: string;
  priority: string;
  notes: string;
  provenance: string;
  updated_ts: number;
}

export interface WikiPage {
  id: string;
  title: string;
  body: string;
  tags: string[];
  format: string;
  provenance: string;
  updated_ts: number;
}

export interface TimelineEntry {
  id: string;
  date: string;
  start_ts: number;
  duration_ms: number;
  tag: string;
  summary: string;
  details: string;
  provenance: string;
  updated_ts: number;
}

export interface Proposal {
  id: string;
  target: string;
  artifact_type: string;
  change: { artifact?: Record<string, unknown> };
  rationale: string;
  status: string;
  created_by: string;
  created_ts: number;
  decided_ts: number | null;
}

export interface DecisionResult {
  proposal: Proposal;
  artifact: Record<string, unknown> | null;
}

export interface RunAction {
  kind: string;
  target_id: number | null;
  argument: string | null;
  subgoals: string[];
}

export interface RunStep {
  index: number;
  thought: string;
  action: RunAction | null;
  observation_full: string;
  diff_from_prev: string;
  result_note: string;
}

export interface AgentRun {
  run_id: string;
  task_id: string;
  status: string;
  instruction: string;
  steps: RunStep[];
  answer: string | null;
  options: string[] | null;
  error?: string;
}

export interface RunHandle {
  run_id: string;
  status: string;
}

export interface RunListing {
  run_id: string;
  task_id: string;
  status: string;
}
