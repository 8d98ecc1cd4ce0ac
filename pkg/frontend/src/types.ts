// Shapes mirrored from the operator service. The console never invents
// fields of its own; everything here is read off the wire.

export interface Envelope {
  id: number;
  ts: number;
  src: string;
  dst: string;
  kind: string;
  payload: Record<string, unknown>;
}

export interface Decision {
  human_text: string;
  kind: string;
  reason: string | null;
  request_id: number;
  tick: number;
}

export interface RunningInfo {
  task_name: string;
  version: number;
  priority: number;
  started_tick: number;
  request_id: number;
  fsm_state: string;
}

export interface HistoryEntry {
  request_id: number;
  task_name: string;
  outcome: string;
  tick: number;
}

/** Row of the store catalog: name, version, default priority. */
export type CatalogRow = [string, number, number];

export interface StatusDoc {
  tick: number;
  phase: string;
  conversation_open: boolean;
  running: RunningInfo | null;
  last_decision: Decision | null;
  tasks: CatalogRow[];
  history: HistoryEntry[];
}

export interface SubmitResponse {
  request_id: number;
  decision: Decision | null;
}
