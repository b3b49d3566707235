/** Wire types for the JSON API. */

export interface VocabResponse {
  vocab: {
    voltage: number[];
    current: number[];
    agent: string[];
  };
  checkpoint_hash: string;
}

export interface RecordSummary {
  id: number;
  voltage: number;
  current: number;
  agent: string;
  snr_obs: number;
}

export interface RecordsResponse {
  total: number;
  limit: number;
  offset: number;
  records: RecordSummary[];
  checkpoint_hash: string;
}

export interface DoAssignments {
  voltage?: number;
  current?: number;
  agent?: string;
}

export interface Uncertainty {
  std_obs: number;
  std_i: number;
  std_cf: number;
}

export interface WhatIfResponse {
  record_id: number;
  record: { voltage: number; current: number; agent: string; snr: number };
  do: DoAssignments;
  snr_obs: number;
  snr_i: number;
  snr_cf: number;
  uncertainty?: Uncertainty;
  checkpoint_hash: string;
}

export interface Scenario {
  voltage: number;
  current: number;
  agent: string;
  do: DoAssignments;
}

export interface ScenariosResponse {
  scenarios: Scenario[];
  checkpoint_hash: string;
}

export interface HistoryEntry {
  timestamp: number;
  recordId: number | null;
  assignments: DoAssignments;
  result: WhatIfResponse | null;
  error: string | null;
}

export type RecordFilter = Partial<Pick<RecordSummary, "voltage" | "current" | "agent">>;
