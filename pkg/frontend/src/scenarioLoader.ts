/**
 * Default-scenario batch runner.
 *
 * Fetches GET /scenarios, resolves each (voltage, current, agent)
 * selector to a catalog record, and executes the what-if queries
 * sequentially. Failed rows are annotated in place without aborting the
 * remainder; re-running replaces the previous batch in the history.
 */

import { ApiClient } from "./api";
import { SessionState } from "./state";
import type { HistoryEntry, RecordSummary, Scenario } from "./types";

function findRecord(records: RecordSummary[], scenario: Scenario): RecordSummary | undefined {
  return records.find(
    (r) =>
      r.voltage === scenario.voltage &&
      r.current === scenario.current &&
      r.agent === scenario.agent,
  );
}

export async function loadDefaultScenarios(
  api: ApiClient,
  state: SessionState,
): Promise<HistoryEntry[]> {
  const { scenarios } = await api.scenarios();
  const records = await api.allRecords();

  const entries: HistoryEntry[] = [];
  for (const scenario of scenarios) {
    const record = findRecord(records, scenario);
    if (!record) {
      entries.push({
        timestamp: Date.now(),
        recordId: null,
        assignments: scenario.do,
        result: null,
        error: `no record matches ${scenario.voltage}/${scenario.current}/${scenario.agent}`,
      });
      continue;
    }
    try {
      const result = await api.whatif(record.id, scenario.do);
      entries.push({
        timestamp: Date.now(),
        recordId: record.id,
        assignments: scenario.do,
        result,
        error: null,
      });
    } catch (err) {
      entries.push({
        timestamp: Date.now(),
        recordId: record.id,
        assignments: scenario.do,
        result: null,
        error: String((err as Error).message),
      });
    }
  }
  state.replaceHistory(entries);
  return entries;
}
