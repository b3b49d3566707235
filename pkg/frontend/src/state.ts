/**
 * Session state: the selected factual record, pending do-assignments,
 * and the append-only query history (bounded; oldest entries evicted).
 * One what-if query may be in flight at a time; submitting a new one
 * cancels the pending request.
 */

import { ApiClient } from "./api";
import type { DoAssignments, HistoryEntry, WhatIfResponse } from "./types";

export const HISTORY_LIMIT = 200;

export class SessionState {
  selectedRecordId: number | null = null;
  pending: DoAssignments = {};
  history: HistoryEntry[] = [];
  private inflight: AbortController | null = null;

  constructor(readonly api: ApiClient) {}

  selectRecord(recordId: number): void {
    this.selectedRecordId = recordId;
    this.pending = {};
  }

  setAssignment(target: keyof DoAssignments, value: number | string | undefined): void {
    if (value === undefined || value === "") {
      delete this.pending[target];
    } else {
      (this.pending as Record<string, unknown>)[target] = value;
    }
  }

  private push(entry: HistoryEntry): HistoryEntry {
    this.history.push(entry);
    if (this.history.length > HISTORY_LIMIT) {
      this.history.splice(0, this.history.length - HISTORY_LIMIT);
    }
    return entry;
  }

  /** Run the pending query; cancels any in-flight one. */
  async submit(): Promise<HistoryEntry | null> {
    if (this.selectedRecordId === null) return null;
    if (this.inflight) this.inflight.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const recordId = this.selectedRecordId;
    const assignments = { ...this.pending };
    try {
      const result = await this.api.whatif(recordId, assignments, controller.signal);
      return this.push(this.entryFor(recordId, assignments, result, null));
    } catch (err) {
      if ((err as Error).name === "AbortError") return null;
      return this.push(this.entryFor(recordId, assignments, null, String((err as Error).message)));
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  private entryFor(
    recordId: number | null,
    assignments: DoAssignments,
    result: WhatIfResponse | null,
    error: string | null,
  ): HistoryEntry {
    return { timestamp: Date.now(), recordId, assignments, result, error };
  }

  /** Replace the whole history with a freshly executed batch. */
  replaceHistory(entries: HistoryEntry[]): void {
    this.history = entries.slice(-HISTORY_LIMIT);
  }

  appendEntry(
    recordId: number | null,
    assignments: DoAssignments,
    result: WhatIfResponse | null,
    error: string | null,
  ): HistoryEntry {
    return this.push(this.entryFor(recordId, assignments, result, error));
  }
}
