/**
 * Thin client over the prediction service.
 *
 * Tracks the checkpoint hash carried on every response: when a response
 * reports a different hash than the cached vocabulary, the vocab cache is
 * invalidated so the next consumer refreshes it before issuing further
 * queries.
 */

import type {
  DoAssignments,
  RecordFilter,
  RecordsResponse,
  RecordSummary,
  ScenariosResponse,
  VocabResponse,
  WhatIfResponse,
} from "./types";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.error === "string") message = body.error;
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, message);
}

export class ApiClient {
  private vocabCache: VocabResponse | null = null;
  private knownHash: string | null = null;

  constructor(private readonly base: string = "") {}

  /** Hash of the checkpoint behind the cached vocab, if any. */
  get checkpointHash(): string | null {
    return this.knownHash;
  }

  private observeHash(hash: string): void {
    if (this.knownHash !== null && hash !== this.knownHash) {
      // model swapped underneath us: cached levels may be stale
      this.vocabCache = null;
    }
    this.knownHash = hash;
  }

  private async get<T extends { checkpoint_hash: string }>(path: string): Promise<T> {
    const response = await fetch(`${this.base}${path}`);
    if (!response.ok) throw await parseError(response);
    const body = (await response.json()) as T;
    this.observeHash(body.checkpoint_hash);
    return body;
  }

  async vocab(force = false): Promise<VocabResponse> {
    if (!force && this.vocabCache) return this.vocabCache;
    const body = await this.get<VocabResponse>("/vocab");
    this.vocabCache = body;
    return body;
  }

  /** True when a later response invalidated the cached vocabulary. */
  get vocabStale(): boolean {
    return this.vocabCache === null && this.knownHash !== null;
  }

  async records(limit: number, offset: number, filter?: RecordFilter): Promise<RecordsResponse> {
    const body = await this.get<RecordsResponse>(`/records?limit=${limit}&offset=${offset}`);
    if (filter && Object.keys(filter).length) {
      const records = body.records.filter((r) => matchesFilter(r, filter));
      return { ...body, records };
    }
    return body;
  }

  /** Page through the catalog; used by the scenario loader for lookup. */
  async allRecords(pageSize = 500): Promise<RecordSummary[]> {
    const out: RecordSummary[] = [];
    let offset = 0;
    for (;;) {
      const page = await this.get<RecordsResponse>(
        `/records?limit=${pageSize}&offset=${offset}`,
      );
      out.push(...page.records);
      offset += page.records.length;
      if (offset >= page.total || page.records.length === 0) break;
    }
    return out;
  }

  async scenarios(): Promise<ScenariosResponse> {
    return this.get<ScenariosResponse>("/scenarios");
  }

  async whatif(
    recordId: number,
    assignments: DoAssignments,
    signal?: AbortSignal,
  ): Promise<WhatIfResponse> {
    if (this.vocabStale) {
      // contract: a hash mismatch forces a vocab refresh before the next query
      await this.vocab(true);
    }
    const response = await fetch(`${this.base}/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ record_id: recordId, do: assignments }),
      signal,
    });
    if (!response.ok) throw await parseError(response);
    const body = (await response.json()) as WhatIfResponse;
    this.observeHash(body.checkpoint_hash);
    return body;
  }
}

export function matchesFilter(record: RecordSummary, filter: RecordFilter): boolean {
  if (filter.voltage !== undefined && record.voltage !== filter.voltage) return false;
  if (filter.current !== undefined && record.current !== filter.current) return false;
  if (filter.agent !== undefined && record.agent !== filter.agent) return false;
  return true;
}

export function pageCount(total: number, pageSize: number): number {
  return Math.max(1, Math.ceil(total / pageSize));
}
