import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, matchesFilter, pageCount } from "../src/api";
import { HASH_A, VOCAB_JSON, WHATIF_JSON, jsonResponse, recordsJson } from "./fixtures";

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("pagination arithmetic", () => {
  it("3092 records at page size 25 gives 124 pages", () => {
    expect(pageCount(3092, 25)).toBe(124);
  });

  it("empty catalog still renders one page", () => {
    expect(pageCount(0, 25)).toBe(1);
  });
});

describe("record filtering", () => {
  const record = { id: 1, voltage: 100, current: 215, agent: "Iodine", snr_obs: 3.5 };

  it("matches on every provided field", () => {
    expect(matchesFilter(record, { agent: "Iodine" })).toBe(true);
    expect(matchesFilter(record, { agent: "BiNPs-50nm" })).toBe(false);
    expect(matchesFilter(record, { voltage: 100, current: 215 })).toBe(true);
    expect(matchesFilter(record, {})).toBe(true);
  });
});

describe("checkpoint-hash tracking", () => {
  it("a hash change invalidates the vocab cache and forces a refresh", async () => {
    const hashB = "b".repeat(64);
    const calls: string[] = [];
    const fetchMock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
      const url = String(input);
      calls.push(`${init?.method ?? "GET"} ${url}`);
      if (url.includes("/vocab")) return jsonResponse(VOCAB_JSON.replace(HASH_A, hashB));
      if (url.includes("/records")) return jsonResponse(recordsJson());
      if (url.includes("/whatif")) return jsonResponse(WHATIF_JSON[0]);
      throw new Error(`unexpected ${url}`);
    });
    vi.stubGlobal("fetch", fetchMock);

    const api = new ApiClient("");
    await api.records(25, 0); // hash A observed
    expect(api.checkpointHash).toBe(HASH_A);

    // swap: the next vocab response carries hash B
    await api.vocab();
    expect(api.checkpointHash).toBe(hashB);

    // a later response reverting to hash A marks the cache stale again
    await api.records(25, 0);
    expect(api.vocabStale).toBe(true);

    // the next query must refresh the vocab before POSTing
    await api.whatif(0, { agent: "Iodine" });
    const vocabThenWhatif = calls.slice(-2);
    expect(vocabThenWhatif[0]).toContain("GET /vocab");
    expect(vocabThenWhatif[1]).toContain("POST /whatif");
  });

  it("keeps the cached vocab while the hash is unchanged", async () => {
    const fetchMock = vi.fn(async (input: RequestInfo | URL) => {
      const url = String(input);
      if (url.includes("/vocab")) return jsonResponse(VOCAB_JSON);
      throw new Error(`unexpected ${url}`);
    });
    vi.stubGlobal("fetch", fetchMock);
    const api = new ApiClient("");
    await api.vocab();
    await api.vocab();
    expect(fetchMock).toHaveBeenCalledTimes(1);
  });
});

describe("error surfaces", () => {
  it("propagates the service's error message and status", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn(async () => jsonResponse(`{"error": "unknown record id: 99"}`, 404)),
    );
    const api = new ApiClient("");
    await expect(api.whatif(99, {})).rejects.toMatchObject({
      status: 404,
      message: "unknown record id: 99",
    });
  });
});
