/**
 * Acceptance contract: loading the default scenarios issues twelve
 * /whatif calls and renders twelve history rows whose displayed numbers
 * are string-identical to the API payloads. Runs entirely against a
 * mocked service.
 */

import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api";
import { SessionState } from "../src/state";
import { loadDefaultScenarios } from "../src/scenarioLoader";
import { renderHistoryStrip } from "../src/whatifPanel";
import {
  SCENARIOS_JSON,
  VOCAB_JSON,
  WHATIF_JSON,
  jsonResponse,
  literalOf,
  recordsJson,
} from "./fixtures";

function mockService(options: { failFrom?: number } = {}) {
  let whatifCalls = 0;
  const fetchMock = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    if (url.includes("/vocab")) return jsonResponse(VOCAB_JSON);
    if (url.includes("/records")) return jsonResponse(recordsJson());
    if (url.includes("/scenarios")) return jsonResponse(SCENARIOS_JSON);
    if (url.includes("/whatif") && init?.method === "POST") {
      const index = whatifCalls++;
      if (options.failFrom !== undefined && index >= options.failFrom) {
        return jsonResponse(`{"error": "service going down"}`, 503);
      }
      return jsonResponse(WHATIF_JSON[index]);
    }
    throw new Error(`unexpected request: ${url}`);
  });
  vi.stubGlobal("fetch", fetchMock);
  return fetchMock;
}

describe("default scenario batch", () => {
  beforeEach(() => {
    document.body.innerHTML = `<div id="history-strip"></div>`;
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("issues 12 whatif calls and renders 12 rows with verbatim numbers", async () => {
    const fetchMock = mockService();
    const api = new ApiClient("");
    const state = new SessionState(api);

    const entries = await loadDefaultScenarios(api, state);
    expect(entries).toHaveLength(12);

    const whatifCalls = fetchMock.mock.calls.filter(
      ([, init]) => (init as RequestInit | undefined)?.method === "POST",
    );
    expect(whatifCalls).toHaveLength(12);

    const strip = document.getElementById("history-strip")!;
    renderHistoryStrip(strip, state.history);
    const rows = strip.querySelectorAll(".history-row");
    expect(rows).toHaveLength(12);

    rows.forEach((row, index) => {
      const raw = WHATIF_JSON[index];
      const obs = row.querySelector(".history-snr_obs")!.textContent;
      const i = row.querySelector(".history-snr_i")!.textContent;
      const cf = row.querySelector(".history-snr_cf")!.textContent;
      expect(obs).toBe(literalOf(raw, "snr_obs"));
      expect(i).toBe(literalOf(raw, "snr_i"));
      expect(cf).toBe(literalOf(raw, "snr_cf"));
    });
  });

  it("keeps completed rows and marks the remainder when the service dies mid-batch", async () => {
    mockService({ failFrom: 7 });
    const api = new ApiClient("");
    const state = new SessionState(api);

    const entries = await loadDefaultScenarios(api, state);
    expect(entries).toHaveLength(12);
    expect(entries.slice(0, 7).every((e) => e.result !== null)).toBe(true);
    expect(entries.slice(7).every((e) => e.result === null && e.error)).toBe(true);

    const strip = document.getElementById("history-strip")!;
    renderHistoryStrip(strip, state.history);
    expect(strip.querySelectorAll(".history-row")).toHaveLength(12);
    expect(strip.querySelectorAll(".error-chip")).toHaveLength(5);
  });

  it("re-running replaces the previous batch instead of appending", async () => {
    mockService();
    const api = new ApiClient("");
    const state = new SessionState(api);

    await loadDefaultScenarios(api, state);
    // second run gets fresh responses from index 0 again
    mockService();
    await loadDefaultScenarios(api, state);
    expect(state.history).toHaveLength(12);
  });

  it("annotates scenarios whose selector matches no record", async () => {
    const fetchMock = vi.fn(async (input: RequestInfo | URL) => {
      const url = String(input);
      if (url.includes("/records"))
        return jsonResponse(
          `{"total": 0, "limit": 500, "offset": 0, "records": [], "checkpoint_hash": "x"}`,
        );
      if (url.includes("/scenarios")) return jsonResponse(SCENARIOS_JSON);
      throw new Error(`unexpected request: ${url}`);
    });
    vi.stubGlobal("fetch", fetchMock);

    const api = new ApiClient("");
    const state = new SessionState(api);
    const entries = await loadDefaultScenarios(api, state);
    expect(entries).toHaveLength(12);
    expect(entries.every((e) => e.error?.includes("no record matches"))).toBe(true);
  });
});
