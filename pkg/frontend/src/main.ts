/** SPA wiring: vocab-driven selectors, browser, panel, history strip. */

import { ApiClient } from "./api";
import { RecordBrowser } from "./recordBrowser";
import { loadDefaultScenarios } from "./scenarioLoader";
import { SessionState } from "./state";
import { renderComparison, renderHistoryStrip } from "./whatifPanel";
import type { DoAssignments } from "./types";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showBanner(message: string, retry?: () => void): void {
  const banner = el<HTMLDivElement>("banner");
  banner.replaceChildren();
  banner.textContent = message;
  banner.classList.add("visible");
  if (retry) {
    const button = document.createElement("button");
    button.textContent = "retry";
    button.addEventListener("click", () => {
      banner.classList.remove("visible");
      retry();
    });
    banner.appendChild(button);
  }
}

async function boot(): Promise<void> {
  const api = new ApiClient("");
  const state = new SessionState(api);
  const browser = new RecordBrowser(api, el("record-browser"), {
    onSelect: (record) => {
      state.selectRecord(record.id);
      el<HTMLSpanElement>("selected-record").textContent =
        `#${record.id} (${record.voltage} kVp, ${record.current} mAs, ${record.agent})`;
      renderComparison(el("whatif-panel"), null);
    },
    onError: showBanner,
  });

  let vocab;
  try {
    vocab = await api.vocab();
  } catch (err) {
    showBanner(`service unreachable: ${(err as Error).message}`, () => void boot());
    return;
  }

  const selectors: Array<[keyof DoAssignments, Array<string | number>]> = [
    ["voltage", vocab.vocab.voltage],
    ["current", vocab.vocab.current],
    ["agent", vocab.vocab.agent],
  ];
  for (const [field, levels] of selectors) {
    const select = el<HTMLSelectElement>(`do-${field}`);
    select.replaceChildren(new Option("(no assignment)", ""));
    for (const level of levels) select.appendChild(new Option(String(level), String(level)));
    select.addEventListener("change", () => {
      const raw = select.value;
      if (raw === "") state.setAssignment(field, undefined);
      else state.setAssignment(field, field === "agent" ? raw : Number(raw));
    });

    const filter = el<HTMLSelectElement>(`filter-${field}`);
    filter.replaceChildren(new Option("(any)", ""));
    for (const level of levels) filter.appendChild(new Option(String(level), String(level)));
    filter.addEventListener("change", () => {
      const next = { ...browser.filter };
      if (filter.value === "") delete next[field];
      else (next as Record<string, unknown>)[field] = field === "agent" ? filter.value : Number(filter.value);
      browser.setFilter(next);
      void browser.refresh();
    });
  }

  el<HTMLButtonElement>("run-whatif").addEventListener("click", async () => {
    const entry = await state.submit();
    if (entry?.result) renderComparison(el("whatif-panel"), entry.result);
    else if (entry?.error) showBanner(entry.error);
    renderHistoryStrip(el("history-strip"), state.history);
  });

  el<HTMLButtonElement>("load-scenarios").addEventListener("click", async () => {
    try {
      await loadDefaultScenarios(api, state);
    } catch (err) {
      showBanner(`scenario batch failed: ${(err as Error).message}`);
    }
    renderHistoryStrip(el("history-strip"), state.history);
  });

  await browser.refresh();
}

if (typeof document !== "undefined" && document.getElementById("record-browser")) {
  void boot();
}
