/**
 * Comparison panel: observed / intervened / counterfactual values with
 * uncertainty bars and delta badges, plus the history strip rendered as a
 * mini heatmap (one row per query, columns obs / i / cf).
 */

import { apiNumber, deltaBadge, describeAssignments } from "./format";
import type { HistoryEntry, WhatIfResponse } from "./types";

const COLUMNS: Array<{ key: "snr_obs" | "snr_i" | "snr_cf"; label: string; std: "std_obs" | "std_i" | "std_cf" }> = [
  { key: "snr_obs", label: "observed", std: "std_obs" },
  { key: "snr_i", label: "intervened", std: "std_i" },
  { key: "snr_cf", label: "counterfactual", std: "std_cf" },
];

function valueCell(result: WhatIfResponse, column: (typeof COLUMNS)[number]): HTMLElement {
  const cell = document.createElement("div");
  cell.className = `whatif-cell whatif-${column.key}`;

  const label = document.createElement("div");
  label.className = "cell-label";
  label.textContent = column.label;
  cell.appendChild(label);

  const value = document.createElement("div");
  value.className = "cell-value";
  value.textContent = apiNumber(result[column.key]);
  cell.appendChild(value);

  if (column.key !== "snr_obs") {
    const badge = document.createElement("span");
    badge.className = "delta-badge";
    badge.textContent = deltaBadge(result[column.key], result.snr_obs);
    cell.appendChild(badge);
  }

  if (result.uncertainty) {
    const std = result.uncertainty[column.std];
    const bar = document.createElement("div");
    bar.className = "uncertainty-bar";
    bar.title = `ensemble std ${apiNumber(std)}`;
    const magnitude = Math.max(Math.abs(result[column.key]), 1e-9);
    bar.style.width = `${Math.min(100, (std / magnitude) * 100)}%`;
    cell.appendChild(bar);
  }
  return cell;
}

export function renderComparison(container: HTMLElement, result: WhatIfResponse | null): void {
  container.replaceChildren();
  if (!result) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "Select a record and run a what-if query.";
    container.appendChild(empty);
    return;
  }
  const row = document.createElement("div");
  row.className = "whatif-row";
  for (const column of COLUMNS) row.appendChild(valueCell(result, column));
  container.appendChild(row);

  const caption = document.createElement("p");
  caption.className = "whatif-caption";
  caption.textContent = describeAssignments(result.do as Record<string, unknown>);
  container.appendChild(caption);
}

function heatColor(value: number, lo: number, hi: number): string {
  if (!Number.isFinite(value)) return "#999";
  const span = hi - lo || 1;
  const t = Math.min(1, Math.max(0, (value - lo) / span));
  const hue = 240 - 240 * t; // blue (low) to red (high)
  return `hsl(${hue}, 70%, 55%)`;
}

export function renderHistoryStrip(container: HTMLElement, history: HistoryEntry[]): void {
  container.replaceChildren();
  const values = history
    .filter((h) => h.result)
    .flatMap((h) => [h.result!.snr_obs, h.result!.snr_i, h.result!.snr_cf]);
  const lo = values.length ? Math.min(...values) : 0;
  const hi = values.length ? Math.max(...values) : 1;

  for (const entry of history) {
    const row = document.createElement("div");
    row.className = "history-row";
    row.dataset.scenario = describeAssignments(entry.assignments as Record<string, unknown>);

    if (entry.result) {
      for (const column of COLUMNS) {
        const cell = document.createElement("span");
        cell.className = `history-cell history-${column.key}`;
        const value = entry.result[column.key];
        cell.textContent = apiNumber(value);
        cell.style.backgroundColor = heatColor(value, lo, hi);
        row.appendChild(cell);
      }
    } else {
      const chip = document.createElement("span");
      chip.className = "history-cell error-chip";
      chip.textContent = entry.error ?? "failed";
      row.appendChild(chip);
    }
    container.appendChild(row);
  }
}
