/**
 * Paged, filterable record list. Selecting a record resets the pending
 * assignments on the session. Connectivity problems surface as a
 * non-blocking banner with a retry hook rather than wiping the view.
 */

import { ApiClient, pageCount } from "./api";
import { apiNumber } from "./format";
import type { RecordFilter, RecordSummary } from "./types";

export const PAGE_SIZE = 25;

export interface BrowserCallbacks {
  onSelect(record: RecordSummary): void;
  onError(message: string, retry: () => void): void;
}

export class RecordBrowser {
  page = 0;
  filter: RecordFilter = {};
  total = 0;

  constructor(
    private readonly api: ApiClient,
    private readonly container: HTMLElement,
    private readonly callbacks: BrowserCallbacks,
  ) {}

  get pages(): number {
    return pageCount(this.total, PAGE_SIZE);
  }

  async refresh(): Promise<void> {
    let records: RecordSummary[];
    try {
      const body = await this.api.records(PAGE_SIZE, this.page * PAGE_SIZE, this.filter);
      this.total = body.total;
      records = body.records;
    } catch (err) {
      this.callbacks.onError(String((err as Error).message), () => void this.refresh());
      return;
    }
    this.render(records);
  }

  setFilter(filter: RecordFilter): void {
    this.filter = filter;
    this.page = 0;
  }

  private render(records: RecordSummary[]): void {
    this.container.replaceChildren();
    if (this.total === 0) {
      const empty = document.createElement("p");
      empty.className = "empty-state";
      empty.textContent = "No records in the catalog.";
      this.container.appendChild(empty);
      return;
    }
    const list = document.createElement("ul");
    list.className = "record-list";
    for (const record of records) {
      const item = document.createElement("li");
      item.className = "record-item";
      item.dataset.recordId = String(record.id);
      item.textContent =
        `#${record.id} ${record.voltage} kVp / ${record.current} mAs / ` +
        `${record.agent} — SNR ${apiNumber(record.snr_obs)}`;
      item.addEventListener("click", () => this.callbacks.onSelect(record));
      list.appendChild(item);
    }
    this.container.appendChild(list);

    const pager = document.createElement("div");
    pager.className = "pager";
    pager.textContent = `page ${this.page + 1} / ${this.pages}`;
    this.container.appendChild(pager);
  }
}
