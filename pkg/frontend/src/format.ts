/**
 * Number display helpers.
 *
 * SNR values coming from the API are already rounded to 6 significant
 * digits server-side; they must be displayed verbatim, so the only legal
 * transform is the canonical number-to-string conversion of the parsed
 * JSON value. Deltas and uncertainty widths are presentation-layer
 * derivations and are labelled as such.
 */

/** Verbatim rendering of an API-provided number. */
export function apiNumber(value: number): string {
  return String(value);
}

/** Signed presentation delta against the observed value, 2 decimals. */
export function deltaBadge(value: number, baseline: number): string {
  const delta = value - baseline;
  if (!Number.isFinite(delta)) return "?";
  const sign = delta > 0 ? "+" : "";
  return `${sign}${delta.toFixed(2)}`;
}

export function describeAssignments(assignments: Record<string, unknown>): string {
  const short: Record<string, string> = { voltage: "v", current: "t", agent: "a" };
  const parts = Object.entries(assignments)
    .filter(([, v]) => v !== undefined && v !== null && v !== "")
    .map(([k, v]) => `${short[k] ?? k}=${v}`);
  return parts.length ? `do(${parts.join(", ")})` : "observed";
}
