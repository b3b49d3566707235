/**
 * Raw JSON fixtures standing in for the prediction service.
 *
 * Responses are kept as literal strings so tests can assert that the UI
 * renders numbers character-for-character as the API serialized them
 * (the service emits floats at 6 significant digits).
 */

export const HASH_A = "a".repeat(64);

export const VOCAB_JSON = `{
  "vocab": {
    "voltage": [80, 100, 120, 140],
    "current": [215, 430],
    "agent": ["BiNPs-100nm", "BiNPs-50nm", "Iodine"]
  },
  "checkpoint_hash": "${HASH_A}"
}`;

interface Cell {
  id: number;
  voltage: number;
  current: number;
  agent: string;
  snr: string;
}

export const CATALOG: Cell[] = [
  { id: 0, voltage: 100, current: 215, agent: "BiNPs-50nm", snr: "-712.183" },
  { id: 1, voltage: 80, current: 215, agent: "Iodine", snr: "-0.0687" },
  { id: 2, voltage: 120, current: 430, agent: "BiNPs-100nm", snr: "-0.3379" },
  { id: 3, voltage: 140, current: 430, agent: "Iodine", snr: "2.4024" },
  { id: 4, voltage: 100, current: 430, agent: "BiNPs-100nm", snr: "5.6797" },
];

export function recordsJson(): string {
  const records = CATALOG.map(
    (c) =>
      `{"id": ${c.id}, "voltage": ${c.voltage}, "current": ${c.current}, ` +
      `"agent": "${c.agent}", "snr_obs": ${c.snr}}`,
  ).join(", ");
  return `{"total": ${CATALOG.length}, "limit": 500, "offset": 0, "records": [${records}], "checkpoint_hash": "${HASH_A}"}`;
}

export const SCENARIOS_JSON = `{
  "scenarios": [
    {"voltage": 100, "current": 215, "agent": "BiNPs-50nm", "do": {"agent": "Iodine"}},
    {"voltage": 100, "current": 215, "agent": "BiNPs-50nm", "do": {"agent": "BiNPs-100nm"}},
    {"voltage": 80, "current": 215, "agent": "Iodine", "do": {"voltage": 100}},
    {"voltage": 80, "current": 215, "agent": "Iodine", "do": {"voltage": 120}},
    {"voltage": 80, "current": 215, "agent": "Iodine", "do": {"voltage": 140}},
    {"voltage": 120, "current": 430, "agent": "BiNPs-100nm", "do": {"current": 215, "agent": "Iodine"}},
    {"voltage": 140, "current": 430, "agent": "Iodine", "do": {"agent": "BiNPs-100nm"}},
    {"voltage": 140, "current": 430, "agent": "Iodine", "do": {"agent": "BiNPs-50nm"}},
    {"voltage": 100, "current": 430, "agent": "BiNPs-100nm", "do": {"voltage": 80}},
    {"voltage": 100, "current": 430, "agent": "BiNPs-100nm", "do": {"voltage": 120}},
    {"voltage": 100, "current": 430, "agent": "BiNPs-100nm", "do": {"voltage": 140}},
    {"voltage": 100, "current": 430, "agent": "BiNPs-100nm", "do": {"current": 215}}
  ],
  "checkpoint_hash": "${HASH_A}"
}`;

/** Twelve what-if payloads with distinctive 6-significant-digit values. */
export const WHATIF_JSON: string[] = [
  whatif(0, "-712.183", "14.5573", "-22.9729", `{"agent": "Iodine"}`),
  whatif(0, "-712.183", "71.2163", "-78.2847", `{"agent": "BiNPs-100nm"}`),
  whatif(1, "-0.0687", "14.7907", "7.3392", `{"voltage": 100}`),
  whatif(1, "-0.0687", "2.3397", "-4.0881", `{"voltage": 120}`),
  whatif(1, "-0.0687", "-7.536", "-1.7814", `{"voltage": 140}`),
  whatif(2, "-0.3379", "0.9968", "31.2036", `{"current": 215, "agent": "Iodine"}`),
  whatif(3, "2.4024", "130.507", "-57.0524", `{"agent": "BiNPs-100nm"}`),
  whatif(3, "2.4024", "-447.449", "-297.513", `{"agent": "BiNPs-50nm"}`),
  whatif(4, "5.6797", "14.0446", "38.7251", `{"voltage": 80}`),
  whatif(4, "5.6797", "113.086", "119.997", `{"voltage": 120}`),
  whatif(4, "5.6797", "114.168", "105.793", `{"voltage": 140}`),
  whatif(4, "5.6797", "67.2654", "102.074", `{"current": 215}`),
];

function whatif(recordId: number, obs: string, i: string, cf: string, doBlock: string): string {
  const cell = CATALOG[recordId];
  return (
    `{"record_id": ${recordId}, ` +
    `"record": {"voltage": ${cell.voltage}, "current": ${cell.current}, "agent": "${cell.agent}", "snr": ${cell.snr}}, ` +
    `"do": ${doBlock}, ` +
    `"snr_obs": ${obs}, "snr_i": ${i}, "snr_cf": ${cf}, ` +
    `"checkpoint_hash": "${HASH_A}"}`
  );
}

/** Pull the literal digits of a field out of a raw JSON fixture. */
export function literalOf(raw: string, field: string): string {
  const match = raw.match(new RegExp(`"${field}":\\s*(-?[0-9][^,}\\s]*)`));
  if (!match) throw new Error(`field ${field} not found in fixture`);
  return match[1];
}

export function jsonResponse(body: string, status = 200): Response {
  return new Response(body, {
    status,
    headers: { "content-type": "application/json" },
  });
}
