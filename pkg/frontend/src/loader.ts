/** Parsing and validation of frontier.json documents.
 *
 * The file format is the contract between the command-line engine and this
 * page: a meta object carrying a schema version and a flat list of records.
 * Validation is strict about the fields the page computes with and silent
 * about anything extra, so future producers can add fields without breaking
 * deployed copies of the explorer.
 */

import {
  FrontierDocument,
  FrontierMeta,
  FrontierRecord,
  NumericField,
  RECORD_FIELDS,
  SCHEMA_VERSION,
  cellKey,
} from "./types";

export class LoadError extends Error {}

const NUMERIC_FIELDS = RECORD_FIELDS.filter(
  (f): f is NumericField => f !== "framework",
);

function parseRecord(raw: unknown, position: number): FrontierRecord {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new LoadError(`record ${position} is not an object`);
  }
  const obj = raw as Record<string, unknown>;
  const framework = obj["framework"];
  if (typeof framework !== "string" || framework === "") {
    throw new LoadError(`record ${position}: framework must be a nonempty string`);
  }
  const record: Partial<FrontierRecord> = { framework };
  for (const field of NUMERIC_FIELDS) {
    const value = obj[field];
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new LoadError(`record ${position}: ${field} must be a finite number`);
    }
    record[field] = value;
  }
  return record as FrontierRecord;
}

export function parseDocument(text: string): FrontierDocument {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new LoadError(`not valid JSON: ${(err as Error).message}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new LoadError("top level must be a JSON object");
  }
  const { meta, records } = doc as { meta?: unknown; records?: unknown };
  if (typeof meta !== "object" || meta === null || Array.isArray(meta)) {
    throw new LoadError("missing meta object");
  }
  const version = (meta as Record<string, unknown>)["schema_version"];
  if (version !== SCHEMA_VERSION) {
    throw new LoadError(
      `unsupported schema_version ${JSON.stringify(version)}; ` +
        `this page reads version "${SCHEMA_VERSION}"`,
    );
  }
  if (!Array.isArray(records)) {
    throw new LoadError("missing records array");
  }

  const parsed = records.map((raw, i) => parseRecord(raw, i));
  const frameworks = [...new Set(parsed.map((r) => r.framework))].sort();
  const cells = new Map<string, FrontierRecord[]>();
  for (const r of parsed) {
    const key = cellKey(r.framework, r.eps_spec, r.fairness_spec);
    const bucket = cells.get(key);
    if (bucket) {
      bucket.push(r);
    } else {
      cells.set(key, [r]);
    }
  }
  return {
    meta: meta as unknown as FrontierMeta,
    records: parsed,
    frameworks,
    cells,
  };
}
