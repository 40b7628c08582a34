/** Record and document shapes shared across the explorer. */

export const SCHEMA_VERSION = "1";

export const RECORD_FIELDS = [
  "framework",
  "eps_spec",
  "fairness_spec",
  "eps_achieved",
  "max_disparity",
  "accuracy",
  "coverage",
  "seed",
] as const;

export type RecordField = (typeof RECORD_FIELDS)[number];
export type NumericField = Exclude<RecordField, "framework">;

export interface FrontierRecord {
  framework: string;
  eps_spec: number;
  fairness_spec: number;
  eps_achieved: number;
  max_disparity: number;
  accuracy: number;
  coverage: number;
  seed: number;
}

export interface FrontierMeta {
  schema_version: string;
  dataset?: string;
  generated_at?: string;
  master_seed?: number;
}

export interface FrontierDocument {
  meta: FrontierMeta;
  records: FrontierRecord[];
  frameworks: string[];
  /** records grouped by (framework, eps_spec, fairness_spec); several per cell when replicates differ */
  cells: Map<string, FrontierRecord[]>;
}

export type Objective = "accuracy" | "coverage";

export function cellKey(framework: string, eps: number, gamma: number): string {
  return `${framework}|${eps}|${gamma}`;
}
