/** Dominance, frontier extraction, and constrained best-record lookup.
 *
 * Deliberately re-implements the engine's logic rather than trusting it: the
 * page recomputes the frontier and the constrained optimum from the raw
 * records, and the test suite holds both implementations to field-for-field
 * agreement. Directions, input-order filtering, and the first-wins tie rule
 * in the query all match the command line.
 */

import { FrontierRecord, NumericField, Objective } from "./types";

export interface ObjectiveSpec {
  minimize: readonly NumericField[];
  maximize: readonly NumericField[];
}

export const DEFAULT_OBJECTIVES: ObjectiveSpec = {
  minimize: ["eps_achieved", "max_disparity"],
  maximize: ["accuracy", "coverage"],
};

/** True if a is at least as good as b everywhere and better somewhere. */
export function dominates(
  a: FrontierRecord,
  b: FrontierRecord,
  spec: ObjectiveSpec = DEFAULT_OBJECTIVES,
): boolean {
  let strictlyBetter = false;
  for (const name of spec.minimize) {
    if (a[name] > b[name]) return false;
    if (a[name] < b[name]) strictlyBetter = true;
  }
  for (const name of spec.maximize) {
    if (a[name] < b[name]) return false;
    if (a[name] > b[name]) strictlyBetter = true;
  }
  return strictlyBetter;
}

/** All records not dominated by any other, in input order. */
export function frontier(
  records: readonly FrontierRecord[],
  spec: ObjectiveSpec = DEFAULT_OBJECTIVES,
): FrontierRecord[] {
  return records.filter(
    (r, i) => !records.some((other, j) => j !== i && dominates(other, r, spec)),
  );
}

function queryKeyGreater(
  a: FrontierRecord,
  b: FrontierRecord,
  objective: Objective,
): boolean {
  if (a[objective] !== b[objective]) return a[objective] > b[objective];
  if (a.eps_achieved !== b.eps_achieved) return a.eps_achieved < b.eps_achieved;
  return a.max_disparity < b.max_disparity;
}

/** Best feasible record under privacy and fairness ceilings.
 *
 * Feasible means eps_achieved <= maxEps and max_disparity <= maxGamma. Among
 * feasible records the one maximizing the objective wins; ties resolve to
 * lower achieved epsilon, then lower disparity, then earliest position.
 * Returns null when nothing is feasible.
 */
export function frontierQuery(
  records: readonly FrontierRecord[],
  maxEps: number,
  maxGamma: number,
  objective: Objective = "coverage",
): FrontierRecord | null {
  let best: FrontierRecord | null = null;
  for (const r of records) {
    if (r.eps_achieved > maxEps || r.max_disparity > maxGamma) continue;
    if (best === null || queryKeyGreater(r, best, objective)) best = r;
  }
  return best;
}

/** Feasible records under the ceilings, in input order. */
export function feasibleRecords(
  records: readonly FrontierRecord[],
  maxEps: number,
  maxGamma: number,
): FrontierRecord[] {
  return records.filter(
    (r) => r.eps_achieved <= maxEps && r.max_disparity <= maxGamma,
  );
}
