/** Saved constraint scenarios and their side-by-side comparison. */

import { FrontierRecord, Objective } from "./types";

export interface Scenario {
  maxEps: number;
  maxGamma: number;
  objective: Objective;
  pinned: FrontierRecord | null;
}

export interface ScenarioDeltas {
  coverage: number | null;
  accuracy: number | null;
  disparity: number | null;
}

function round6(x: number): number {
  return Math.round(x * 1e6) / 1e6;
}

/** B minus A on the pinned records; null entries when either side is unpinned. */
export function deltas(a: Scenario, b: Scenario): ScenarioDeltas {
  if (a.pinned === null || b.pinned === null) {
    return { coverage: null, accuracy: null, disparity: null };
  }
  return {
    coverage: round6(b.pinned.coverage - a.pinned.coverage),
    accuracy: round6(b.pinned.accuracy - a.pinned.accuracy),
    disparity: round6(b.pinned.max_disparity - a.pinned.max_disparity),
  };
}
