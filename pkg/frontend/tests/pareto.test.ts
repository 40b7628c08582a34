import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parseDocument } from "../src/loader";
import {
  dominates,
  feasibleRecords,
  frontier,
  frontierQuery,
} from "../src/pareto";
import { FrontierRecord, RECORD_FIELDS } from "../src/types";

const fixtureText = readFileSync(
  new URL("./fixtures/frontier.json", import.meta.url),
  "utf8",
);
const cliFrontier: Record<string, unknown>[] = JSON.parse(
  readFileSync(new URL("./fixtures/cli_frontier.json", import.meta.url), "utf8"),
);
const doc = parseDocument(fixtureText);

function rec(overrides: Partial<FrontierRecord>): FrontierRecord {
  return {
    framework: "fairpate",
    eps_spec: 1.0,
    fairness_spec: 0.05,
    eps_achieved: 0.9,
    max_disparity: 0.04,
    accuracy: 0.8,
    coverage: 0.5,
    seed: 0,
    ...overrides,
  };
}

describe("dominates", () => {
  it("requires strict improvement somewhere", () => {
    const a = rec({});
    const b = rec({});
    expect(dominates(a, b)).toBe(false);
    expect(dominates(rec({ accuracy: 0.9 }), b)).toBe(true);
  });

  it("respects objective directions", () => {
    const base = rec({});
    expect(dominates(rec({ eps_achieved: 0.5 }), base)).toBe(true);
    expect(dominates(rec({ eps_achieved: 1.5 }), base)).toBe(false);
    expect(dominates(rec({ coverage: 0.6 }), base)).toBe(true);
    expect(dominates(rec({ coverage: 0.4 }), base)).toBe(false);
  });
});

describe("frontier", () => {
  it("hides exactly the records the command line omits", () => {
    const mine = frontier(doc.records);
    expect(mine.length).toBe(cliFrontier.length);
    mine.forEach((record, i) => {
      for (const field of RECORD_FIELDS) {
        expect(record[field]).toStrictEqual(cliFrontier[i]![field]);
      }
    });
  });

  it("keeps duplicates, both of them", () => {
    const a = rec({});
    const b = rec({});
    const out = frontier([a, b]);
    expect(out.length).toBe(2);
  });

  it("is idempotent on the reference records", () => {
    const once = frontier(doc.records);
    expect(frontier(once)).toEqual(once);
  });
});

describe("frontierQuery", () => {
  it("returns null when nothing is feasible", () => {
    expect(frontierQuery(doc.records, 0, 0)).toBeNull();
  });

  it("sees every record as feasible beyond the data range", () => {
    const best = frontierQuery(doc.records, Infinity, Infinity);
    const top = Math.max(...doc.records.map((r) => r.coverage));
    expect(best).not.toBeNull();
    expect(best!.coverage).toBe(top);
    expect(feasibleRecords(doc.records, Infinity, Infinity).length).toBe(
      doc.records.length,
    );
  });

  it("breaks full ties toward the earliest record", () => {
    const a = rec({ seed: 0 });
    const b = rec({ seed: 1 });
    expect(frontierQuery([a, b], 10, 10)).toBe(a);
    expect(frontierQuery([b, a], 10, 10)).toBe(b);
  });

  it("prefers lower achieved epsilon, then lower disparity, on ties", () => {
    const a = rec({ eps_achieved: 0.9, max_disparity: 0.04 });
    const b = rec({ eps_achieved: 0.8, max_disparity: 0.05 });
    expect(frontierQuery([a, b], 10, 10)).toBe(b);
    const c = rec({ eps_achieved: 0.8, max_disparity: 0.03 });
    expect(frontierQuery([a, b, c], 10, 10)).toBe(c);
  });

  it("pins nondecreasing coverage as the fairness ceiling loosens", () => {
    const epsCeiling = Math.max(...doc.records.map((r) => r.eps_achieved));
    const gammaHi = Math.max(...doc.records.map((r) => r.max_disparity)) * 1.1;
    let previous = -Infinity;
    for (let i = 0; i <= 50; i++) {
      const best = frontierQuery(doc.records, epsCeiling, (gammaHi * i) / 50);
      if (best === null) continue;
      expect(best.coverage).toBeGreaterThanOrEqual(previous);
      previous = best.coverage;
    }
    expect(previous).toBeGreaterThan(-Infinity);
  });

  it("rejects records on the wrong side of either ceiling, inclusively", () => {
    const a = rec({ eps_achieved: 1.0, max_disparity: 0.05 });
    expect(frontierQuery([a], 1.0, 0.05)).toBe(a);
    expect(frontierQuery([a], 0.999999, 0.05)).toBeNull();
    expect(frontierQuery([a], 1.0, 0.049999)).toBeNull();
  });
});
