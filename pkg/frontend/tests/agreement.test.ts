/** Agreement with the command line on sampled constraint queries.
 *
 * The fixtures were produced by scripts/make_query_expectations.py, which
 * ran the real `fairpriv frontier query` process for 100 sampled
 * (max_eps, max_gamma) pairs against the same records file this suite
 * loads. The page's pinned optimum must equal the recorded answer
 * field-for-field, including the cases where both sides find nothing.
 */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { parseDocument } from "../src/loader";
import { frontierQuery } from "../src/pareto";
import { Objective, RECORD_FIELDS } from "../src/types";

interface Case {
  max_eps: number;
  max_gamma: number;
  objective: Objective;
  expect: Record<string, unknown> | null;
}

const doc = parseDocument(
  readFileSync(new URL("./fixtures/frontier.json", import.meta.url), "utf8"),
);
const expectations: { cases: Case[] } = JSON.parse(
  readFileSync(
    new URL("./fixtures/query_expectations.json", import.meta.url),
    "utf8",
  ),
);

describe("pinned optimum vs command-line query", () => {
  it("covers 100 sampled pairs with both feasible and infeasible cases", () => {
    expect(expectations.cases.length).toBe(100);
    const feasible = expectations.cases.filter((c) => c.expect !== null).length;
    expect(feasible).toBeGreaterThan(0);
    expect(feasible).toBeLessThan(100);
  });

  it("agrees field-for-field on every sampled pair", () => {
    for (const c of expectations.cases) {
      const got = frontierQuery(doc.records, c.max_eps, c.max_gamma, c.objective);
      const label = `max_eps=${c.max_eps} max_gamma=${c.max_gamma} objective=${c.objective}`;
      if (c.expect === null) {
        expect(got, label).toBeNull();
        continue;
      }
      expect(got, label).not.toBeNull();
      for (const field of RECORD_FIELDS) {
        expect(got![field], `${label} field=${field}`).toStrictEqual(
          c.expect[field],
        );
      }
    }
  });
});
