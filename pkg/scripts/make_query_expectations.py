#!/usr/bin/env python3
"""Record command-line query answers for the frontend agreement suite.

Samples 100 (max_eps, max_gamma) constraint pairs against the frontend's
reference records file, runs the real `fairpriv frontier query` process for
each, and stores the answers (or null when infeasible) next to the sampled
inputs. Also captures the full `fairpriv frontier` output so the page's
Pareto toggle can be cross-checked record-for-record.

The sample mixes uniform draws over a padded data range, ceilings snapped
exactly onto achieved record values (the comparisons are inclusive, so the
boundary is where disagreement would hide), deliberately infeasible draws
below the data minimum, and the four corner combinations.
"""

import argparse
import json
import random
import subprocess
import sys
from pathlib import Path


def run_query(records_path, max_eps, max_gamma, objective):
    cmd = [
        "fairpriv", "frontier", "query",
        "--in", str(records_path),
        "--max-eps", repr(max_eps),
        "--max-gamma", repr(max_gamma),
        "--objective", objective,
        "--format", "json",
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode == 1:
        return None
    if proc.returncode != 0:
        sys.exit(f"{' '.join(cmd)} failed:\n{proc.stderr}")
    return json.loads(proc.stdout)


def run_frontier(records_path):
    cmd = ["fairpriv", "frontier", "--in", str(records_path), "--format", "json"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(cmd)} failed:\n{proc.stderr}")
    return json.loads(proc.stdout)


def sample_cases(records, rng):
    eps_vals = sorted(r["eps_achieved"] for r in records)
    gamma_vals = sorted(r["max_disparity"] for r in records)
    eps_hi = eps_vals[-1] * 1.15
    gamma_hi = gamma_vals[-1] * 1.15

    cases = []
    for i in range(60):
        objective = "accuracy" if i % 4 == 3 else "coverage"
        cases.append((
            round(rng.uniform(0.0, eps_hi), 6),
            round(rng.uniform(0.0, gamma_hi), 6),
            objective,
        ))
    for i in range(20):
        objective = "accuracy" if i % 5 == 4 else "coverage"
        cases.append((
            rng.choice(eps_vals),
            rng.choice(gamma_vals),
            objective,
        ))
    for _ in range(14):
        cases.append((
            round(rng.uniform(0.0, eps_vals[0]), 6),
            round(rng.uniform(0.0, gamma_vals[0]), 6),
            "coverage",
        ))
    cases.append((0.0, 0.0, "coverage"))
    cases.append((round(eps_hi, 6), round(gamma_hi, 6), "coverage"))
    cases.append((0.0, round(gamma_hi, 6), "coverage"))
    cases.append((round(eps_hi, 6), 0.0, "coverage"))
    cases.append((eps_vals[0], gamma_vals[0], "coverage"))
    cases.append((eps_vals[-1], gamma_vals[-1], "accuracy"))
    assert len(cases) == 100
    return cases


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--records",
        type=Path,
        default=Path("frontend/tests/fixtures/frontier.json"),
        help="reference records file the page and the suite both load",
    )
    parser.add_argument(
        "--out-dir",
        type=Path,
        default=Path("frontend/tests/fixtures"),
        help="directory for query_expectations.json and cli_frontier.json",
    )
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args(argv)

    doc = json.loads(args.records.read_text())
    records = doc["records"]
    rng = random.Random(args.seed)
    cases = sample_cases(records, rng)

    results = []
    for max_eps, max_gamma, objective in cases:
        expect = run_query(args.records, max_eps, max_gamma, objective)
        results.append({
            "max_eps": max_eps,
            "max_gamma": max_gamma,
            "objective": objective,
            "expect": expect,
        })

    feasible = sum(1 for r in results if r["expect"] is not None)
    expectations = {
        "source": args.records.name,
        "seed": args.seed,
        "cases": results,
    }
    args.out_dir.mkdir(parents=True, exist_ok=True)
    out = args.out_dir / "query_expectations.json"
    out.write_text(json.dumps(expectations, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(results)} cases, {feasible} feasible)")

    frontier_records = run_frontier(args.records)
    out = args.out_dir / "cli_frontier.json"
    out.write_text(json.dumps(frontier_records, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(frontier_records)} frontier records)")


if __name__ == "__main__":
    main()
