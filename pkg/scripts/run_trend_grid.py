"""Sweep the default eps x fairness grid and persist records + frontier.

Usage:
    python3 scripts/run_trend_grid.py --seed 11 --out results/
"""

import argparse
import warnings
from pathlib import Path

from fairpriv.harness import GridSpec, HarnessConfig, SyntheticSpec, persist, persist_csv, run_grid
from fairpriv.pareto import frontier


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--framework", default="fairpate",
                    choices=("fairpate", "pate_pre", "pate_in", "fairdpsgd"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = SyntheticSpec()
    grid = GridSpec(framework=args.framework)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        results = run_grid(spec, grid, HarnessConfig(), args.seed, jobs=args.jobs)
    records = [r.record for r in results]

    args.out.mkdir(parents=True, exist_ok=True)
    persist(records, args.out / "records.json", dataset=spec.name, master_seed=args.seed)
    persist_csv(records, args.out / "records.csv")
    front = frontier(records)

    header = f"{'eps':>4} {'gamma':>6} {'eps_ach':>8} {'disp':>7} {'acc':>6} {'cov':>6} front"
    print(header)
    print("-" * len(header))
    on_front = {id(r) for r in front}
    for rec in records:
        mark = "*" if id(rec) in on_front else ""
        print(
            f"{rec.eps_spec:>4.1f} {rec.fairness_spec:>6.2f} {rec.eps_achieved:>8.4f} "
            f"{rec.max_disparity:>7.4f} {rec.accuracy:>6.3f} {rec.coverage:>6.3f} {mark:>5}"
        )
    print(f"\n{len(records)} records -> {args.out / 'records.json'} "
          f"({len(front)} on the frontier)")


if __name__ == "__main__":
    main()
