"""Build the reference frontier.json consumed by the explorer page and its tests.

Runs every framework over MASTER grid axes, persists the combined records,
and stages them under frontend/public/data/ (plus a fixture copy under
frontend/tests/fixtures/ used by the UI/CLI agreement test).
"""

import argparse
import warnings
from pathlib import Path

from fairpriv.harness import GridSpec, HarnessConfig, SyntheticSpec, persist, run_grid

FRAMEWORKS = ("fairpate", "pate_pre", "pate_in", "fairdpsgd")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", type=Path, default=Path("frontend/public/data/frontier.json"))
    ap.add_argument("--fixture", type=Path,
                    default=Path("frontend/tests/fixtures/frontier.json"))
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    spec = SyntheticSpec()
    cfg = HarnessConfig()
    records = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for framework in FRAMEWORKS:
            grid = GridSpec(framework=framework)
            results = run_grid(spec, grid, cfg, args.seed, jobs=args.jobs)
            records.extend(r.record for r in results)
            print(f"{framework}: {len(results)} cells")

    for target in (args.out, args.fixture):
        target.parent.mkdir(parents=True, exist_ok=True)
        persist(records, target, dataset=spec.name, master_seed=args.seed)
        print(f"wrote {len(records)} records to {target}")


if __name__ == "__main__":
    main()
