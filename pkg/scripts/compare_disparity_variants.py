"""Answered-query totals under each disparity-measurement variant.

Streams the fixed demonstration distribution through the inference-time
gate once per variant, holding (rho_fair, min_count, ordering) constant, and
prints the answered totals side by side.
"""

import argparse

from fairpriv.fairness import DisparityVariant
from fairpriv.harness import VARIANT_DEMO_COUNTS, variant_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rho", type=float, default=0.03)
    ap.add_argument("--min-count", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    totals = variant_comparison(
        rho_fair=args.rho, min_count=args.min_count, seed=args.seed
    )
    stream = int(VARIANT_DEMO_COUNTS.sum())
    print(f"stream of {stream} queries, rho={args.rho}, M={args.min_count}\n")
    width = max(len(v.name) for v in DisparityVariant)
    for variant in (
        DisparityVariant.TO_OVERALL,
        DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT,
        DisparityVariant.BETWEEN_GROUPS,
    ):
        n = totals[variant]
        print(f"{variant.name:<{width}}  answered {n:>5}  ({n / stream:.1%})")


if __name__ == "__main__":
    main()
