"""Pareto dominance, frontier extraction, and constrained best-record lookup.

Records are compared on four objectives: achieved epsilon and worst-case
disparity are minimized, accuracy and coverage are maximized. Scale is a few
thousand records, so the frontier filter is the plain all-pairs check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .core import ExperimentRecord


@dataclass(frozen=True)
class ObjectiveSpec:
    """Which record fields are optimized, and in which direction."""

    minimize: Tuple[str, ...] = ("eps_achieved", "max_disparity")
    maximize: Tuple[str, ...] = ("accuracy", "coverage")

    def __post_init__(self):
        overlap = set(self.minimize) & set(self.maximize)
        if overlap:
            raise ValueError(f"objectives cannot be both directions: {sorted(overlap)}")
        if not self.minimize and not self.maximize:
            raise ValueError("at least one objective is required")
        unknown = [
            name
            for name in (*self.minimize, *self.maximize)
            if name not in ExperimentRecord.FIELD_NAMES
        ]
        if unknown:
            raise ValueError(f"unknown record fields: {unknown}")


DEFAULT_OBJECTIVES = ObjectiveSpec()


def dominates(a: ExperimentRecord, b: ExperimentRecord,
              spec: ObjectiveSpec = DEFAULT_OBJECTIVES) -> bool:
    """True if a is at least as good as b everywhere and better somewhere."""
    strictly_better = False
    for name in spec.minimize:
        va, vb = getattr(a, name), getattr(b, name)
        if va > vb:
            return False
        if va < vb:
            strictly_better = True
    for name in spec.maximize:
        va, vb = getattr(a, name), getattr(b, name)
        if va < vb:
            return False
        if va > vb:
            strictly_better = True
    return strictly_better


def frontier(records: Sequence[ExperimentRecord],
             spec: ObjectiveSpec = DEFAULT_OBJECTIVES) -> List[ExperimentRecord]:
    """All records not dominated by any other, in input order."""
    return [
        r for i, r in enumerate(records)
        if not any(j != i and dominates(other, r, spec)
                   for j, other in enumerate(records))
    ]


def frontier_query(
    records: Sequence[ExperimentRecord],
    max_eps: float,
    max_gamma: float,
    objective: str = "coverage",
) -> Optional[ExperimentRecord]:
    """Best feasible record under privacy and fairness ceilings.

    Feasible means eps_achieved <= max_eps and max_disparity <= max_gamma.
    Among feasible records the one maximizing `objective` wins; ties resolve
    to lower achieved epsilon, then lower disparity. Returns None when
    nothing is feasible.
    """
    if objective not in ("accuracy", "coverage"):
        raise ValueError(f"objective must be accuracy or coverage, got {objective!r}")
    feasible = [
        r for r in records
        if r.eps_achieved <= max_eps and r.max_disparity <= max_gamma
    ]
    if not feasible:
        return None
    return max(
        feasible,
        key=lambda r: (getattr(r, objective), -r.eps_achieved, -r.max_disparity),
    )
