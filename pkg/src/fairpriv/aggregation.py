"""Noisy teacher-vote aggregation with consensus and fairness gating.

The confident aggregator answers a query only when the noisy maximum vote
clears a threshold; the fair variant additionally runs the answered label
through the demographic-parity gate before releasing it. Noise draws happen
in a fixed order (threshold first, then one draw per class id ascending) so
that runs are reproducible and the gated aggregator reduces draw-for-draw to
the plain one when the gate is vacuous.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import GroupClassCounter, SeededRng, VoteHistogram
from .fairness import GateDecision, GateParams, fairness_gate


class RejectionReason(enum.Enum):
    NONE = "none"
    CONSENSUS = "consensus"
    FAIRNESS = "fairness"


@dataclass(frozen=True)
class AggregatorParams:
    """Noisy aggregation knobs.

    Defaults are the reference operating point for a 200-teacher ensemble;
    smaller ensembles must scale the threshold down or nothing will ever pass
    (flagged at aggregation time, not an error).
    """

    threshold: float = 120.0
    sigma1: float = 110.0
    sigma2: float = 20.0
    gate: Optional[GateParams] = None

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise scales must be nonnegative")


@dataclass(frozen=True)
class AggregationOutcome:
    """Result of aggregating one query."""

    result: Optional[int]                 # class id, or None when rejected
    rejected_by: RejectionReason
    noisy_argmax_computed: bool

    def __post_init__(self):
        if self.rejected_by is RejectionReason.FAIRNESS and not self.noisy_argmax_computed:
            raise ValueError("fairness rejection implies the argmax was computed")
        if self.result is not None and self.rejected_by is not RejectionReason.NONE:
            raise ValueError("an answered query cannot carry a rejection reason")


def _noisy_argmax(hist: VoteHistogram, sigma2: float, rng: SeededRng) -> int:
    """Argmax over per-class votes with fresh Gaussian noise per class.

    One draw per class, ids ascending; ties go to the lowest class id.
    """
    noisy = [float(v) + rng.gaussian(sigma2) for v in hist.votes]
    return int(np.argmax(noisy))


def _passes_threshold(hist: VoteHistogram, params: AggregatorParams, rng: SeededRng) -> bool:
    if params.threshold > hist.teacher_count:
        warnings.warn(
            f"threshold {params.threshold} exceeds teacher count {hist.teacher_count}; "
            "queries can only pass on noise",
            RuntimeWarning,
            stacklevel=3,
        )
    max_vote = float(np.max(hist.votes))
    return max_vote + rng.gaussian(params.sigma1) >= params.threshold


def confident_gnmax(
    hist: VoteHistogram, params: AggregatorParams, rng: SeededRng
) -> AggregationOutcome:
    """Answer with the noisy plurality label if noisy consensus clears T."""
    if not _passes_threshold(hist, params, rng):
        return AggregationOutcome(
            result=None,
            rejected_by=RejectionReason.CONSENSUS,
            noisy_argmax_computed=False,
        )
    label = _noisy_argmax(hist, params.sigma2, rng)
    return AggregationOutcome(
        result=label, rejected_by=RejectionReason.NONE, noisy_argmax_computed=True
    )


def confident_fair_gnmax(
    hist: VoteHistogram,
    group: int,
    m: GroupClassCounter,
    params: AggregatorParams,
    rng: SeededRng,
) -> AggregationOutcome:
    """Consensus check, noisy argmax, then the demographic-parity gate.

    An accepted answer (cold start included) increments m(group, label); a
    gate rejection releases nothing but the argmax was still computed, which
    matters to the accountant. With a vacuous gate (rho_fair = 1, min_count
    = 0) this is draw-for-draw identical to confident_gnmax.
    """
    if params.gate is None:
        raise ValueError("confident_fair_gnmax requires gate parameters")
    if not _passes_threshold(hist, params, rng):
        return AggregationOutcome(
            result=None,
            rejected_by=RejectionReason.CONSENSUS,
            noisy_argmax_computed=False,
        )
    label = _noisy_argmax(hist, params.sigma2, rng)
    decision = fairness_gate(m, group, label, params.gate)
    if decision is GateDecision.REJECT:
        return AggregationOutcome(
            result=None,
            rejected_by=RejectionReason.FAIRNESS,
            noisy_argmax_computed=True,
        )
    m.increment(group, label)
    return AggregationOutcome(
        result=label, rejected_by=RejectionReason.NONE, noisy_argmax_computed=True
    )


def collect_votes(teachers: Sequence, x: np.ndarray, num_classes: int) -> VoteHistogram:
    """One vote per teacher for a single query point."""
    votes = np.zeros(num_classes, dtype=np.int64)
    for teacher in teachers:
        label = int(teacher.predict(x))
        if not (0 <= label < num_classes):
            raise ValueError(f"teacher vote {label} outside [0, {num_classes})")
        votes[label] += 1
    return VoteHistogram(votes=votes, teacher_count=len(teachers))
