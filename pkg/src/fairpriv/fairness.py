"""Demographic disparity estimators and fairness gating.

Three disparity variants are supported. All of them measure, per (group z,
class k), how far group z's rate of being assigned class k sits from a
reference rate:

* ``BETWEEN_GROUPS``   : max over other groups z~ of |P[Y=k|z] - P[Y=k|z~]|
* ``TO_OVERALL``       : P[Y=k|z] - P[Y=k]  (signed, reference includes z)
* ``TO_OVERALL_NO_DOUBLE_COUNT`` : P[Y=k|z] - P[Y=k|Z!=z]  (signed, default)

The default variant excludes group z from its own reference so a group is
never compared against itself.
"""

from __future__ import annotations

import enum
import math
import warnings
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import GroupClassCounter, LabeledExample, PrivacyBudget


class DisparityVariant(enum.Enum):
    BETWEEN_GROUPS = "between_groups"
    TO_OVERALL = "to_overall"
    TO_OVERALL_NO_DOUBLE_COUNT = "to_overall_no_double_count"


DEFAULT_VARIANT = DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT


class GateDecision(enum.Enum):
    ANSWER_COLD_START = "answer_cold_start"
    ANSWER = "answer"
    REJECT = "reject"


@dataclass(frozen=True)
class GateParams:
    """Configuration of the demographic-parity gate.

    rho_fair is the tolerated disparity margin; min_count is the per-group
    cold-start threshold M below which every query is answered to seed the
    counts. rho_fair >= 1 makes the gate vacuous (the tentative-rate gap can
    never strictly exceed 1, and the rate-vs-complement difference only
    reaches 1 in the degenerate all-one-class corner, which we deliberately
    treat as allowed so that rho_fair = 1 reproduces ungated behavior).
    """

    rho_fair: float
    min_count: int
    variant: DisparityVariant = DEFAULT_VARIANT

    def __post_init__(self):
        if not (0.0 <= self.rho_fair <= 1.0):
            raise ValueError(f"rho_fair must be in [0, 1], got {self.rho_fair}")
        if self.min_count < 0:
            raise ValueError(f"min_count must be >= 0, got {self.min_count}")


def disparity_matrix(
    groups: Sequence[int],
    predictions: Sequence[int],
    num_groups: int,
    num_classes: int,
    variant: DisparityVariant = DEFAULT_VARIANT,
) -> np.ndarray:
    """Per-(group, class) disparity estimates from hard predictions.

    Entries that cannot be estimated (empty group, or empty complement under
    the no-double-count variant) are NaN rather than an error.
    """
    if len(groups) != len(predictions):
        raise ValueError("groups and predictions must have equal length")
    counts = np.zeros((num_groups, num_classes), dtype=np.float64)
    for z, k in zip(groups, predictions):
        counts[int(z), int(k)] += 1.0
    return disparity_from_counts(counts, variant)


def disparity_from_counts(
    counts: np.ndarray, variant: DisparityVariant = DEFAULT_VARIANT
) -> np.ndarray:
    """Disparity matrix from an answer-count table (groups x classes).

    Accepts soft (fractional) counts as well, which is what the tempered
    regularizer in the learners module feeds in.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 2:
        raise ValueError("counts must be a 2-D (groups x classes) array")
    num_groups, num_classes = counts.shape
    group_totals = counts.sum(axis=1)
    total = counts.sum()
    gamma = np.full((num_groups, num_classes), np.nan)

    with np.errstate(invalid="ignore", divide="ignore"):
        rates = counts / group_totals[:, None]

    for z in range(num_groups):
        if group_totals[z] == 0:
            continue
        if variant is DisparityVariant.BETWEEN_GROUPS:
            others = [n for n in range(num_groups)
                      if n == z or group_totals[n] > 0]
            gamma[z] = np.max(
                np.abs(rates[z][None, :] - rates[others]), axis=0
            )
        elif variant is DisparityVariant.TO_OVERALL:
            overall = counts.sum(axis=0) / total
            gamma[z] = rates[z] - overall
        else:
            comp_total = total - group_totals[z]
            if comp_total == 0:
                continue
            comp_rates = (counts.sum(axis=0) - counts[z]) / comp_total
            gamma[z] = rates[z] - comp_rates
    return gamma


def max_disparity(gamma: np.ndarray, absolute: bool = False) -> float:
    """Signed maximum over the defined entries of a disparity matrix.

    With absolute=True the maximum of |entry| is taken instead. Raises if
    every entry is undefined.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    defined = gamma[~np.isnan(gamma)]
    if defined.size == 0:
        raise ValueError("disparity matrix has no defined entries")
    if absolute:
        return float(np.max(np.abs(defined)))
    return float(np.max(defined))


def gate_condition(
    m: GroupClassCounter,
    group: int,
    label: int,
    variant: DisparityVariant = DEFAULT_VARIANT,
) -> Optional[float]:
    """Tentative disparity if (group, label) were answered now.

    The candidate answer is included in group's own rate (+1 in numerator and
    denominator); reference rates are computed from the current counts. The
    value compared against rho_fair by the gate. Returns None when the
    reference is empty (no answers outside the group, or no other group with
    answers), which callers treat as an allowed answer.
    """
    tentative = (m.count(group, label) + 1) / (m.group_total(group) + 1)
    if variant is DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT:
        comp_total = m.complement_total(group)
        if comp_total == 0:
            return None
        return tentative - m.complement_count(group, label) / comp_total
    if variant is DisparityVariant.TO_OVERALL:
        label_total = m.count(group, label) + m.complement_count(group, label)
        overall = (label_total + 1) / (m.total() + 1)
        return tentative - overall
    # BETWEEN_GROUPS: worst pairwise gap against every other seeded group.
    gaps = []
    for other in range(m.num_groups):
        if other == group:
            continue
        other_total = m.group_total(other)
        if other_total == 0:
            continue
        gaps.append(abs(tentative - m.count(other, label) / other_total))
    if not gaps:
        return None
    return max(gaps)


def fairness_gate(
    m: GroupClassCounter, group: int, label: int, params: GateParams
) -> GateDecision:
    """Decide whether answering (group, label) keeps disparity under rho_fair.

    Cold start: while group's answered total is below min_count, answer
    unconditionally so rates are seeded. After that, answer only while the
    tentative disparity stays strictly below rho_fair. An empty reference
    population is treated as satisfied (flagged with a RuntimeWarning). The
    gate never mutates the counter.
    """
    if m.group_total(group) < params.min_count:
        return GateDecision.ANSWER_COLD_START
    if params.rho_fair >= 1.0:
        return GateDecision.ANSWER
    value = gate_condition(m, group, label, params.variant)
    if value is None:
        warnings.warn(
            "fairness gate saw an empty reference population; answering",
            RuntimeWarning,
            stacklevel=2,
        )
        return GateDecision.ANSWER
    if value < params.rho_fair:
        return GateDecision.ANSWER
    return GateDecision.REJECT


def preprocess_stream(
    data: Iterable[LabeledExample], params: GateParams
) -> List[LabeledExample]:
    """Streaming training-set filter gating on the true label.

    Examples are inspected in order; each accepted example (cold start
    included) increments the private counter and is kept. Rejected examples
    are dropped. Input order is preserved on the output.
    """
    data = list(data)
    if not data:
        return []
    num_groups = max(ex.group for ex in data) + 1
    num_classes = max(ex.label for ex in data) + 1
    m = GroupClassCounter(num_groups, num_classes)
    kept = []
    for ex in data:
        decision = fairness_gate(m, ex.group, ex.label, params)
        if decision is not GateDecision.REJECT:
            m.increment(ex.group, ex.label)
            kept.append(ex)
    return kept


def postprocess_stream(
    groups: Sequence[int],
    predictions: Sequence[int],
    params: GateParams,
    num_groups: Optional[int] = None,
    num_classes: Optional[int] = None,
) -> List[Optional[int]]:
    """Inference-time filter gating on the predicted label.

    Returns one entry per input: the prediction where the gate answers, None
    where it rejects. Accepted answers (cold start included) increment the
    private counter.
    """
    if len(groups) != len(predictions):
        raise ValueError("groups and predictions must have equal length")
    if not groups:
        return []
    if num_groups is None:
        num_groups = max(int(z) for z in groups) + 1
    if num_classes is None:
        num_classes = max(int(k) for k in predictions) + 1
    m = GroupClassCounter(num_groups, num_classes)
    out: List[Optional[int]] = []
    for z, k in zip(groups, predictions):
        decision = fairness_gate(m, int(z), int(k), params)
        if decision is GateDecision.REJECT:
            out.append(None)
        else:
            m.increment(int(z), int(k))
            out.append(int(k))
    return out


def _gamma_ratio(gamma: float) -> Fraction:
    """2g/(1-g) as an exact rational of the decimal value the caller wrote.

    Floor/ceil of this ratio sit on integer boundaries for round tolerances
    like 0.5 or 0.9, where float division lands one ulp high and would
    silently bump the result (ceil(18.000000000000004) = 19).
    """
    g = Fraction(str(gamma))
    return 2 * g / (1 - g)


def k_gamma(gamma: float) -> int:
    """Group-size sensitivity of the ordered offline balancer: 2 + ceil(2g/(1-g))."""
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    return 2 + math.ceil(_gamma_ratio(gamma))


def group_privacy_transform(budget: PrivacyBudget, gamma: float) -> PrivacyBudget:
    """Budget actually spent when one person may move k_gamma(gamma) points.

    Standard group privacy: (eps, delta) at distance k becomes
    (k*eps, k*exp(k*eps)*delta). Delta is clamped at 1.0, where the guarantee
    is vacuous anyway.
    """
    k = k_gamma(gamma)
    eps = k * budget.epsilon
    delta = min(1.0, k * math.exp(k * budget.epsilon) * budget.delta)
    return PrivacyBudget(epsilon=eps, delta=delta)


def _order_key(ex: LabeledExample) -> tuple:
    """Default deterministic total order: lexicographic over feature bytes."""
    return (np.asarray(ex.features, dtype=np.float64).tobytes(), ex.group, ex.label)


def ordered_offline_preprocess(
    data: Sequence[LabeledExample],
    gamma: float,
    order_key=None,
) -> List[LabeledExample]:
    """Offline balancer with bounded sensitivity to single-point additions.

    Only defined for two sensitive groups. Within each label, the minority
    group is kept whole (size m) and the majority group is capped at
    m + floor(2*gamma*m / (1 - gamma)); excess majority points are dropped
    from the top of a fixed total order over the input space, so which points
    survive does not depend on dataset order. Adding one input point changes
    the output by at most k_gamma(gamma) points, which is what makes the
    group-privacy transform above applicable.

    Output preserves the input sequence order. Already balanced two-group
    data passes through unchanged; a label (or the whole dataset) populated
    by a single group keeps nothing, because the cap is anchored to the
    minority size and an absent complement anchors it at zero.
    """
    if not (0.0 <= gamma < 1.0):
        raise ValueError(f"gamma must be in [0, 1), got {gamma}")
    data = list(data)
    if not data:
        return []
    groups = sorted({ex.group for ex in data})
    if len(groups) > 2:
        raise ValueError(
            f"ordered offline preprocessing supports at most 2 groups, got {len(groups)}"
        )
    if order_key is None:
        order_key = _order_key
    if len(groups) == 1:
        # No complement population exists, so no balance cap is satisfiable
        # and everything is dropped. Keeping the data instead would let one
        # added point of the other group swing the output by far more than
        # k_gamma, voiding the group-privacy argument.
        warnings.warn(
            "offline preprocessing saw a single-group dataset; dropping all rows",
            RuntimeWarning,
            stacklevel=2,
        )
        return []

    keep = set()
    labels = sorted({ex.label for ex in data})
    for label in labels:
        by_group = {
            z: [i for i, ex in enumerate(data) if ex.label == label and ex.group == z]
            for z in groups
        }
        sizes = {z: len(by_group[z]) for z in groups}
        minority = min(groups, key=lambda z: (sizes[z], z))
        majority = groups[1] if minority == groups[0] else groups[0]
        m_size = sizes[minority]
        cap = m_size + math.floor(_gamma_ratio(gamma) * m_size)
        keep.update(by_group[minority])
        ranked = sorted(by_group[majority], key=lambda i: order_key(data[i]))
        keep.update(ranked[:cap])
    return [ex for i, ex in enumerate(data) if i in keep]
