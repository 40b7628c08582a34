"""Renyi differential privacy accounting.

All mechanisms report their cost as an RDP curve over a shared grid of
orders; curves compose by pointwise addition and convert to (epsilon, delta)
at the end. The noisy-argmax cost is data dependent: it is driven by an
upper bound q_tilde on the probability that noise flips the plurality vote,
and collapses toward zero as teacher consensus grows.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from .core import PrivacyBudget, VoteHistogram

# Shared default order grid: integers 2..64 plus two high-order probes.
DEFAULT_ORDERS = tuple(float(a) for a in list(range(2, 65)) + [128, 256])


@dataclass(frozen=True)
class RdpCurve:
    """An RDP cost curve: value(order) on a fixed ascending grid of orders."""

    orders: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        orders = np.asarray(self.orders, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "values", values)
        if orders.ndim != 1 or orders.size == 0:
            raise ValueError("orders must be a nonempty 1-D array")
        if orders.shape != values.shape:
            raise ValueError("orders and values must have matching shape")
        if not (orders > 1.0).all():
            raise ValueError("all orders must be > 1")
        if not (np.diff(orders) > 0).all():
            raise ValueError("orders must be strictly ascending")
        if (values < 0).any():
            raise ValueError("RDP values must be nonnegative")

    @classmethod
    def zero(cls, orders: Sequence[float] = DEFAULT_ORDERS) -> "RdpCurve":
        orders = np.asarray(orders, dtype=np.float64)
        return cls(orders=orders, values=np.zeros_like(orders))

    def __add__(self, other: "RdpCurve") -> "RdpCurve":
        if not np.array_equal(self.orders, other.orders):
            raise ValueError("cannot compose RDP curves on different order grids")
        return RdpCurve(orders=self.orders, values=self.values + other.values)

    def scaled(self, steps: int) -> "RdpCurve":
        """Cost of `steps` independent repetitions of this mechanism."""
        if steps < 0:
            raise ValueError("steps must be nonnegative")
        return RdpCurve(orders=self.orders, values=self.values * steps)


def gaussian_rdp(sigma: float, sensitivity: float, order: float) -> float:
    """RDP of the Gaussian mechanism: order * sensitivity^2 / (2 sigma^2).

    sigma == 0 has infinite cost (returned as inf, not raised) so callers can
    run noise-free pipelines for testing and see the vacuous guarantee.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sensitivity < 0:
        raise ValueError(f"sensitivity must be nonnegative, got {sensitivity}")
    if order <= 1:
        raise ValueError(f"order must exceed 1, got {order}")
    if sigma == 0.0:
        return math.inf
    return order * sensitivity * sensitivity / (2.0 * sigma * sigma)


def threshold_check_rdp(sigma1: float, order: float) -> float:
    """Cost of one noisy max-vote threshold comparison: order / (2 sigma1^2).

    The released bit depends on the vote histogram only through the max
    count, which moves by at most 1 between neighboring datasets, so this is
    the sensitivity-1 Gaussian cost.
    """
    return gaussian_rdp(sigma1, 1.0, order)


def q_tilde(hist: VoteHistogram, sigma2: float) -> float:
    """Upper bound on P[noisy argmax differs from the plurality vote].

    Union bound over runner-up classes: each one overtakes the plurality
    class i* with probability P[N(0, 2 sigma2^2) > n_i* - n_i], which equals
    0.5 * erfc(gap / (2 sigma2)). Capped at 1. Ties in the histogram resolve
    the plurality index to the lowest class id, matching the aggregator.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    votes = hist.votes
    star = int(np.argmax(votes))
    gaps = votes[star] - np.delete(votes, star)
    if gaps.size == 0:
        return 0.0
    total = sum(0.5 * math.erfc(float(g) / (2.0 * sigma2)) for g in gaps)
    return min(1.0, total)


def data_dependent_rdp(qt: float, sigma2: float, order: float) -> float:
    """Data-dependent RDP of the noisy argmax at one order.

    Follows the standard aggregation bound: with q = qt and a distinguished
    pair of higher orders mu1 = mu2 + 1, mu2 = sigma2 * sqrt(log(1/q)), the
    mechanism's RDP at `order` is

        log((1 - q) * A + q * B) / (order - 1)

    with A, B evaluated in log space from the Gaussian RDP at mu1 and mu2.
    The bound only holds on an interior regime (mu1 > order, mu2 > 1, q small
    enough); outside it, and whenever it would exceed it, the data-independent
    cost order / sigma2^2 (Gaussian with sensitivity sqrt(2)) is returned.
    """
    if not (0.0 <= qt <= 1.0):
        raise ValueError(f"qt must be in [0, 1], got {qt}")
    if order <= 1:
        raise ValueError(f"order must exceed 1, got {order}")
    return float(data_dependent_rdp_curve(qt, sigma2, np.asarray([order]))[0])


def data_dependent_rdp_curve(qt: float, sigma2: float, orders: np.ndarray) -> np.ndarray:
    """Vectorized data_dependent_rdp over a grid of orders."""
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    orders = np.asarray(orders, dtype=np.float64)
    variance = sigma2 * sigma2
    independent = orders / variance
    if qt == 0.0:
        return np.zeros_like(orders)
    if qt >= 1.0:
        return independent

    logq = math.log(qt)
    mu2 = sigma2 * math.sqrt(-logq)
    mu1 = mu2 + 1.0
    rdp1 = mu1 / variance          # Gaussian RDP at order mu1, sensitivity sqrt(2)
    rdp2 = mu2 / variance
    mask = (mu1 > orders) & (mu2 > 1.0)
    if mask.any():
        # The distinguished pair must itself sit in the regime where the
        # first-order bound applies.
        log_a2 = (mu2 - 1.0) * rdp2
        regime = (
            logq
            <= log_a2
            - mu2 * (math.log(1.0 + 1.0 / (mu1 - 1.0)) + math.log(1.0 + 1.0 / (mu2 - 1.0)))
        ) and (-logq > rdp2)
        if not regime:
            mask = np.zeros_like(mask)

    out = independent.copy()
    if mask.any():
        lam = orders[mask]
        log1q = math.log1p(-qt)
        inner = (logq + rdp2) * (1.0 - 1.0 / mu2)
        # log(1 - exp(inner)); inner < 0 inside the regime.
        log_a = (lam - 1.0) * (log1q - math.log1p(-math.exp(inner)))
        log_b = (lam - 1.0) * (rdp1 - logq / (mu1 - 1.0))
        log_s = np.logaddexp(log1q + log_a, logq + log_b)
        out[mask] = np.minimum(out[mask], log_s / (lam - 1.0))
    return np.maximum(out, 0.0)


def subsampled_gaussian_rdp(q: float, sigma: float, order: float) -> float:
    """RDP at an integer order of the Poisson-subsampled Gaussian mechanism.

    Binomial expansion at integer order a:

        RDP(a) = log( sum_{i=0..a} C(a,i) q^i (1-q)^(a-i) exp((i^2-i)/(2 sigma^2)) ) / (a-1)

    evaluated in log space. q = 1 reduces exactly to the unsampled Gaussian
    cost a / (2 sigma^2); q = 0 costs nothing. Non-integer orders raise.
    """
    if not (0.0 <= q <= 1.0):
        raise ValueError(f"q must be in [0, 1], got {q}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if order <= 1:
        raise ValueError(f"order must exceed 1, got {order}")
    if float(order) != int(order):
        raise ValueError(f"subsampled accounting is defined on integer orders, got {order}")
    if q == 0.0:
        return 0.0
    a = int(order)
    if q == 1.0:
        return a / (2.0 * sigma * sigma)
    i = np.arange(a + 1, dtype=np.float64)
    log_coef = gammaln(a + 1) - gammaln(i + 1) - gammaln(a - i + 1)
    terms = log_coef + i * math.log(q) + (a - i) * math.log1p(-q) \
        + (i * i - i) / (2.0 * sigma * sigma)
    return float(max(0.0, logsumexp(terms) / (a - 1)))


def subsampled_gaussian_curve(
    q: float, sigma: float, orders: Sequence[float] = DEFAULT_ORDERS
) -> RdpCurve:
    values = np.array([subsampled_gaussian_rdp(q, sigma, a) for a in orders])
    return RdpCurve(orders=np.asarray(orders, dtype=np.float64), values=values)


def rdp_to_dp(curve: RdpCurve, delta: float) -> float:
    """Best (epsilon, delta) conversion over the curve's order grid.

    epsilon = min over orders of value(order) + log(1/delta) / (order - 1).
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    eps = curve.values + math.log(1.0 / delta) / (curve.orders - 1.0)
    return float(np.min(eps))


def calibrate_noise_multiplier(
    q: float,
    steps: int,
    delta: float,
    target_eps: float,
    orders: Sequence[float] = DEFAULT_ORDERS,
    tol: float = 1e-4,
) -> float:
    """Smallest noise multiplier whose T-step subsampled cost stays <= target.

    Bisection on sigma; the returned sigma errs on the high-noise side so the
    achieved epsilon never exceeds the target.
    """
    if target_eps <= 0:
        raise ValueError("target_eps must be positive")

    def achieved(sigma: float) -> float:
        return rdp_to_dp(subsampled_gaussian_curve(q, sigma, orders).scaled(steps), delta)

    lo, hi = 0.05, 1.0
    while achieved(hi) > target_eps:
        hi *= 2.0
        if hi > 1e4:
            raise ValueError("cannot reach target epsilon with reasonable noise")
    while achieved(lo) < target_eps and lo > 1e-4:
        lo /= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if achieved(mid) > target_eps:
            lo = mid
        else:
            hi = mid
    return hi


class ChargeStatus(enum.Enum):
    CONTINUE = "continue"
    EXHAUSTED = "exhausted"


@dataclass
class LedgerEntry:
    """Per-query accounting trace row."""

    query_index: int
    answered: bool
    rejected_by: str            # "none" | "consensus" | "fairness"
    cost: np.ndarray            # RDP cost vector over the tracker's orders
    running_eps: float
    group: Optional[int] = None
    label: Optional[int] = None


class BudgetTracker:
    """Accumulates per-query RDP cost against a target (epsilon, delta).

    charge_fairness_rejected controls whether a query whose noisy argmax was
    computed but then rejected by the fairness gate still pays the argmax
    cost. The conservative default is True; the published accounting treats
    the fairness rejection as free post-processing, which run_fairpate
    selects explicitly.
    """

    def __init__(
        self,
        target: PrivacyBudget,
        orders: Sequence[float] = DEFAULT_ORDERS,
        charge_fairness_rejected: bool = True,
    ):
        if target.epsilon <= 0:
            raise ValueError("budget tracker needs a positive epsilon target")
        if not (0.0 < target.delta < 1.0):
            raise ValueError("budget tracker needs delta strictly inside (0, 1)")
        self.target = target
        self.charge_fairness_rejected = charge_fairness_rejected
        self.accumulated = RdpCurve.zero(orders)
        self.entries: List[LedgerEntry] = []

    @property
    def orders(self) -> np.ndarray:
        return self.accumulated.orders

    def current_epsilon(self) -> float:
        return rdp_to_dp(self.accumulated, self.target.delta)

    def remaining(self) -> float:
        return max(0.0, self.target.epsilon - self.current_epsilon())


def charge_query(
    tracker: BudgetTracker,
    outcome,
    hist: VoteHistogram,
    params,
    group: Optional[int] = None,
) -> ChargeStatus:
    """Try to charge one aggregated query against the tracker.

    The threshold-check cost is always part of the query's price; the argmax
    cost (data dependent through q_tilde) is added whenever the noisy argmax
    was computed, except for fairness-rejected queries when the tracker was
    built with charge_fairness_rejected=False. If paying would push the
    running epsilon beyond the target, nothing is committed and EXHAUSTED is
    returned: the query must be discarded and the run stopped, which is what
    keeps achieved epsilon at or under the specification.
    """
    orders = tracker.orders
    cost = orders / (2.0 * params.sigma1 * params.sigma1)
    charge_argmax = outcome.noisy_argmax_computed and (
        tracker.charge_fairness_rejected or outcome.rejected_by.value != "fairness"
    )
    if charge_argmax:
        qt = q_tilde(hist, params.sigma2)
        cost = cost + data_dependent_rdp_curve(qt, params.sigma2, orders)

    candidate = tracker.accumulated + RdpCurve(orders=orders, values=cost)
    eps = rdp_to_dp(candidate, tracker.target.delta)
    if eps > tracker.target.epsilon:
        return ChargeStatus.EXHAUSTED
    tracker.accumulated = candidate
    tracker.entries.append(
        LedgerEntry(
            query_index=len(tracker.entries),
            answered=outcome.result is not None,
            rejected_by=outcome.rejected_by.value,
            cost=cost,
            running_eps=eps,
            group=group,
            label=outcome.result,
        )
    )
    return ChargeStatus.CONTINUE


def export_ledger_csv(tracker: BudgetTracker, path) -> None:
    """Write the per-query ledger: index, outcome, per-order cost, running eps."""
    order_cols = [f"rdp_cost_order_{a:g}" for a in tracker.orders]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["query_index", "answered", "rejected_by", "group", "label"]
            + order_cols
            + ["running_eps"]
        )
        for e in tracker.entries:
            writer.writerow(
                [
                    e.query_index,
                    int(e.answered),
                    e.rejected_by,
                    "" if e.group is None else e.group,
                    "" if e.label is None else e.label,
                ]
                + [repr(float(c)) for c in e.cost]
                + [repr(float(e.running_eps))]
            )
