"""Shared primitives: example/record types, counters, and seeded randomness.

Everything downstream (aggregation, accounting, harness) builds on the types
here, so this module has no dependencies on the rest of the package.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import ndtri

# Frameworks whose runs are driven by explicit (epsilon, gamma) constraints.
CONSTRAINT_FRAMEWORKS = ("fairpate", "pate_pre", "pate_in")
FRAMEWORKS = CONSTRAINT_FRAMEWORKS + ("fairdpsgd",)


@dataclass(frozen=True)
class LabeledExample:
    """A single example: feature vector, sensitive group id, class label."""

    features: np.ndarray
    group: int
    label: int
    is_public: bool = False

    def __post_init__(self):
        if self.group < 0:
            raise ValueError(f"group must be nonnegative, got {self.group}")
        if self.label < 0:
            raise ValueError(f"label must be nonnegative, got {self.label}")


class GroupClassCounter:
    """Mutable answer counts m(z, k) for one run.

    Tracks how many accepted answers each (group, class) cell has received.
    One counter instance belongs to exactly one stream/run; nothing here is
    shared across runs.
    """

    def __init__(self, num_groups: int, num_classes: int):
        if num_groups < 1 or num_classes < 1:
            raise ValueError("counter needs at least one group and one class")
        self.num_groups = num_groups
        self.num_classes = num_classes
        self._m = np.zeros((num_groups, num_classes), dtype=np.int64)

    def increment(self, group: int, label: int) -> None:
        if not (0 <= group < self.num_groups and 0 <= label < self.num_classes):
            raise ValueError(
                f"cell ({group}, {label}) outside "
                f"{self.num_groups}x{self.num_classes} counter"
            )
        self._m[group, label] += 1

    def count(self, group: int, label: int) -> int:
        return int(self._m[group, label])

    def group_total(self, group: int) -> int:
        return int(self._m[group].sum())

    def complement_count(self, group: int, label: int) -> int:
        """Answers with class `label` from every group other than `group`."""
        return int(self._m[:, label].sum() - self._m[group, label])

    def complement_total(self, group: int) -> int:
        """All answers from every group other than `group`."""
        return int(self._m.sum() - self._m[group].sum())

    def total(self) -> int:
        return int(self._m.sum())

    def snapshot(self) -> np.ndarray:
        return self._m.copy()

    def restore(self, state: np.ndarray) -> None:
        self._m[...] = state

    def as_array(self) -> np.ndarray:
        """Read-only view of the counts, shape (num_groups, num_classes)."""
        view = self._m.view()
        view.flags.writeable = False
        return view


@dataclass(frozen=True)
class VoteHistogram:
    """Per-class teacher vote counts for a single query."""

    votes: np.ndarray
    teacher_count: int

    def __post_init__(self):
        votes = np.asarray(self.votes, dtype=np.int64)
        object.__setattr__(self, "votes", votes)
        if votes.ndim != 1 or votes.size < 1:
            raise ValueError("votes must be a nonempty 1-D array")
        if (votes < 0).any():
            raise ValueError("votes must be nonnegative")
        if int(votes.sum()) != self.teacher_count:
            raise ValueError(
                f"votes sum to {int(votes.sum())}, expected teacher_count={self.teacher_count}"
            )

    @property
    def num_classes(self) -> int:
        return int(self.votes.size)


@dataclass(frozen=True)
class PrivacyBudget:
    """An (epsilon, delta) differential privacy budget."""

    epsilon: float
    delta: float

    def __post_init__(self):
        if not (self.epsilon >= 0.0):
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must be in [0, 1], got {self.delta}")


@dataclass(frozen=True)
class ExperimentRecord:
    """One point in the (privacy, fairness, utility) trade-off space.

    Float fields are rounded to 6 decimals at construction so that JSON and
    CSV round-trips are exact and downstream dominance checks are stable.
    """

    framework: str
    eps_spec: float
    fairness_spec: float
    eps_achieved: float
    max_disparity: float
    accuracy: float
    coverage: float
    seed: int

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"unknown framework {self.framework!r}")
        for name in ("eps_spec", "fairness_spec", "eps_achieved",
                     "max_disparity", "accuracy", "coverage"):
            value = getattr(self, name)
            object.__setattr__(self, name, round(float(value), 6))
        if not (0.0 <= self.coverage <= 1.0):
            raise ValueError(f"coverage must be in [0, 1], got {self.coverage}")
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValueError(f"accuracy must be in [0, 1], got {self.accuracy}")
        if self.framework in CONSTRAINT_FRAMEWORKS:
            if self.eps_achieved > self.eps_spec + 1e-9:
                raise ValueError(
                    f"eps_achieved={self.eps_achieved} exceeds eps_spec={self.eps_spec}"
                )

    FIELD_NAMES = ("framework", "eps_spec", "fairness_spec", "eps_achieved",
                   "max_disparity", "accuracy", "coverage", "seed")

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELD_NAMES}

    @classmethod
    def from_dict(cls, row: dict) -> "ExperimentRecord":
        missing = [name for name in cls.FIELD_NAMES if name not in row]
        if missing:
            raise ValueError(f"record missing required field(s): {', '.join(missing)}")
        extra = sorted(set(row) - set(cls.FIELD_NAMES))
        if extra:
            warnings.warn(
                f"ignoring unknown record field(s): {', '.join(extra)}",
                RuntimeWarning,
                stacklevel=2,
            )
        return cls(
            framework=str(row["framework"]),
            eps_spec=float(row["eps_spec"]),
            fairness_spec=float(row["fairness_spec"]),
            eps_achieved=float(row["eps_achieved"]),
            max_disparity=float(row["max_disparity"]),
            accuracy=float(row["accuracy"]),
            coverage=float(row["coverage"]),
            seed=int(row["seed"]),
        )


_TWO_POW_53 = float(1 << 53)


class SeededRng:
    """Deterministic random source: PCG64 uniforms + inverse-CDF Gaussians.

    The underlying bit generator is numpy's PCG64 seeded with a 64-bit
    unsigned integer. Gaussian draws use the inverse-CDF transform: a 53-bit
    uniform is mapped to (k + 0.5) / 2^53, strictly inside (0, 1), and pushed
    through the standard normal quantile function (scipy.special.ndtri).
    Exactly one 53-bit uniform is consumed per Gaussian variate, so draw
    sequences are reproducible across platforms and scale linearly in sigma.
    """

    ALGORITHM = "pcg64+inverse-cdf"

    def __init__(self, seed: int):
        if not (0 <= int(seed) < 2**64):
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    @staticmethod
    def derive(seed: int, *tags) -> int:
        """Stable 64-bit child seed from a parent seed and a tag tuple.

        SHA-256 over the decimal seed and the repr of each tag, truncated to
        64 bits. Used to give each grid cell / pipeline phase its own stream.
        """
        h = hashlib.sha256()
        h.update(str(int(seed)).encode())
        for tag in tags:
            h.update(b"\x1f")
            h.update(repr(tag).encode())
        return int.from_bytes(h.digest()[:8], "big")

    def child(self, *tags) -> "SeededRng":
        return SeededRng(self.derive(self.seed, *tags))

    def gaussian(self, sigma: float) -> float:
        """One N(0, sigma^2) draw. sigma == 0 returns exactly 0.0."""
        if sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {sigma}")
        if sigma == 0.0:
            return 0.0
        k = self._gen.integers(0, 1 << 53)
        u = (k + 0.5) / _TWO_POW_53
        return float(sigma * ndtri(u))

    def standard_normal(self, size) -> np.ndarray:
        """Vector of N(0, 1) draws via the same inverse-CDF transform."""
        k = self._gen.integers(0, 1 << 53, size=size)
        return ndtri((k + 0.5) / _TWO_POW_53)

    def uniform(self, size=None) -> np.ndarray:
        return self._gen.random(size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def bernoulli_mask(self, rate: float, n: int) -> np.ndarray:
        """Independent inclusion mask: n uniforms compared against rate."""
        if not (0.0 <= rate <= 1.0):
            raise ValueError(f"rate must be in [0, 1], got {rate}")
        return self._gen.random(n) < rate

    def multinomial(self, n: int, pvals) -> np.ndarray:
        return self._gen.multinomial(n, pvals)


def accuracy(predictions: Sequence[Optional[int]], truth: Sequence[int]) -> float:
    """Fraction of answered predictions that match the ground truth.

    Rejected queries (None) are excluded from both numerator and denominator.
    If nothing was answered the result is 0.0 and a RuntimeWarning flags it.
    """
    if len(predictions) != len(truth):
        raise ValueError(
            f"length mismatch: {len(predictions)} predictions vs {len(truth)} labels"
        )
    answered = [(p, t) for p, t in zip(predictions, truth) if p is not None]
    if not answered:
        warnings.warn("accuracy over zero answered predictions", RuntimeWarning,
                      stacklevel=2)
        return 0.0
    return sum(1 for p, t in answered if p == t) / len(answered)


def coverage(predictions: Sequence[Optional[int]]) -> float:
    """Fraction of queries answered (prediction is not None).

    Empty input is vacuously covered: returns 1.0 with a RuntimeWarning.
    """
    if len(predictions) == 0:
        warnings.warn("coverage of an empty prediction sequence", RuntimeWarning,
                      stacklevel=2)
        return 1.0
    return sum(1 for p in predictions if p is not None) / len(predictions)
