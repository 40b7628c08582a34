"""Synthetic-task experiment harness.

Generates separable group-structured classification data, trains teacher
ensembles, runs the four pipelines (gated aggregation, private fair
training, and the two ungated-aggregation baselines with pre- or
in-processing), and persists the resulting trade-off records.

Seeding discipline: everything derives from one master seed. Per replicate,
the data / teacher / query / student phases each get their own child stream,
and none of them depends on the (epsilon, gamma) grid coordinates, so runs
at different grid cells of the same replicate share data, teachers, and
noise draws. That is what makes cross-cell comparisons paired and lets a
vacuous-gate run reproduce the ungated aggregator bit for bit.
"""

from __future__ import annotations

import concurrent.futures
import csv
import datetime
import json
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .accounting import (
    BudgetTracker,
    ChargeStatus,
    LedgerEntry,
    calibrate_noise_multiplier,
    charge_query,
)
from .aggregation import (
    AggregatorParams,
    confident_fair_gnmax,
    confident_gnmax,
)
from .core import (
    FRAMEWORKS,
    ExperimentRecord,
    GroupClassCounter,
    LabeledExample,
    PrivacyBudget,
    SeededRng,
    VoteHistogram,
    accuracy,
    coverage,
)
from .fairness import (
    DEFAULT_VARIANT,
    DisparityVariant,
    GateParams,
    disparity_matrix,
    gate_condition,
    max_disparity,
    postprocess_stream,
    preprocess_stream,
)
from .learners import (
    DpSgdParams,
    FairRegParams,
    Model,
    StudentParams,
    TrainingSet,
    fair_dp_sgd_train,
    init_model,
    predict_batch,
    student_train,
)

SCHEMA_VERSION = "1"

# Three-group, two-class reference distribution for the disparity-variant
# comparison experiment: rows are groups, columns are classes.
VARIANT_DEMO_COUNTS = np.array([[324, 287], [420, 274], [445, 250]], dtype=np.int64)


@dataclass(frozen=True)
class SyntheticSpec:
    """Mixture-of-Gaussians task with group-dependent class balance.

    Each example draws a group z from group_weights, a class y from row z of
    class_given_group, and features from N(mean[z, y], cov_scale^2 I). Means
    separate classes strongly and groups weakly, so the label is learnable
    and group membership leaks only mildly into the features. exact_counts
    bypasses sampling and materializes precisely counts[z, k] examples per
    (group, class) cell.
    """

    name: str = "synthetic-default"
    d: int = 20
    num_groups: int = 2
    num_classes: int = 2
    n: int = 20000
    group_weights: Optional[Tuple[float, ...]] = None
    class_given_group: Optional[Tuple[Tuple[float, ...], ...]] = ((0.8, 0.2), (0.2, 0.8))
    class_sep: float = 3.0
    group_sep: float = 0.5
    cov_scale: float = 1.0
    splits: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    exact_counts: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        if self.d < 1 or self.num_groups < 1 or self.num_classes < 2:
            raise ValueError("need d >= 1, at least one group, two classes")
        if abs(sum(self.splits) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {self.splits}")
        if self.group_weights is not None:
            if len(self.group_weights) != self.num_groups:
                raise ValueError("group_weights length must equal num_groups")
            if abs(sum(self.group_weights) - 1.0) > 1e-9:
                raise ValueError("group_weights must sum to 1")
        if self.class_given_group is not None:
            rows = self.class_given_group
            if len(rows) != self.num_groups:
                raise ValueError("class_given_group needs one row per group")
            for row in rows:
                if len(row) != self.num_classes:
                    raise ValueError("class_given_group rows need one entry per class")
                if abs(sum(row) - 1.0) > 1e-9:
                    raise ValueError("class_given_group rows must sum to 1")

    @classmethod
    def from_counts(cls, counts, d: int = 20, name: str = "synthetic-counts",
                    **kwargs) -> "SyntheticSpec":
        counts = np.asarray(counts, dtype=np.int64)
        return cls(
            name=name,
            d=d,
            num_groups=counts.shape[0],
            num_classes=counts.shape[1],
            n=int(counts.sum()),
            class_given_group=None,
            exact_counts=tuple(tuple(int(c) for c in row) for row in counts),
            **kwargs,
        )


@dataclass(frozen=True)
class DatasetSplits:
    train: TrainingSet
    public: TrainingSet
    test: TrainingSet
    num_groups: int
    num_classes: int
    name: str


def _categorical(rng: SeededRng, weights: np.ndarray, n: int) -> np.ndarray:
    """n draws from a categorical distribution via one uniform each."""
    cum = np.cumsum(weights)
    cum[-1] = 1.0
    return np.searchsorted(cum, rng.uniform(n), side="right").astype(int)


def generate(spec: SyntheticSpec, seed: int) -> DatasetSplits:
    """Deterministically materialize the synthetic task from one seed.

    Draw order: group ids, then class ids (or a permutation of the exact
    count layout), then mixture means, then feature noise, then the split
    shuffle. Two calls with equal spec and seed produce identical bytes.
    """
    rng = SeededRng(seed)
    Z, K, n = spec.num_groups, spec.num_classes, spec.n

    if spec.exact_counts is not None:
        counts = np.asarray(spec.exact_counts, dtype=np.int64)
        z = np.repeat(
            np.arange(Z).repeat(K), counts.reshape(-1)
        )
        y = np.repeat(np.tile(np.arange(K), Z), counts.reshape(-1))
        order = rng.permutation(n)
        z, y = z[order], y[order]
    else:
        gw = np.asarray(
            spec.group_weights if spec.group_weights is not None
            else [1.0 / Z] * Z
        )
        z = _categorical(rng, gw, n)
        cls_rows = np.asarray(spec.class_given_group, dtype=np.float64)
        u = rng.uniform(n)
        cum = np.cumsum(cls_rows, axis=1)
        cum[:, -1] = 1.0
        y = np.array([int(np.searchsorted(cum[g], uu, side="right"))
                      for g, uu in zip(z, u)])

    class_dirs = rng.standard_normal((K, spec.d))
    class_dirs /= np.linalg.norm(class_dirs, axis=1, keepdims=True)
    group_dirs = rng.standard_normal((Z, spec.d))
    group_dirs /= np.linalg.norm(group_dirs, axis=1, keepdims=True)
    means = spec.class_sep * class_dirs[None, :, :] + spec.group_sep * group_dirs[:, None, :]

    X = means[z, y] + spec.cov_scale * rng.standard_normal((n, spec.d))

    order = rng.permutation(n)
    X, z, y = X[order], z[order], y[order]
    n_train = int(spec.splits[0] * n)
    n_public = int(spec.splits[1] * n)

    def cut(a, b):
        return TrainingSet(X=X[a:b], groups=z[a:b], labels=y[a:b])

    return DatasetSplits(
        train=cut(0, n_train),
        public=cut(n_train, n_train + n_public),
        test=cut(n_train + n_public, n),
        num_groups=Z,
        num_classes=K,
        name=spec.name,
    )


def partition_teachers(train: TrainingSet, num_teachers: int) -> List[TrainingSet]:
    """Disjoint exhaustive shards with sizes differing by at most one."""
    n = len(train)
    if not (1 <= num_teachers <= n):
        raise ValueError(f"need 1 <= teachers <= {n}, got {num_teachers}")
    return [
        TrainingSet(X=train.X[idx], groups=train.groups[idx], labels=train.labels[idx])
        for idx in np.array_split(np.arange(n), num_teachers)
    ]


@dataclass(frozen=True)
class HarnessConfig:
    """Desk-scale defaults for the experiment pipelines."""

    num_teachers: int = 50
    num_queries: int = 1000
    delta: float = 1e-5
    min_count: int = 20
    aggregator: AggregatorParams = field(
        default_factory=lambda: AggregatorParams(threshold=25.0, sigma1=60.0, sigma2=8.0)
    )
    teacher_params: StudentParams = field(
        default_factory=lambda: StudentParams(lr=0.5, epochs=30, batch_size=64)
    )
    student_params: StudentParams = field(
        default_factory=lambda: StudentParams(lr=0.5, epochs=60, batch_size=32)
    )
    # The published aggregation analysis treats a fairness rejection as free
    # post-processing of the noisy argmax; the tracker's own conservative
    # default charges it. The pipelines here follow the published analysis.
    charge_fairness_rejected: bool = False
    variant: DisparityVariant = DEFAULT_VARIANT
    dpsgd: DpSgdParams = field(
        default_factory=lambda: DpSgdParams(lr=0.5, clip_norm=2.0, expected_batch=256,
                                            steps=150, delta=1e-5)
    )
    fair_t_soft: float = 0.01
    gamma_post: float = 0.1       # inference gate for the private-training runs
    lambda_inproc: float = 2.0    # regularizer weight for the in-processing baseline


@dataclass
class RunContext:
    """Data, teachers, and precomputed votes shared by runs of one replicate."""

    splits: DatasetSplits
    teachers: List[Model]
    votes: np.ndarray            # (num_public_queries, num_classes)
    config: HarnessConfig
    master_seed: int
    replicate: int


@dataclass
class RunResult:
    record: ExperimentRecord
    student: Optional[Model]
    entries: List[LedgerEntry]
    tracker: Optional[BudgetTracker]
    test_predictions: List[Optional[int]]


def train_teachers(
    train: TrainingSet,
    num_teachers: int,
    params: StudentParams,
    rng: SeededRng,
    num_classes: int,
) -> List[Model]:
    shards = partition_teachers(train, num_teachers)
    return [
        student_train(shard, params, rng.child("teacher", i), num_classes=num_classes)
        for i, shard in enumerate(shards)
    ]


def teacher_vote_matrix(teachers: Sequence[Model], X: np.ndarray, num_classes: int) -> np.ndarray:
    """Vote histogram per query row; equals collect_votes query by query."""
    votes = np.zeros((len(X), num_classes), dtype=np.int64)
    for t in teachers:
        labels = predict_batch(t, X)
        votes[np.arange(len(X)), labels] += 1
    return votes


def prepare_context(
    spec: SyntheticSpec,
    config: HarnessConfig,
    master_seed: int,
    replicate: int,
    with_teachers: bool = True,
) -> RunContext:
    data_seed = SeededRng.derive(master_seed, "data", replicate)
    splits = generate(spec, data_seed)
    n_queries = min(config.num_queries, len(splits.public))
    teachers: List[Model] = []
    votes = np.zeros((n_queries, splits.num_classes), dtype=np.int64)
    if with_teachers:
        rng_teachers = SeededRng(SeededRng.derive(master_seed, "teachers", replicate))
        teachers = train_teachers(
            splits.train, config.num_teachers, config.teacher_params,
            rng_teachers, splits.num_classes,
        )
        votes = teacher_vote_matrix(teachers, splits.public.X[:n_queries],
                                    splits.num_classes)
    return RunContext(
        splits=splits, teachers=teachers, votes=votes, config=config,
        master_seed=master_seed, replicate=replicate,
    )


def _safe_max_disparity(
    groups: Sequence[int],
    predictions: Sequence[Optional[int]],
    num_groups: int,
    num_classes: int,
    variant: DisparityVariant,
) -> float:
    """Worst-case disparity over answered predictions; 0 when undefined."""
    answered = [(z, p) for z, p in zip(groups, predictions) if p is not None]
    if not answered:
        warnings.warn("no answered predictions; reporting zero disparity",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    zs, ps = zip(*answered)
    gamma = disparity_matrix(zs, ps, num_groups, num_classes, variant)
    if np.isnan(gamma).all():
        warnings.warn("disparity undefined on answered predictions; reporting zero",
                      RuntimeWarning, stacklevel=2)
        return 0.0
    return max_disparity(gamma)


def _evaluate_student(
    ctx: RunContext,
    student: Model,
    gate: GateParams,
) -> Tuple[float, float, float, List[Optional[int]]]:
    """Test accuracy / disparity / acceptance through the inference gate."""
    test = ctx.splits.test
    raw = predict_batch(student, test.X)
    gated = postprocess_stream(
        test.groups.tolist(), raw.tolist(), gate,
        num_groups=ctx.splits.num_groups, num_classes=ctx.splits.num_classes,
    )
    acc = accuracy(gated, test.labels.tolist())
    disp = _safe_max_disparity(
        test.groups.tolist(), gated, ctx.splits.num_groups,
        ctx.splits.num_classes, ctx.config.variant,
    )
    cov = coverage(gated)
    return acc, disp, cov, gated


def _aggregation_run(
    ctx: RunContext,
    eps_spec: float,
    gate: Optional[GateParams],
) -> Tuple[List[Tuple[np.ndarray, int, int]], BudgetTracker, int]:
    """Stream public queries through the (optionally gated) aggregator.

    Returns the answered (features, group, label) triples, the tracker, and
    the number of queries processed before budget exhaustion or stream end.
    The final would-exceed query is rolled back entirely: its gate bookkeeping
    is undone and it is not charged, so achieved epsilon never passes spec.
    """
    cfg = ctx.config
    agg = replace(cfg.aggregator, gate=gate)
    tracker = BudgetTracker(
        PrivacyBudget(epsilon=eps_spec, delta=cfg.delta),
        charge_fairness_rejected=cfg.charge_fairness_rejected,
    )
    rng_query = SeededRng(SeededRng.derive(ctx.master_seed, "query", ctx.replicate))
    public = ctx.splits.public
    n_queries = len(ctx.votes)
    m = GroupClassCounter(ctx.splits.num_groups, ctx.splits.num_classes)
    answered: List[Tuple[np.ndarray, int, int]] = []
    processed = 0
    for i in range(n_queries):
        hist = VoteHistogram(votes=ctx.votes[i], teacher_count=len(ctx.teachers))
        z = int(public.groups[i])
        snapshot = m.snapshot()
        if gate is not None:
            outcome = confident_fair_gnmax(hist, z, m, agg, rng_query)
        else:
            outcome = confident_gnmax(hist, agg, rng_query)
        status = charge_query(tracker, outcome, hist, agg, group=z)
        if status is ChargeStatus.EXHAUSTED:
            m.restore(snapshot)
            break
        processed += 1
        if outcome.result is not None:
            answered.append((public.X[i], z, int(outcome.result)))
    return answered, tracker, processed


def run_fairpate(
    ctx: RunContext, eps_spec: float, gamma_spec: float
) -> RunResult:
    """Gated aggregation pipeline: gate at the aggregator and at inference.

    Coverage is the fraction of the public query stream actually answered;
    queries lost to consensus, fairness, or budget exhaustion (including the
    never-processed tail) all count against it.
    """
    cfg = ctx.config
    gate = GateParams(rho_fair=gamma_spec, min_count=cfg.min_count, variant=cfg.variant)
    answered, tracker, _ = _aggregation_run(ctx, eps_spec, gate)
    n_queries = len(ctx.votes)
    student = _fit_student(ctx, answered)
    acc, disp, _, gated = _evaluate_student(ctx, student, gate)
    record = ExperimentRecord(
        framework="fairpate",
        eps_spec=eps_spec,
        fairness_spec=gamma_spec,
        eps_achieved=tracker.current_epsilon(),
        max_disparity=disp,
        accuracy=acc,
        coverage=len(answered) / n_queries if n_queries else 0.0,
        seed=ctx.replicate,
    )
    return RunResult(record=record, student=student, entries=tracker.entries,
                     tracker=tracker, test_predictions=gated)


def _fit_student(ctx: RunContext, answered: List[Tuple[np.ndarray, int, int]],
                 fair_params: Optional[FairRegParams] = None) -> Model:
    cfg = ctx.config
    rng_student = SeededRng(SeededRng.derive(ctx.master_seed, "student", ctx.replicate))
    if not answered:
        # Nothing to learn from; an untrained model keeps the record honest.
        return init_model(cfg.student_params.arch, ctx.splits.train.X.shape[1],
                          ctx.splits.num_classes, rng_student,
                          hidden=cfg.student_params.hidden)
    X = np.stack([a[0] for a in answered])
    z = np.array([a[1] for a in answered], dtype=int)
    y = np.array([a[2] for a in answered], dtype=int)
    data = TrainingSet(X=X, groups=z, labels=y)
    return student_train(
        data, cfg.student_params, rng_student,
        public_data=ctx.splits.public if fair_params else None,
        fair_params=fair_params,
        num_classes=ctx.splits.num_classes,
    )


def run_baseline_placement(
    ctx: RunContext, eps_spec: float, gamma_spec: float, placement: str
) -> RunResult:
    """Ungated aggregation with fairness bolted on before or inside training.

    placement "pre": the answered queries pass through the streaming
    training-set filter (gating on the answered label) before the student
    fit. Coverage counts a query only if it survives both the aggregator and
    that filter, so the wasted privacy of filtered-away answers is visible.

    placement "in": the student fit carries the disparity regularizer on the
    public set. Coverage is the aggregator's answer rate.

    Both evaluate through the same inference-time gate as the gated pipeline.
    """
    if placement not in ("pre", "in"):
        raise ValueError(f"placement must be 'pre' or 'in', got {placement!r}")
    cfg = ctx.config
    answered, tracker, _ = _aggregation_run(ctx, eps_spec, gate=None)
    n_queries = len(ctx.votes)
    gate = GateParams(rho_fair=gamma_spec, min_count=cfg.min_count, variant=cfg.variant)

    if placement == "pre":
        examples = [
            LabeledExample(features=x, group=z, label=y) for x, z, y in answered
        ]
        kept = preprocess_stream(examples, gate)
        training = [(ex.features, ex.group, ex.label) for ex in kept]
        student = _fit_student(ctx, training)
        cov = len(kept) / n_queries if n_queries else 0.0
        framework = "pate_pre"
    else:
        fair = FairRegParams(lambda_reg=cfg.lambda_inproc, t_soft=max(cfg.fair_t_soft, 0.1),
                             variant=cfg.variant)
        student = _fit_student(ctx, answered, fair_params=fair)
        cov = len(answered) / n_queries if n_queries else 0.0
        framework = "pate_in"

    acc, disp, _, gated = _evaluate_student(ctx, student, gate)
    record = ExperimentRecord(
        framework=framework,
        eps_spec=eps_spec,
        fairness_spec=gamma_spec,
        eps_achieved=tracker.current_epsilon(),
        max_disparity=disp,
        accuracy=acc,
        coverage=cov,
        seed=ctx.replicate,
    )
    return RunResult(record=record, student=student, entries=tracker.entries,
                     tracker=tracker, test_predictions=gated)


def run_fairdpsgd(
    ctx: RunContext, eps_spec: float, lambda_reg: float
) -> RunResult:
    """Private fair training on the pooled private split.

    The noise multiplier is calibrated so the subsampled accountant lands at
    or below eps_spec. The public split feeds the disparity regularizer at
    no privacy cost. Coverage is the inference-time gate acceptance rate.
    """
    cfg = ctx.config
    train = ctx.splits.train
    dp = cfg.dpsgd
    q = dp.expected_batch / len(train)
    sigma = calibrate_noise_multiplier(q, dp.steps, cfg.delta, eps_spec)
    dp = replace(dp, noise_multiplier=sigma, delta=cfg.delta)
    rng = SeededRng(SeededRng.derive(ctx.master_seed, "dpsgd", ctx.replicate))
    model = init_model("softmax", train.X.shape[1], ctx.splits.num_classes, rng)
    fair = FairRegParams(lambda_reg=lambda_reg, t_soft=max(cfg.fair_t_soft, 0.1),
                         variant=cfg.variant)
    student, eps = fair_dp_sgd_train(
        train, ctx.splits.public, model, dp, fair, rng,
    )
    gate = GateParams(rho_fair=cfg.gamma_post, min_count=cfg.min_count,
                      variant=cfg.variant)
    acc, disp, cov, gated = _evaluate_student(ctx, student, gate)
    record = ExperimentRecord(
        framework="fairdpsgd",
        eps_spec=eps_spec,
        fairness_spec=lambda_reg,
        eps_achieved=eps,
        max_disparity=disp,
        accuracy=acc,
        coverage=cov,
        seed=ctx.replicate,
    )
    return RunResult(record=record, student=student, entries=[], tracker=None,
                     test_predictions=gated)


def replay_gate_soundness(
    entries: Sequence[LedgerEntry],
    gate: GateParams,
    num_groups: int,
    num_classes: int,
) -> bool:
    """Re-trace a run's ledger and confirm every accept obeyed the gate.

    Rebuilds the counter from the answered entries in order; after the
    cold-start phase each accept must have had a gate value strictly below
    rho_fair (or an empty reference). Raises AssertionError with the first
    offending query index; returns True when the whole ledger replays clean
    and the final counter total equals the answered count.
    """
    m = GroupClassCounter(num_groups, num_classes)
    answered = 0
    for e in entries:
        if not e.answered:
            continue
        z, k = int(e.group), int(e.label)
        if m.group_total(z) >= gate.min_count and gate.rho_fair < 1.0:
            value = gate_condition(m, z, k, gate.variant)
            if value is not None and not (value < gate.rho_fair):
                raise AssertionError(
                    f"query {e.query_index}: accepted with gate value {value:.6f} "
                    f">= rho_fair {gate.rho_fair}"
                )
        m.increment(z, k)
        answered += 1
    if m.total() != answered:
        raise AssertionError(
            f"counter total {m.total()} != answered count {answered}"
        )
    return True


@dataclass(frozen=True)
class GridSpec:
    """Sweep definition: framework x eps values x fairness values x replicates."""

    framework: str = "fairpate"
    eps_values: Tuple[float, ...] = (1.0, 2.0, 3.0)
    fairness_values: Tuple[float, ...] = (0.01, 0.05, 0.1)
    replicates: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if self.framework not in FRAMEWORKS:
            raise ValueError(f"unknown framework {self.framework!r}")
        if not self.eps_values or not self.fairness_values or not self.replicates:
            raise ValueError("grid axes must be nonempty")
        if any(e <= 0 for e in self.eps_values):
            raise ValueError("eps values must be positive")


def run_cell(
    spec: SyntheticSpec,
    config: HarnessConfig,
    master_seed: int,
    framework: str,
    eps_spec: float,
    fairness_spec: float,
    replicate: int,
) -> RunResult:
    """One grid cell, self-contained (safe to run in a worker process)."""
    ctx = prepare_context(
        spec, config, master_seed, replicate,
        with_teachers=framework != "fairdpsgd",
    )
    if framework == "fairpate":
        return run_fairpate(ctx, eps_spec, fairness_spec)
    if framework == "pate_pre":
        return run_baseline_placement(ctx, eps_spec, fairness_spec, "pre")
    if framework == "pate_in":
        return run_baseline_placement(ctx, eps_spec, fairness_spec, "in")
    if framework == "fairdpsgd":
        return run_fairdpsgd(ctx, eps_spec, fairness_spec)
    raise ValueError(f"unknown framework {framework!r}")


def _run_cell_args(args) -> Tuple[int, RunResult]:
    index, spec, config, master_seed, framework, eps, fair, rep = args
    return index, run_cell(spec, config, master_seed, framework, eps, fair, rep)


def run_grid(
    spec: SyntheticSpec,
    grid: GridSpec,
    config: HarnessConfig,
    master_seed: int,
    jobs: int = 1,
) -> List[RunResult]:
    """Run every grid cell; cell order is (replicate, eps, fairness)."""
    cells = [
        (i, spec, config, master_seed, grid.framework, eps, fair, rep)
        for i, (rep, eps, fair) in enumerate(
            (rep, eps, fair)
            for rep in grid.replicates
            for eps in grid.eps_values
            for fair in grid.fairness_values
        )
    ]
    if jobs <= 1:
        return [_run_cell_args(c)[1] for c in cells]
    results: Dict[int, RunResult] = {}
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        for index, result in pool.map(_run_cell_args, cells):
            results[index] = result
    return [results[i] for i in sorted(results)]


def persist(
    records: Sequence[ExperimentRecord],
    path,
    dataset: str,
    master_seed: int,
    generated_at: Optional[str] = None,
) -> None:
    """Write the trade-off records with schema metadata as JSON."""
    if generated_at is None:
        generated_at = (
            datetime.datetime.now(datetime.timezone.utc)
            .replace(microsecond=0)
            .isoformat()
        )
    doc = {
        "meta": {
            "schema_version": SCHEMA_VERSION,
            "dataset": dataset,
            "generated_at": generated_at,
            "master_seed": int(master_seed),
        },
        "records": [r.to_dict() for r in records],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def persist_csv(records: Sequence[ExperimentRecord], path) -> None:
    """CSV mirror of the JSON records with identical column names."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ExperimentRecord.FIELD_NAMES)
        for r in records:
            writer.writerow([getattr(r, name) for name in ExperimentRecord.FIELD_NAMES])


def load(path) -> Tuple[List[ExperimentRecord], dict]:
    """Read records back; malformed input raises with position/field detail."""
    with open(path) as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    if not isinstance(doc, dict) or "records" not in doc or "meta" not in doc:
        raise ValueError(f"{path}: expected an object with 'meta' and 'records'")
    meta = doc["meta"]
    version = str(meta.get("schema_version", ""))
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})"
        )
    records = [ExperimentRecord.from_dict(row) for row in doc["records"]]
    return records, meta


def variant_comparison(
    counts: np.ndarray = VARIANT_DEMO_COUNTS,
    rho_fair: float = 0.03,
    min_count: int = 30,
    seed: int = 7,
) -> Dict[DisparityVariant, int]:
    """Answered-query totals when the inference gate uses each variant.

    Streams one (group, label) query per example of the count table, in one
    shared shuffled order, through the post-processing gate configured with
    each disparity variant in turn. Looser reference definitions answer more
    queries; the totals quantify how much the variant choice matters.
    """
    counts = np.asarray(counts, dtype=np.int64)
    rng = SeededRng(seed)
    z = np.repeat(np.arange(counts.shape[0]).repeat(counts.shape[1]), counts.reshape(-1))
    y = np.repeat(np.tile(np.arange(counts.shape[1]), counts.shape[0]), counts.reshape(-1))
    order = rng.permutation(len(z))
    z, y = z[order].tolist(), y[order].tolist()
    totals: Dict[DisparityVariant, int] = {}
    for variant in DisparityVariant:
        gate = GateParams(rho_fair=rho_fair, min_count=min_count, variant=variant)
        out = postprocess_stream(z, y, gate, num_groups=counts.shape[0],
                                 num_classes=counts.shape[1])
        totals[variant] = sum(1 for p in out if p is not None)
    return totals
