"""Models, per-example gradients, private training, and the disparity loss.

Two small architectures are provided: softmax regression and a one-hidden-
layer tanh MLP. Parameters live in a single flat float64 vector so clipping,
noising, and checkpointing stay trivial. All gradients are written by hand
and checked against central finite differences in the test suite.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .accounting import rdp_to_dp, subsampled_gaussian_curve
from .core import LabeledExample, SeededRng
from .fairness import DEFAULT_VARIANT, DisparityVariant, disparity_from_counts

ARCH_SOFTMAX = "softmax"
ARCH_MLP = "mlp"


@dataclass
class Model:
    """A classifier with flat parameters.

    arch is "softmax" (linear) or "mlp" (one tanh hidden layer of width
    `hidden`). dims: input dimension d, class count num_classes.
    """

    arch: str
    d: int
    num_classes: int
    hidden: int
    params: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if self.arch not in (ARCH_SOFTMAX, ARCH_MLP):
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.arch == ARCH_MLP and self.hidden < 1:
            raise ValueError("mlp needs a positive hidden width")
        expected = param_count(self.arch, self.d, self.num_classes, self.hidden)
        if self.params.shape != (expected,):
            raise ValueError(
                f"expected {expected} parameters for {self.arch}, got {self.params.shape}"
            )

    def predict(self, x: np.ndarray) -> int:
        return predict(self, x)


def param_count(arch: str, d: int, num_classes: int, hidden: int) -> int:
    if arch == ARCH_SOFTMAX:
        return num_classes * d + num_classes
    return hidden * d + hidden + num_classes * hidden + num_classes


def init_model(
    arch: str, d: int, num_classes: int, rng: SeededRng, hidden: int = 0
) -> Model:
    """Fresh model with parameters drawn from N(0, 0.01) (std 0.1)."""
    n = param_count(arch, d, num_classes, hidden)
    params = rng.standard_normal(n) * 0.1
    return Model(arch=arch, d=d, num_classes=num_classes, hidden=hidden,
                 params=params, seed=rng.seed)


def _unpack(model: Model):
    p, d, K, H = model.params, model.d, model.num_classes, model.hidden
    if model.arch == ARCH_SOFTMAX:
        W = p[: K * d].reshape(K, d)
        b = p[K * d:]
        return W, b
    i = 0
    W1 = p[i: i + H * d].reshape(H, d); i += H * d
    b1 = p[i: i + H]; i += H
    W2 = p[i: i + K * H].reshape(K, H); i += K * H
    b2 = p[i:]
    return W1, b1, W2, b2


def forward_batch(model: Model, X: np.ndarray) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Logits for a batch, plus the hidden activations (None for softmax)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.arch == ARCH_SOFTMAX:
        W, b = _unpack(model)
        return X @ W.T + b, None
    W1, b1, W2, b2 = _unpack(model)
    h = np.tanh(X @ W1.T + b1)
    return h @ W2.T + b2, h


def forward(model: Model, x: np.ndarray) -> np.ndarray:
    logits, _ = forward_batch(model, np.asarray(x, dtype=np.float64)[None, :])
    return logits[0]


def predict(model: Model, x: np.ndarray) -> int:
    """Most likely class; ties resolve to the lowest class id."""
    return int(np.argmax(forward(model, x)))


def predict_batch(model: Model, X: np.ndarray) -> np.ndarray:
    logits, _ = forward_batch(model, X)
    return np.argmax(logits, axis=1)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def nll_loss(model: Model, X: np.ndarray, y: np.ndarray) -> float:
    """Mean cross-entropy of the batch."""
    logits, _ = forward_batch(model, X)
    logp = _log_softmax(logits)
    return float(-logp[np.arange(len(y)), np.asarray(y, dtype=int)].mean())


def _backward_per_example(
    model: Model, X: np.ndarray, dlogits: np.ndarray, h: Optional[np.ndarray]
) -> np.ndarray:
    """Per-example flat gradients given upstream logit gradients."""
    n = X.shape[0]
    if model.arch == ARCH_SOFTMAX:
        dW = np.einsum("nk,nd->nkd", dlogits, X).reshape(n, -1)
        return np.concatenate([dW, dlogits], axis=1)
    W1, b1, W2, b2 = _unpack(model)
    dW2 = np.einsum("nk,nh->nkh", dlogits, h).reshape(n, -1)
    dh = dlogits @ W2
    dpre = dh * (1.0 - h * h)
    dW1 = np.einsum("nh,nd->nhd", dpre, X).reshape(n, -1)
    return np.concatenate([dW1, dpre, dW2, dlogits], axis=1)


def _backward_sum(
    model: Model, X: np.ndarray, dlogits: np.ndarray, h: Optional[np.ndarray]
) -> np.ndarray:
    """Sum-over-examples flat gradient given upstream logit gradients."""
    if model.arch == ARCH_SOFTMAX:
        dW = dlogits.T @ X
        return np.concatenate([dW.ravel(), dlogits.sum(axis=0)])
    W1, b1, W2, b2 = _unpack(model)
    dW2 = dlogits.T @ h
    dh = dlogits @ W2
    dpre = dh * (1.0 - h * h)
    dW1 = dpre.T @ X
    return np.concatenate(
        [dW1.ravel(), dpre.sum(axis=0), dW2.ravel(), dlogits.sum(axis=0)]
    )


def per_example_grads(model: Model, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Gradient of the cross-entropy of each example, shape (n, params)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=int)
    logits, h = forward_batch(model, X)
    probs = np.exp(_log_softmax(logits))
    dlogits = probs
    dlogits[np.arange(len(y)), y] -= 1.0
    return _backward_per_example(model, X, dlogits, h)


def per_example_grad(model: Model, x: np.ndarray, y: int) -> np.ndarray:
    """Cross-entropy gradient for a single example."""
    return per_example_grads(model, np.asarray(x)[None, :], np.asarray([y]))[0]


def clip(g: np.ndarray, clip_norm: float) -> np.ndarray:
    """Scale g down to L2 norm clip_norm if it is longer: g / max(1, |g|/C)."""
    if clip_norm <= 0:
        raise ValueError(f"clip_norm must be positive, got {clip_norm}")
    norm = float(np.linalg.norm(g))
    return g / max(1.0, norm / clip_norm)


def dpl(
    model: Model,
    public_X: np.ndarray,
    public_groups: np.ndarray,
    num_groups: int,
    t_soft: float = 0.01,
    variant: DisparityVariant = DEFAULT_VARIANT,
    absolute: bool = False,
) -> Tuple[float, np.ndarray]:
    """Tempered demographic-parity loss and its subgradient.

    Hard per-(group, class) prediction counts are replaced with sums of
    tempered softmax outputs softmax(logits / t_soft), making the worst-case
    disparity differentiable. The loss is the (signed, or absolute when
    absolute=True) maximum entry of the resulting soft disparity matrix; the
    subgradient is taken at the achieving entry, averaging when several
    entries tie exactly.
    """
    if t_soft <= 0:
        raise ValueError(f"t_soft must be positive, got {t_soft}")
    X = np.atleast_2d(np.asarray(public_X, dtype=np.float64))
    groups = np.asarray(public_groups, dtype=int)
    if X.shape[0] != groups.shape[0]:
        raise ValueError("public features and groups must have equal length")
    K = model.num_classes
    logits, h = forward_batch(model, X)
    scaled = logits / t_soft
    scaled -= scaled.max(axis=1, keepdims=True)
    probs = np.exp(scaled)
    probs /= probs.sum(axis=1, keepdims=True)

    soft_counts = np.zeros((num_groups, K))
    np.add.at(soft_counts, groups, probs)
    group_sizes = np.bincount(groups, minlength=num_groups).astype(np.float64)

    gamma = disparity_from_counts(soft_counts, variant)
    scores = np.abs(gamma) if absolute else gamma
    if np.isnan(scores).all():
        raise ValueError(
            "disparity loss undefined: no group has a defined reference "
            "(single-group public set?)"
        )
    value = float(np.nanmax(scores))
    flat = np.where(~np.isnan(scores) & (scores >= value - 1e-12))
    pairs = list(zip(flat[0].tolist(), flat[1].tolist()))

    total = group_sizes.sum()
    dlogits = np.zeros_like(probs)
    for z_star, k_star in pairs:
        sign = 1.0
        if absolute and gamma[z_star, k_star] < 0:
            sign = -1.0
        coef = np.zeros(len(groups))
        if variant is DisparityVariant.TO_OVERALL_NO_DOUBLE_COUNT:
            comp = total - group_sizes[z_star]
            coef[groups == z_star] = 1.0 / group_sizes[z_star]
            coef[groups != z_star] = -1.0 / comp
        elif variant is DisparityVariant.TO_OVERALL:
            coef[:] = -1.0 / total
            coef[groups == z_star] += 1.0 / group_sizes[z_star]
        else:
            # Worst pairwise gap: differentiate through the achieving pair.
            rates = soft_counts / np.where(group_sizes > 0, group_sizes, np.nan)[:, None]
            diffs = rates[z_star, k_star] - rates[:, k_star]
            diffs[z_star] = np.nan
            if np.isnan(diffs).all():
                continue  # no other populated group: this entry is constant 0
            z_other = int(np.nanargmax(np.abs(diffs)))
            pair_sign = 1.0 if diffs[z_other] >= 0 else -1.0
            coef[groups == z_star] = pair_sign / group_sizes[z_star]
            coef[groups == z_other] = -pair_sign / group_sizes[z_other]
        # d(soft count)/d(logits) through the tempered softmax at k_star.
        contrib = (coef * probs[:, k_star])[:, None] * (-probs)
        contrib[:, k_star] += coef * probs[:, k_star]
        dlogits += sign * contrib / t_soft
    dlogits /= len(pairs)
    grad = _backward_sum(model, X, dlogits, h)
    return value, grad


@dataclass(frozen=True)
class DpSgdParams:
    """Private training knobs (one Poisson-sampled noisy step per round)."""

    lr: float = 0.5
    clip_norm: float = 1.0
    noise_multiplier: float = 1.0
    expected_batch: int = 64
    steps: int = 200
    delta: float = 1e-5

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if self.noise_multiplier < 0:
            raise ValueError("noise_multiplier must be nonnegative")
        if self.expected_batch < 1:
            raise ValueError("expected_batch must be >= 1")
        if self.steps < 0:
            raise ValueError("steps must be nonnegative")


@dataclass(frozen=True)
class FairRegParams:
    """Disparity regularizer weight and temperature."""

    lambda_reg: float = 1.0
    t_soft: float = 0.01
    variant: DisparityVariant = DEFAULT_VARIANT

    def __post_init__(self):
        if self.lambda_reg < 0:
            raise ValueError("lambda_reg must be nonnegative")
        if self.t_soft <= 0:
            raise ValueError("t_soft must be positive")


@dataclass(frozen=True)
class TrainingSet:
    """Dense batch view of labeled examples."""

    X: np.ndarray
    groups: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if not (len(self.X) == len(self.groups) == len(self.labels)):
            raise ValueError("features, groups, and labels must align")

    def __len__(self) -> int:
        return len(self.X)

    @classmethod
    def from_examples(cls, examples: Sequence[LabeledExample]) -> "TrainingSet":
        return cls(
            X=np.asarray([ex.features for ex in examples], dtype=np.float64),
            groups=np.asarray([ex.group for ex in examples], dtype=int),
            labels=np.asarray([ex.label for ex in examples], dtype=int),
        )


def _as_training_set(data) -> TrainingSet:
    if isinstance(data, TrainingSet):
        return data
    return TrainingSet.from_examples(list(data))


def dp_sgd_train(
    data,
    model: Model,
    params: DpSgdParams,
    rng: SeededRng,
) -> Tuple[Model, float]:
    """Noisy clipped SGD; returns the trained model and its achieved epsilon.

    Each step Poisson-samples the batch at rate expected_batch / n, clips
    per-example gradients to clip_norm, perturbs their sum with
    N(0, (noise_multiplier * clip_norm)^2), and averages over the realized
    batch size. An empty batch is a charged no-op step. noise_multiplier = 0
    with expected_batch = n is exact full-batch gradient descent (and a
    vacuous, infinite epsilon).
    """
    return fair_dp_sgd_train(data, None, model, params, None, rng)


def fair_dp_sgd_train(
    data,
    public_data,
    model: Model,
    params: DpSgdParams,
    fair_params: Optional[FairRegParams],
    rng: SeededRng,
) -> Tuple[Model, float]:
    """DP-SGD with the disparity loss folded into every per-example gradient.

    The regularizer gradient is computed once per step on the public set at
    the current parameters, scaled by lambda_reg, and added to each example's
    loss gradient before clipping, so the fairness signal is bounded by the
    same clip norm and the privacy cost is unchanged (public data is free).
    With fair_params None or lambda_reg = 0 this is exactly dp_sgd_train.
    """
    train = _as_training_set(data)
    n = len(train)
    if params.expected_batch > n:
        raise ValueError(
            f"expected_batch {params.expected_batch} exceeds dataset size {n}"
        )
    if params.noise_multiplier > 0 and not math.isfinite(params.clip_norm):
        raise ValueError("noisy training requires a finite clip norm")
    use_reg = fair_params is not None and fair_params.lambda_reg > 0
    if use_reg:
        pub = _as_training_set(public_data)
        num_groups = int(max(train.groups.max(), pub.groups.max())) + 1

    q = params.expected_batch / n
    theta = model.params.copy()
    work = replace(model, params=theta)
    for _ in range(params.steps):
        mask = rng.bernoulli_mask(q, n)
        batch = int(mask.sum())
        if batch == 0:
            continue
        grads = per_example_grads(work, train.X[mask], train.labels[mask])
        if use_reg:
            _, reg_grad = dpl(
                work, pub.X, pub.groups, num_groups,
                t_soft=fair_params.t_soft, variant=fair_params.variant,
            )
            grads = grads + fair_params.lambda_reg * reg_grad
        norms = np.linalg.norm(grads, axis=1)
        scale = np.minimum(1.0, params.clip_norm / np.where(norms > 0, norms, 1.0))
        summed = (grads * scale[:, None]).sum(axis=0)
        if params.noise_multiplier > 0:
            summed = summed + rng.standard_normal(len(theta)) * (
                params.noise_multiplier * params.clip_norm
            )
        theta -= params.lr * summed / batch

    if params.noise_multiplier == 0.0 or params.steps == 0:
        eps = math.inf if params.steps > 0 else 0.0
    else:
        curve = subsampled_gaussian_curve(q, params.noise_multiplier).scaled(params.steps)
        eps = rdp_to_dp(curve, params.delta)
    return replace(model, params=theta), eps


@dataclass(frozen=True)
class StudentParams:
    """Plain (non-private) SGD configuration for student/teacher fitting."""

    arch: str = ARCH_SOFTMAX
    hidden: int = 0
    lr: float = 0.5
    epochs: int = 40
    batch_size: int = 64

    def __post_init__(self):
        if self.lr <= 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("invalid student training configuration")
        if self.arch == ARCH_MLP and self.hidden < 1:
            raise ValueError("mlp student needs a positive hidden width")


def student_train(
    data,
    config: StudentParams,
    rng: SeededRng,
    public_data=None,
    fair_params: Optional[FairRegParams] = None,
    num_classes: Optional[int] = None,
) -> Model:
    """Fit a model by mini-batch SGD on labeled examples.

    Shuffling is driven by the provided rng, so runs are reproducible. When
    fair_params is given the disparity subgradient on public_data is added to
    every mini-batch gradient (in-processing regularization, non-private).
    """
    train = _as_training_set(data)
    n = len(train)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    d = train.X.shape[1]
    if num_classes is None:
        num_classes = int(train.labels.max()) + 1
    use_reg = fair_params is not None and fair_params.lambda_reg > 0
    if use_reg:
        pub = _as_training_set(public_data)
        num_groups = int(max(train.groups.max(), pub.groups.max())) + 1
    model = init_model(config.arch, d, max(num_classes, 2), rng, hidden=config.hidden)
    theta = model.params
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start: start + config.batch_size]
            X, y = train.X[idx], train.labels[idx]
            logits, h = forward_batch(model, X)
            probs = np.exp(_log_softmax(logits))
            probs[np.arange(len(idx)), y] -= 1.0
            grad = _backward_sum(model, X, probs / len(idx), h)
            if use_reg:
                _, reg_grad = dpl(
                    model, pub.X, pub.groups, num_groups,
                    t_soft=fair_params.t_soft, variant=fair_params.variant,
                )
                grad = grad + fair_params.lambda_reg * reg_grad
            theta -= config.lr * grad
    return model


_CHECKPOINT_MAGIC = b"FPCK"


def save_model(model: Model, path) -> None:
    """Checkpoint layout: magic, u32 header length, JSON header, raw float64."""
    header = json.dumps(
        {
            "arch": model.arch,
            "d": model.d,
            "num_classes": model.num_classes,
            "hidden": model.hidden,
            "seed": model.seed,
            "param_count": int(model.params.size),
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(model.params, dtype="<f8").tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _CHECKPOINT_MAGIC:
            raise ValueError(f"not a model checkpoint: bad magic {magic!r}")
        (length,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(length).decode())
        params = np.frombuffer(fh.read(), dtype="<f8").astype(np.float64)
    if params.size != header["param_count"]:
        raise ValueError(
            f"checkpoint truncated: expected {header['param_count']} parameters, "
            f"found {params.size}"
        )
    return Model(
        arch=header["arch"],
        d=header["d"],
        num_classes=header["num_classes"],
        hidden=header["hidden"],
        params=params,
        seed=header.get("seed", 0),
    )
