"""Head optimization and data-split protocols.

Training minimizes mean cross-entropy plus an L2 penalty on weight matrices
with a hand-rolled Adam loop. Masks are redrawn every step from the layer
keep-probability priors (fixed value in baseline mode); when posterior mode
is on, every observed mask feeds the layer's Beta counts, so the model that
leaves training carries the conjugate posterior its predictions sample from.

Split plans cover the evaluation protocols: zero-shot, k-shot, stratified
fraction splits, and k-fold cross-validation, all deterministic in the seed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from . import rngstream
from .bayes_dropout import DropoutHead, beta_posterior_update, draw_masks, softmax
from .errors import ConfigError, DataError, NumericError
from .kernels import kernel_map

if TYPE_CHECKING:
    from .data_io import EmbeddingDataset


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-2
    adam_epsilon: float = 1e-8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    l2: float = 0.0
    batch_size: int = 16
    early_stop_patience: int = 10
    validation_fraction: float = 0.1
    seed: int = 0
    mc_passes_eval: int = 50
    # draw prediction keep-probs from the mask-count posterior and accumulate
    # counts during training; False fixes keep-probs at prior draws throughout
    use_posterior: bool = True

    def validate(self) -> None:
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not (self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (self.adam_epsilon > 0):
            raise ConfigError(f"adam_epsilon must be > 0, got {self.adam_epsilon}")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must lie in (0,1), got {v}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (0.0 <= self.validation_fraction < 1.0):
            raise ConfigError(f"validation_fraction must lie in [0,1), got {self.validation_fraction}")
        if self.early_stop_patience < 0 or self.early_stop_patience > self.epochs:
            raise ConfigError(
                f"early_stop_patience must lie in [0, epochs], got {self.early_stop_patience}"
            )
        if self.mc_passes_eval < 1:
            raise ConfigError(f"mc_passes_eval must be >= 1, got {self.mc_passes_eval}")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        cfg = cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
        if "early_stop_patience" not in d:
            cfg.early_stop_patience = min(cfg.early_stop_patience, cfg.epochs)
        cfg.validate()
        return cfg


@dataclass
class SplitPlan:
    """mode: zero_shot | k_shot | fraction | cross_val."""

    mode: str = "fraction"
    k: int = 5
    train_fraction: float = 0.8
    folds: int = 5
    stratified: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.mode not in ("zero_shot", "k_shot", "fraction", "cross_val"):
            raise ConfigError(f"unknown split mode {self.mode!r}")
        if self.mode == "k_shot" and self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.mode == "fraction" and not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(f"train_fraction must lie in (0,1), got {self.train_fraction}")
        if self.mode == "cross_val" and self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")

    def describe(self) -> str:
        if self.mode == "zero_shot":
            return "zero_shot"
        if self.mode == "k_shot":
            return f"{self.k}_shot"
        if self.mode == "fraction":
            return f"fraction_{self.train_fraction:g}"
        return f"cross_val_{self.folds}"

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "SplitPlan":
        plan = cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
        plan.validate()
        return plan


@dataclass
class TrainTrace:
    """Per-epoch losses and the early-stopping outcome."""

    train_losses: list[float] = field(default_factory=list)
    val_losses: list[float | None] = field(default_factory=list)
    stopped_early: bool = False
    best_epoch: int = -1

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        buf.write("epoch,train_loss,val_loss,stopped_early\n")
        for i, (tr, va) in enumerate(zip(self.train_losses, self.val_losses)):
            va_s = "" if va is None else repr(va)
            buf.write(f"{i},{tr!r},{va_s},{int(self.stopped_early)}\n")
        return buf.getvalue()


def map_features(head: DropoutHead, vectors: np.ndarray) -> np.ndarray:
    """Kernel-map a batch of raw embedding rows."""
    return np.stack([kernel_map(v, head.kernel) for v in np.asarray(vectors, dtype=np.float64)])


def _validate_labels(labels: np.ndarray, num_classes: int) -> None:
    bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
    if bad.size:
        i = int(bad[0])
        raise DataError(f"label {int(labels[i])} at index {i} outside [0, {num_classes})")


def _forward_batch(head: DropoutHead, phi: np.ndarray, masks: list[np.ndarray]):
    """Masked batch forward; caches per-layer inputs and pre-activations."""
    h = phi
    inputs, preacts = [], []
    for i, layer in enumerate(head.layers):
        masked = h * masks[i]
        z = masked @ layer.weights.T / np.sqrt(layer.in_dim) + layer.bias
        inputs.append(masked)
        preacts.append(z)
        h = z if i == head.num_layers - 1 else np.maximum(z, 0.0)
    return inputs, preacts, softmax(preacts[-1])


def _loss_from_phi(head: DropoutHead, phi: np.ndarray, labels: np.ndarray, masks) -> float:
    _, preacts, _ = _forward_batch(head, phi, masks)
    logits = preacts[-1]
    # stable mean CE straight from logits
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    ce = -log_probs[np.arange(len(labels)), labels].mean()
    penalty = head.l2 * sum(float((l.weights**2).sum()) for l in head.layers)
    return float(ce + penalty)


def _grads_from_phi(head: DropoutHead, phi: np.ndarray, labels: np.ndarray, masks):
    """Analytic gradients of the training loss w.r.t. every weight and bias."""
    inputs, preacts, probs = _forward_batch(head, phi, masks)
    n = len(labels)
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    grads = []
    for i in range(head.num_layers - 1, -1, -1):
        layer = head.layers[i]
        scale = 1.0 / np.sqrt(layer.in_dim)
        gw = delta.T @ inputs[i] * scale + 2.0 * head.l2 * layer.weights
        gb = delta.sum(axis=0)
        grads.append((gw, gb))
        if i > 0:
            upstream = (delta @ layer.weights) * scale * masks[i]
            delta = upstream * (preacts[i - 1] > 0)
    grads.reverse()
    return grads


def loss(head: DropoutHead, batch: tuple[np.ndarray, np.ndarray], masks: list[np.ndarray]) -> float:
    """Mean cross-entropy plus l2 * sum of squared weights (biases excluded)."""
    vectors, labels = batch
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) == 0:
        raise DataError("loss requires a nonempty batch")
    _validate_labels(labels, head.num_classes)
    phi = map_features(head, vectors)
    return _loss_from_phi(head, phi, labels, masks)


class _Adam:
    def __init__(self, shapes: list[tuple], cfg: TrainConfig):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0
        self.cfg = cfg

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        c = self.cfg
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.adam_beta1
            m += (1 - c.adam_beta1) * g
            v *= c.adam_beta2
            v += (1 - c.adam_beta2) * g * g
            mhat = m / (1 - c.adam_beta1**self.t)
            vhat = v / (1 - c.adam_beta2**self.t)
            p -= c.learning_rate * mhat / (np.sqrt(vhat) + c.adam_epsilon)


# below this many training instances the validation holdout is skipped and
# every epoch runs (few-shot budgets are too small to sacrifice)
_MIN_TRAIN_FOR_HOLDOUT = 20


def _holdout_split(labels: np.ndarray, fraction: float, rng: np.random.Generator):
    n = len(labels)
    n_val = int(round(n * fraction))
    if fraction <= 0 or n < _MIN_TRAIN_FOR_HOLDOUT or n_val < 1 or n_val >= n:
        return np.arange(n), np.array([], dtype=np.int64)
    val: list[int] = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        take = int(round(len(idx) * fraction))
        take = min(take, len(idx) - 1)
        if take > 0:
            val.extend(rng.permutation(idx)[:take].tolist())
    val_idx = np.array(sorted(val), dtype=np.int64)
    fit_idx = np.setdiff1d(np.arange(n), val_idx)
    return fit_idx, val_idx


def train(
    head: DropoutHead,
    data: "EmbeddingDataset",
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
) -> tuple[DropoutHead, TrainTrace]:
    """Adam-train a copy of the head; returns (trained head, trace).

    Per step: draw layer keep-probs from the prior, draw masks, accumulate
    observed masks into the Beta counts when posterior mode is on, and take
    one Adam step on the masked-forward loss. A stratified holdout of
    `validation_fraction` drives early stopping; the returned weights are
    always the best-validation-loss snapshot.
    """
    cfg.validate()
    if rng is None:
        rng = rngstream.stream(cfg.seed, rngstream.TRAIN)
    out = head.clone()
    out.l2 = cfg.l2
    trace = TrainTrace()
    if cfg.epochs == 0:
        return out, trace
    if len(data.labels) == 0:
        raise DataError("cannot train on an empty dataset")

    labels = np.asarray(data.labels, dtype=np.int64)
    _validate_labels(labels, out.num_classes)
    phi = map_features(out, data.vectors)
    out.check_embedding_dim(data.vectors.shape[1])

    fit_idx, val_idx = _holdout_split(labels, cfg.validation_fraction, rng)
    phi_fit, y_fit = phi[fit_idx], labels[fit_idx]
    phi_val, y_val = phi[val_idx], labels[val_idx]
    use_val = len(val_idx) > 0

    params: list[np.ndarray] = []
    for layer in out.layers:
        params.extend((layer.weights, layer.bias))
    adam = _Adam([p.shape for p in params], cfg)
    ones = [np.ones(l.in_dim) for l in out.layers]

    best_val = np.inf
    best_params = None
    bad_epochs = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(y_fit))
        step_losses = []
        for start in range(0, len(order), cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            masks = draw_masks(out, rng, use_posterior=False)
            if cfg.use_posterior and out.fixed_keep_prob is None:
                for layer, m in zip(out.layers, masks):
                    layer.beta_state = beta_posterior_update(layer.beta_state, [m])
            step_losses.append(_loss_from_phi(out, phi_fit[sel], y_fit[sel], masks))
            grads = _grads_from_phi(out, phi_fit[sel], y_fit[sel], masks)
            flat = [g for pair in grads for g in pair]
            adam.step(params, flat)
        train_loss = float(np.mean(step_losses))
        trace.train_losses.append(train_loss)
        if not use_val:
            trace.val_losses.append(None)
            trace.best_epoch = epoch
            continue
        val_loss = _loss_from_phi(out, phi_val, y_val, ones)
        trace.val_losses.append(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_params = [p.copy() for p in params]
            trace.best_epoch = epoch
            bad_epochs = 0
        elif val_loss > best_val:
            bad_epochs += 1
            if bad_epochs > cfg.early_stop_patience:
                trace.stopped_early = True
                break
    if use_val and best_params is not None:
        for p, b in zip(params, best_params):
            p[...] = b
    for i, layer in enumerate(out.layers):
        if not (np.isfinite(layer.weights).all() and np.isfinite(layer.bias).all()):
            raise NumericError(f"training diverged: non-finite parameters in layer {i}")
    return out, trace


def gradient_check(
    head: DropoutHead,
    batch: tuple[np.ndarray, np.ndarray],
    masks: list[np.ndarray],
    tolerance: float = 1e-4,
    step: float = 1e-5,
) -> dict:
    """Analytic gradients vs central finite differences over every parameter."""
    if head.parameter_count() > 1000:
        raise ConfigError("gradient_check is for small heads (<= 1000 parameters)")
    vectors, labels = batch
    labels = np.asarray(labels, dtype=np.int64)
    _validate_labels(labels, head.num_classes)
    phi = map_features(head, vectors)

    analytic = _grads_from_phi(head, phi, labels, masks)
    max_rel = 0.0
    for li, layer in enumerate(head.layers):
        for tensor, grad in ((layer.weights, analytic[li][0]), (layer.bias, analytic[li][1])):
            flat = tensor.reshape(-1)
            gflat = grad.reshape(-1)
            for j in range(flat.size):
                orig = flat[j]
                flat[j] = orig + step
                up = _loss_from_phi(head, phi, labels, masks)
                flat[j] = orig - step
                down = _loss_from_phi(head, phi, labels, masks)
                flat[j] = orig
                numeric = (up - down) / (2 * step)
                rel = abs(gflat[j] - numeric) / max(abs(gflat[j]) + abs(numeric), 1e-2)
                max_rel = max(max_rel, rel)
    return {
        "max_rel_error": max_rel,
        "tolerance": tolerance,
        "passed": max_rel <= tolerance,
        "num_params": head.parameter_count(),
    }


def make_splits(data: "EmbeddingDataset", plan: SplitPlan) -> list[tuple[np.ndarray, np.ndarray]]:
    """(train_indices, test_indices) pairs for the plan, deterministic in seed."""
    plan.validate()
    labels = np.asarray(data.labels, dtype=np.int64)
    n = len(labels)
    rng = rngstream.stream(plan.seed, rngstream.SPLIT)
    all_idx = np.arange(n)

    if plan.mode == "zero_shot":
        return [(np.array([], dtype=np.int64), all_idx)]

    if plan.mode == "k_shot":
        if plan.stratified:
            train: list[int] = []
            for c in np.unique(labels):
                idx = np.flatnonzero(labels == c)
                if len(idx) < plan.k:
                    name = data.classes[int(c)] if int(c) < len(data.classes) else str(c)
                    raise DataError(
                        f"class {name!r} has {len(idx)} instances, fewer than k={plan.k}"
                    )
                train.extend(rng.permutation(idx)[: plan.k].tolist())
        else:
            want = plan.k * len(np.unique(labels))
            if want > n:
                raise DataError(f"k_shot needs {want} instances but dataset has {n}")
            train = rng.permutation(all_idx)[:want].tolist()
        train_idx = np.array(sorted(train), dtype=np.int64)
        return [(train_idx, np.setdiff1d(all_idx, train_idx))]

    if plan.mode == "fraction":
        train = []
        for c in np.unique(labels):
            idx = np.flatnonzero(labels == c)
            take = int(round(len(idx) * plan.train_fraction))
            take = min(max(take, 1), len(idx) - 1) if len(idx) > 1 else len(idx)
            train.extend(rng.permutation(idx)[:take].tolist())
        train_idx = np.array(sorted(train), dtype=np.int64)
        return [(train_idx, np.setdiff1d(all_idx, train_idx))]

    # cross_val: disjoint folds covering the data, sizes within +-1
    folds: list[list[int]] = [[] for _ in range(plan.folds)]
    cursor = 0
    if plan.stratified:
        for c in np.unique(labels):
            idx = rng.permutation(np.flatnonzero(labels == c))
            for j, i in enumerate(idx):
                folds[(cursor + j) % plan.folds].append(int(i))
            cursor += len(idx)
    else:
        idx = rng.permutation(all_idx)
        for j, i in enumerate(idx):
            folds[j % plan.folds].append(int(i))
    pairs = []
    for f in range(plan.folds):
        test_idx = np.array(sorted(folds[f]), dtype=np.int64)
        pairs.append((np.setdiff1d(all_idx, test_idx), test_idx))
    return pairs
