"""Stochastic model core.

A DropoutHead is a small MLP applied to kernel-mapped embedding vectors.
Each layer carries a Beta(alpha, beta) distribution over its keep-probability.
A stochastic pass draws one keep-probability per layer, samples a Bernoulli
mask over that layer's inputs, and computes

    h_i = relu( (1/sqrt(in_dim_i)) * M_i @ (mask_i * h_{i-1}) + b_i )

with the final layer un-activated and passed through a softmax. Predictions
average T such passes; the per-class variance across passes plus the 1/tau
noise floor is the predictive variance.

Mask observations accumulated during training form the conjugate posterior
Beta(alpha + kept, beta + dropped), which prediction can sample instead of
the prior.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .kernels import KernelConfig, kernel_map, output_dim

# resample an all-zero mask this many times before forcing one unit on
_ZERO_MASK_RETRIES = 10


@dataclass
class BetaState:
    """Beta(alpha, beta) prior plus accumulated mask observations."""

    alpha: float
    beta: float
    keep_count: int = 0
    drop_count: int = 0

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ConfigError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")
        if self.keep_count < 0 or self.drop_count < 0:
            raise ConfigError("mask counts must be nonnegative")

    @property
    def posterior_alpha(self) -> float:
        return self.alpha + self.keep_count

    @property
    def posterior_beta(self) -> float:
        return self.beta + self.drop_count

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "keep_count": self.keep_count,
            "drop_count": self.drop_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BetaState":
        return cls(d["alpha"], d["beta"], d["keep_count"], d["drop_count"])


def sample_keep_prob(state: BetaState, rng: np.random.Generator, use_posterior: bool) -> float:
    """Draw a keep-probability from the prior or the conjugate posterior."""
    if use_posterior:
        return float(rng.beta(state.posterior_alpha, state.posterior_beta))
    return float(rng.beta(state.alpha, state.beta))


def sample_mask(p: float, dim: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. Bernoulli(p) mask of length dim, guarded against all-zeros.

    An all-zero draw is resampled up to 10 times; if still all-zero, one
    uniformly chosen entry is forced on so the forward pass keeps signal.
    """
    if dim < 1:
        raise ConfigError(f"mask dim must be >= 1, got {dim}")
    mask = (rng.random(dim) < p).astype(np.float64)
    retries = 0
    while not mask.any():
        if retries >= _ZERO_MASK_RETRIES:
            mask[rng.integers(dim)] = 1.0
            break
        mask = (rng.random(dim) < p).astype(np.float64)
        retries += 1
    return mask


def beta_posterior_update(state: BetaState, masks_observed: list[np.ndarray]) -> BetaState:
    """Fold observed masks into the counts; the prior itself is untouched."""
    if not masks_observed:
        raise DataError("beta_posterior_update requires at least one observed mask")
    kept = 0
    total = 0
    for m in masks_observed:
        m = np.asarray(m)
        kept += int(np.count_nonzero(m))
        total += m.size
    return BetaState(state.alpha, state.beta, state.keep_count + kept, state.drop_count + (total - kept))


@dataclass
class LayerSpec:
    """One layer: weights (out_dim, in_dim), bias (out_dim,), keep-prob state."""

    weights: np.ndarray
    bias: np.ndarray
    beta_state: BetaState

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ConfigError("layer weights must be 2-d and bias 1-d")
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ConfigError("bias length must equal weight rows")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise DataError("layer weights and biases must be finite")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class DropoutHead:
    """The trainable model: layers, kernel config, precision tau, L2 psi."""

    layers: list[LayerSpec]
    kernel: KernelConfig
    num_classes: int
    tau: float = 10.0
    l2: float = 0.0
    activation: str = "relu"
    seed: int = 0
    # baseline mode: one shared keep-probability, Beta machinery bypassed
    fixed_keep_prob: float | None = None

    def __post_init__(self) -> None:
        if not self.layers:
            raise ConfigError("head needs at least one layer")
        if self.activation != "relu":
            raise ConfigError(f"unsupported activation {self.activation!r}")
        if not (self.tau > 0):
            raise ConfigError(f"tau must be > 0, got {self.tau}")
        if self.l2 < 0:
            raise ConfigError(f"l2 must be >= 0, got {self.l2}")
        if self.fixed_keep_prob is not None and not (0.0 <= self.fixed_keep_prob <= 1.0):
            raise ConfigError("fixed_keep_prob must lie in [0, 1]")
        for i in range(1, len(self.layers)):
            if self.layers[i].in_dim != self.layers[i - 1].out_dim:
                raise ConfigError(
                    f"layer {i} in_dim {self.layers[i].in_dim} != layer {i - 1} "
                    f"out_dim {self.layers[i - 1].out_dim}"
                )
        if self.layers[-1].out_dim != self.num_classes:
            raise ConfigError(
                f"final layer out_dim {self.layers[-1].out_dim} != num_classes {self.num_classes}"
            )

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def check_embedding_dim(self, embedding_dim: int) -> None:
        expected = output_dim(self.kernel, embedding_dim)
        if self.layers[0].in_dim != expected:
            raise ConfigError(
                f"layer 0 expects {self.layers[0].in_dim} features but kernel maps "
                f"{embedding_dim}-dim embeddings to {expected}"
            )

    def clone(self) -> "DropoutHead":
        return copy.deepcopy(self)

    def parameter_count(self) -> int:
        return sum(l.weights.size + l.bias.size for l in self.layers)


def init_head(
    embedding_dim: int,
    num_classes: int,
    hidden: list[int],
    kernel: KernelConfig,
    alpha: float = 1e-4,
    beta: float = 1e-4,
    tau: float = 10.0,
    l2: float = 0.0,
    seed: int = 0,
    fixed_keep_prob: float | None = None,
) -> DropoutHead:
    """Fresh head with symmetric-uniform 1/sqrt(fan_in) weights, zero biases."""
    from . import rngstream

    rng = rngstream.stream(seed, rngstream.INIT)
    dims = [output_dim(kernel, embedding_dim)] + list(hidden) + [num_classes]
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(LayerSpec(w, np.zeros(fan_out), BetaState(alpha, beta)))
    return DropoutHead(
        layers=layers,
        kernel=kernel,
        num_classes=num_classes,
        tau=tau,
        l2=l2,
        seed=seed,
        fixed_keep_prob=fixed_keep_prob,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Normalized exponentials along the last axis, numerically stable."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward_stochastic(
    head: DropoutHead, phi_x: np.ndarray, masks: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """One masked forward pass on an already-mapped feature vector.

    Returns (logits, probs). Deterministic given inputs.
    """
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if len(masks) != head.num_layers:
        raise DataError(f"expected {head.num_layers} masks, got {len(masks)}")
    h = phi_x
    for i, layer in enumerate(head.layers):
        if h.shape[0] != layer.in_dim:
            raise DataError(f"layer {i}: input has {h.shape[0]} features, expected {layer.in_dim}")
        mask = np.asarray(masks[i], dtype=np.float64)
        if mask.shape[0] != layer.in_dim:
            raise DataError(f"layer {i}: mask has {mask.shape[0]} entries, expected {layer.in_dim}")
        z = (layer.weights @ (mask * h)) / np.sqrt(layer.in_dim) + layer.bias
        h = z if i == head.num_layers - 1 else np.maximum(z, 0.0)
    return h, softmax(h)


@dataclass
class PredictiveSummary:
    """Monte Carlo predictive estimate for one instance."""

    mean_probs: np.ndarray
    sample_variance: np.ndarray
    predictive_variance: np.ndarray
    num_passes: int
    per_pass_probs: np.ndarray | None = field(default=None, repr=False)


def predictive_variance(summary: PredictiveSummary, tau: float) -> np.ndarray:
    """Sample variance plus the 1/tau observation-noise floor."""
    if not (tau > 0):
        raise ConfigError(f"tau must be > 0, got {tau}")
    return summary.sample_variance + 1.0 / tau


def draw_keep_probs(head: DropoutHead, rng: np.random.Generator, use_posterior: bool) -> list[float]:
    """One keep-probability per layer (fixed value short-circuits Beta draws)."""
    if head.fixed_keep_prob is not None:
        return [head.fixed_keep_prob] * head.num_layers
    return [sample_keep_prob(l.beta_state, rng, use_posterior) for l in head.layers]


def draw_masks(head: DropoutHead, rng: np.random.Generator, use_posterior: bool) -> list[np.ndarray]:
    """Keep-probabilities then masks, in layer order, from one stream."""
    probs = draw_keep_probs(head, rng, use_posterior)
    return [sample_mask(p, l.in_dim, rng) for p, l in zip(probs, head.layers)]


def predict_mc(
    head: DropoutHead,
    x: np.ndarray,
    T: int,
    rng: np.random.Generator,
    use_posterior: bool = True,
    keep_passes: bool = False,
) -> PredictiveSummary:
    """Average T stochastic passes into a predictive distribution.

    Each pass draws fresh keep-probabilities and masks from `rng`; the mean
    over passes is the class-probability estimate, and the per-class variance
    across passes plus 1/tau is the predictive variance.
    """
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    phi = kernel_map(np.asarray(x, dtype=np.float64), head.kernel)
    probs = np.empty((T, head.num_classes))
    for t in range(T):
        masks = draw_masks(head, rng, use_posterior)
        _, probs[t] = forward_stochastic(head, phi, masks)
    mean = probs.mean(axis=0)
    var = probs.var(axis=0)
    return PredictiveSummary(
        mean_probs=mean,
        sample_variance=var,
        predictive_variance=var + 1.0 / head.tau,
        num_passes=T,
        per_pass_probs=probs if keep_passes else None,
    )
