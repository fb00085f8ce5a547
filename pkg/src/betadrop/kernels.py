"""Deterministic feature maps applied to embedding vectors before the head.

Supported kinds:
    squared        elementwise x**2 (cheap, differentiable; the default)
    linear         identity
    rbf_rff        random cosine features approximating exp(-gamma*||x-y||^2)
    laplacian_rff  random cosine features with Cauchy frequencies,
                   approximating exp(-gamma*||x-y||_1)
    sigmoid        elementwise tanh(scale*x)

`concat_original` appends the raw vector after the mapped features, which
keeps the linear terms available (the squared map alone is even and cannot
separate sign-symmetric data).

Random-feature frequencies are a pure function of (kind, gamma, rff_dim,
rff_seed, input dim): drawn once from a Philox stream, cached, and persisted
with trained models so predictions reproduce across sessions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from . import rngstream

KERNEL_KINDS = ("squared", "linear", "rbf_rff", "laplacian_rff", "sigmoid")
_RFF_KINDS = ("rbf_rff", "laplacian_rff")


@dataclass(frozen=True)
class KernelConfig:
    kind: str = "squared"
    gamma: float = 1.0
    rff_dim: int = 256
    rff_seed: int = 0
    scale: float = 1.0
    concat_original: bool = False

    def validate(self) -> None:
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind in _RFF_KINDS:
            if not (self.gamma > 0):
                raise ConfigError(f"kernel gamma must be > 0, got {self.gamma}")
            if self.rff_dim < 1:
                raise ConfigError(f"rff_dim must be >= 1, got {self.rff_dim}")
        if self.kind == "sigmoid" and not (self.scale > 0):
            raise ConfigError(f"sigmoid scale must be > 0, got {self.scale}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "gamma": self.gamma,
            "rff_dim": self.rff_dim,
            "rff_seed": self.rff_seed,
            "scale": self.scale,
            "concat_original": self.concat_original,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        cfg = cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
        cfg.validate()
        return cfg


# (kind, gamma, rff_dim, rff_seed, input_dim) -> (frequencies, phases)
_rff_cache: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}


def rff_frequencies(cfg: KernelConfig, input_dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Frozen frequency matrix (rff_dim, input_dim) and phases (rff_dim,)."""
    key = (cfg.kind, float(cfg.gamma), cfg.rff_dim, cfg.rff_seed, input_dim)
    hit = _rff_cache.get(key)
    if hit is not None:
        return hit
    kind_tag = _RFF_KINDS.index(cfg.kind)
    rng = rngstream.stream(cfg.rff_seed, rngstream.FEATURES, kind_tag, cfg.rff_dim, input_dim)
    if cfg.kind == "rbf_rff":
        # spectral density of exp(-gamma*r^2) is N(0, 2*gamma*I)
        freqs = rng.standard_normal((cfg.rff_dim, input_dim)) * np.sqrt(2.0 * cfg.gamma)
    else:
        # per-coordinate exp(-gamma*|r|) has Cauchy(scale=gamma) spectrum
        freqs = rng.standard_cauchy((cfg.rff_dim, input_dim)) * cfg.gamma
    phases = rng.uniform(0.0, 2.0 * np.pi, cfg.rff_dim)
    _rff_cache[key] = (freqs, phases)
    return freqs, phases


def output_dim(cfg: KernelConfig, input_dim: int) -> int:
    """Mapped dimension for any input of `input_dim`."""
    if input_dim < 1:
        raise ConfigError(f"input_dim must be >= 1, got {input_dim}")
    cfg.validate()
    base = cfg.rff_dim if cfg.kind in _RFF_KINDS else input_dim
    return base + input_dim if cfg.concat_original else base


def kernel_map(x: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """Map one vector through the configured kernel feature map.

    Deterministic given (x, cfg). Rejects non-finite input, naming the
    offending index.
    """
    cfg.validate()
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise DataError(f"kernel_map expects a non-empty 1-d vector, got shape {x.shape}")
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise DataError(f"non-finite input value at index {int(bad[0])}")

    if cfg.kind == "squared":
        mapped = x * x
    elif cfg.kind == "linear":
        mapped = x.copy()
    elif cfg.kind == "sigmoid":
        mapped = np.tanh(cfg.scale * x)
    else:
        freqs, phases = rff_frequencies(cfg, x.size)
        mapped = np.sqrt(2.0 / cfg.rff_dim) * np.cos(freqs @ x + phases)

    if cfg.concat_original:
        mapped = np.concatenate([mapped, x])
    return mapped
