"""Synthetic embedding datasets for demos and verification."""

from __future__ import annotations

import numpy as np

from . import rngstream
from .data_io import EmbeddingDataset


def two_clusters(
    n: int = 200,
    dim: int = 8,
    separation: float = 4.0,
    seed: int = 0,
    name: str = "two-clusters",
) -> EmbeddingDataset:
    """Two unit-variance Gaussian clusters with mean distance `separation`.

    The mean offset is spread evenly over all coordinates, so each class sits
    at +-separation/2 along the all-ones diagonal.
    """
    rng = rngstream.stream(seed, rngstream.FEATURES, 101)
    offset = np.full(dim, separation / (2.0 * np.sqrt(dim)))
    labels = rng.integers(0, 2, size=n)
    vectors = rng.standard_normal((n, dim))
    vectors += np.where(labels[:, None] == 1, offset, -offset)
    # float32 round-trip parity with the on-disk format
    vectors = vectors.astype(np.float32).astype(np.float64)
    return EmbeddingDataset(
        name=name,
        classes=["neg", "pos"],
        ids=[f"s{i:04d}" for i in range(n)],
        labels=labels,
        vectors=vectors,
    )


def label_noise(
    n: int = 200,
    dim: int = 8,
    seed: int = 0,
    num_classes: int = 2,
    name: str = "label-noise",
) -> EmbeddingDataset:
    """Isotropic vectors with labels independent of the features."""
    rng = rngstream.stream(seed, rngstream.FEATURES, 102)
    labels = np.repeat(np.arange(num_classes), n // num_classes + 1)[:n]
    vectors = rng.standard_normal((n, dim)).astype(np.float32).astype(np.float64)
    return EmbeddingDataset(
        name=name,
        classes=[f"c{i}" for i in range(num_classes)],
        ids=[f"s{i:04d}" for i in range(n)],
        labels=labels,
        vectors=vectors,
    )
