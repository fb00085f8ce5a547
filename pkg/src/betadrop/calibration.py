"""Evaluation metrics and uncertainty analyses.

Conventions, stated once and enforced by tests:
  - brier_binary   = mean (P_i - O_i)^2 over instances (positive-class prob)
  - brier_multiclass = mean over instances of sum_k (p_ik - d_ik)^2, so for
    two classes it equals exactly 2 * brier_binary
  - rmse = sqrt(brier_multiclass / K), squared-error per (instance, class)
  - f1 is macro-averaged; classes absent from both truths and predictions
    are dropped from the average (callers can detect this via f1_details)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError

_NORMALIZATION_TOL = 1e-4


@dataclass
class PredictionRecord:
    """One evaluated instance: MC-mean probabilities against the true class."""

    instance_id: str
    mean_probs: np.ndarray
    true_class: int
    sample_variance: np.ndarray | None = None
    predicted_class: int = field(init=False)

    def __post_init__(self) -> None:
        self.mean_probs = np.asarray(self.mean_probs, dtype=np.float64)
        if self.mean_probs.ndim != 1 or self.mean_probs.size < 2:
            raise DataError(f"record {self.instance_id}: probs must be a vector of >= 2 classes")
        if not (0 <= self.true_class < self.mean_probs.size):
            raise DataError(f"record {self.instance_id}: true_class {self.true_class} out of range")
        # ties resolve to the lowest index (np.argmax convention)
        self.predicted_class = int(np.argmax(self.mean_probs))

    @property
    def num_classes(self) -> int:
        return self.mean_probs.size

    @property
    def max_prob(self) -> float:
        return float(self.mean_probs[self.predicted_class])

    @property
    def correct(self) -> bool:
        return self.predicted_class == self.true_class


def _check_nonempty(preds) -> None:
    if len(preds) == 0:
        raise DataError("metric requires at least one prediction")


def _check_rows(preds: list[PredictionRecord]) -> int:
    _check_nonempty(preds)
    k = preds[0].num_classes
    for r in preds:
        if r.num_classes != k:
            raise DataError(f"record {r.instance_id}: inconsistent class count")
        s = float(r.mean_probs.sum())
        if abs(s - 1.0) > _NORMALIZATION_TOL:
            raise DataError(f"record {r.instance_id}: probabilities sum to {s}, not 1")
    return k


def brier_binary(preds: list[tuple[float, float]]) -> float:
    """Mean squared gap between positive-class probability and 0/1 outcome."""
    _check_nonempty(preds)
    total = 0.0
    for i, (p, o) in enumerate(preds):
        if not (0.0 <= p <= 1.0):
            raise DataError(f"probability {p} at index {i} outside [0,1]")
        if o not in (0, 1):
            raise DataError(f"outcome {o} at index {i} is not 0/1")
        total += (p - o) ** 2
    return total / len(preds)


def brier_multiclass(preds: list[PredictionRecord]) -> float:
    k = _check_rows(preds)
    total = 0.0
    for r in preds:
        delta = np.zeros(k)
        delta[r.true_class] = 1.0
        total += float(((r.mean_probs - delta) ** 2).sum())
    return total / len(preds)


def per_class_brier(preds: list[PredictionRecord]) -> np.ndarray:
    """Per-class components; they sum to brier_multiclass exactly."""
    k = _check_rows(preds)
    out = np.zeros(k)
    for r in preds:
        delta = np.zeros(k)
        delta[r.true_class] = 1.0
        out += (r.mean_probs - delta) ** 2
    return out / len(preds)


def rmse(preds: list[PredictionRecord]) -> float:
    k = _check_rows(preds)
    return float(np.sqrt(brier_multiclass(preds) / k))


def f1_details(preds: list[PredictionRecord]) -> dict:
    """Per-class precision/recall/F1 plus the classes excluded as undefined."""
    k = _check_rows(preds)
    truths = np.array([r.true_class for r in preds])
    guesses = np.array([r.predicted_class for r in preds])
    per_class = {}
    undefined = []
    for c in range(k):
        tp = int(np.sum((guesses == c) & (truths == c)))
        fp = int(np.sum((guesses == c) & (truths != c)))
        fn = int(np.sum((guesses != c) & (truths == c)))
        if tp + fp + fn == 0:
            undefined.append(c)
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = {"precision": precision, "recall": recall, "f1": f1}
    return {"per_class": per_class, "undefined_classes": undefined}


def f1_accuracy(preds: list[PredictionRecord]) -> tuple[float, float]:
    """(macro F1, accuracy). Undefined classes are left out of the macro mean."""
    details = f1_details(preds)
    scores = [v["f1"] for v in details["per_class"].values()]
    f1_macro = float(np.mean(scores)) if scores else 0.0
    accuracy = float(np.mean([r.correct for r in preds]))
    return f1_macro, accuracy


def second_choice_accuracy(preds: list[PredictionRecord]) -> float | None:
    """Among misclassified records, how often the runner-up class is the truth.

    Returns None when there are no misclassifications.
    """
    _check_rows(preds)
    hits = 0
    wrong = 0
    for r in preds:
        if r.correct:
            continue
        wrong += 1
        runner_up = int(np.argsort(-r.mean_probs, kind="stable")[1])
        if runner_up == r.true_class:
            hits += 1
    return hits / wrong if wrong else None


def default_bin_edges(num_classes: int) -> list[float]:
    """Four confidence segments over [1/K, 1] (binary: .5-.6-.7-.8-1)."""
    lo = 1.0 / num_classes
    return [lo + f * (1.0 - lo) for f in (0.0, 0.2, 0.4, 0.6, 1.0)]


def probability_bins(
    preds: list[PredictionRecord], edges: list[float] | None = None
) -> list[tuple[float, float, int, int]]:
    """(lo, hi, correct, incorrect) per half-open bin; the last bin is closed."""
    k = _check_rows(preds)
    if edges is None:
        edges = default_bin_edges(k)
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigError(f"bin edges must be strictly increasing, got {edges}")
    if edges[0] > 1.0 / k + 1e-9 or edges[-1] < 1.0 - 1e-9:
        raise ConfigError(f"bin edges {edges} do not span the max-prob range [1/{k}, 1]")
    counts = [[0, 0] for _ in range(len(edges) - 1)]
    for r in preds:
        p = r.max_prob
        if p < 1.0 / k - 1e-6 or p > 1.0 + 1e-6:
            raise DataError(
                f"record {r.instance_id}: max probability {p} outside [1/{k}, 1]; "
                "input looks unnormalized"
            )
        j = len(edges) - 2
        for b in range(len(edges) - 1):
            if edges[b] <= p < edges[b + 1]:
                j = b
                break
        counts[j][0 if r.correct else 1] += 1
    return [(edges[b], edges[b + 1], c, w) for b, (c, w) in enumerate(counts)]


def flag_uncertain(preds: list[PredictionRecord], threshold: float) -> list[str]:
    """Ids with max probability below threshold, most uncertain first."""
    k = _check_rows(preds)
    if not (1.0 / k < threshold <= 1.0):
        raise ConfigError(f"threshold must lie in (1/{k}, 1], got {threshold}")
    picked = [r for r in preds if r.max_prob < threshold]
    picked.sort(key=lambda r: (r.max_prob, r.instance_id))
    return [r.instance_id for r in picked]


@dataclass
class CalibrationReport:
    """All evaluation outputs for one prediction set."""

    f1_macro: float
    accuracy: float
    brier: float
    rmse: float
    per_class_brier: list[float]
    bins: list[tuple[float, float, int, int]]
    second_choice_accuracy: float | None
    flagged: list[str]
    num_instances: int
    undefined_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "f1_macro": self.f1_macro,
            "accuracy": self.accuracy,
            "brier": self.brier,
            "rmse": self.rmse,
            "per_class_brier": list(self.per_class_brier),
            "bins": [
                {"lo": lo, "hi": hi, "correct": c, "incorrect": w}
                for (lo, hi, c, w) in self.bins
            ],
            "second_choice_accuracy": self.second_choice_accuracy,
            "flagged": list(self.flagged),
            "num_instances": self.num_instances,
            "undefined_classes": list(self.undefined_classes),
        }


def build_report(
    preds: list[PredictionRecord],
    flag_threshold: float = 0.7,
    bin_edges: list[float] | None = None,
) -> CalibrationReport:
    f1_macro, accuracy = f1_accuracy(preds)
    return CalibrationReport(
        f1_macro=f1_macro,
        accuracy=accuracy,
        brier=brier_multiclass(preds),
        rmse=rmse(preds),
        per_class_brier=[float(v) for v in per_class_brier(preds)],
        bins=probability_bins(preds, bin_edges),
        second_choice_accuracy=second_choice_accuracy(preds),
        flagged=flag_uncertain(preds, flag_threshold),
        num_instances=len(preds),
        undefined_classes=f1_details(preds)["undefined_classes"],
    )
