"""Experiment orchestration: split, train, evaluate, report.

`run_experiment` is fully deterministic given the config seed: every random
draw comes from a stream keyed by (seed, purpose, fold, instance), folds are
evaluated in a thread pool whose size never changes results, and the report
JSON is canonical (sorted keys, timestamp excluded from reproducibility).
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rngstream
from .bayes_dropout import DropoutHead, init_head, predict_mc
from .calibration import CalibrationReport, PredictionRecord, build_report
from .data_io import EmbeddingDataset, ModelArtifact, read_embf, save_model
from .errors import ConfigError, DataError
from .kernels import KernelConfig
from .training import SplitPlan, TrainConfig, TrainTrace, make_splits, train

THREADS_ENV = "BETADROP_THREADS"

_SCALAR_METRICS = ("f1_macro", "accuracy", "brier", "rmse")

# comparison baseline: identity features, one fixed keep-probability, no Beta
BASELINE_KEEP_PROB = 0.9


@dataclass
class ExperimentConfig:
    dataset_path: str = ""
    output_dir: str = "out"
    kernel: KernelConfig = field(default_factory=lambda: KernelConfig(kind="squared", concat_original=True))
    head_layers: list[int] = field(default_factory=list)
    beta_alpha: float = 1e-4
    beta_beta: float = 1e-4
    tau: float = 10.0
    train: TrainConfig = field(default_factory=TrainConfig)
    split: SplitPlan = field(default_factory=SplitPlan)
    mc_passes: int = 50
    baseline_mode: bool = False
    flag_threshold: float = 0.7
    write_svg: bool = False

    def validate(self) -> None:
        self.kernel.validate()
        self.train.validate()
        self.split.validate()
        if not (self.beta_alpha > 0 and self.beta_beta > 0):
            raise ConfigError("beta_alpha and beta_beta must be positive")
        if self.mc_passes < 1:
            raise ConfigError(f"mc_passes must be >= 1, got {self.mc_passes}")
        if any(w < 1 for w in self.head_layers):
            raise ConfigError(f"head layer widths must be >= 1, got {self.head_layers}")

    def to_dict(self) -> dict:
        return {
            "dataset_path": self.dataset_path,
            "output_dir": self.output_dir,
            "kernel": self.kernel.to_dict(),
            "head_layers": list(self.head_layers),
            "beta_alpha": self.beta_alpha,
            "beta_beta": self.beta_beta,
            "tau": self.tau,
            "train": self.train.to_dict(),
            "split": self.split.to_dict(),
            "mc_passes": self.mc_passes,
            "baseline_mode": self.baseline_mode,
            "flag_threshold": self.flag_threshold,
            "write_svg": self.write_svg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "kernel" in d:
            d["kernel"] = KernelConfig.from_dict(d["kernel"])
        if "train" in d:
            d["train"] = TrainConfig.from_dict(d["train"])
        if "split" in d:
            d["split"] = SplitPlan.from_dict(d["split"])
        cfg = cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})
        cfg.validate()
        return cfg


def build_head(cfg: ExperimentConfig, embedding_dim: int, num_classes: int, fold: int) -> DropoutHead:
    if cfg.baseline_mode:
        kernel = KernelConfig(kind="linear")
        fixed = BASELINE_KEEP_PROB
    else:
        kernel = cfg.kernel
        fixed = None
    return init_head(
        embedding_dim=embedding_dim,
        num_classes=num_classes,
        hidden=list(cfg.head_layers),
        kernel=kernel,
        alpha=cfg.beta_alpha,
        beta=cfg.beta_beta,
        tau=cfg.tau,
        l2=cfg.train.l2,
        seed=cfg.train.seed * 1000003 + fold,
        fixed_keep_prob=fixed,
    )


def evaluate_head(
    head: DropoutHead,
    data: EmbeddingDataset,
    indices: np.ndarray,
    mc_passes: int,
    seed: int,
    use_posterior: bool,
) -> list[PredictionRecord]:
    """predict_mc every indexed instance on its own (seed, id)-keyed stream."""
    records = []
    for i in np.asarray(indices, dtype=np.int64):
        iid = data.ids[int(i)]
        rng = rngstream.stream(seed, rngstream.PREDICT, rngstream.key_for(iid))
        summary = predict_mc(head, data.vectors[int(i)], mc_passes, rng, use_posterior=use_posterior)
        records.append(
            PredictionRecord(
                instance_id=iid,
                mean_probs=summary.mean_probs,
                true_class=int(data.labels[int(i)]),
                sample_variance=summary.sample_variance,
            )
        )
    return records


def _ids_digest(ids: list[str]) -> str:
    return format(rngstream.fnv1a64("\n".join(ids).encode("utf-8")), "016x")


@dataclass
class FoldResult:
    fold: int
    train_ids: list[str]
    test_ids: list[str]
    report: CalibrationReport
    trace: TrainTrace
    head: DropoutHead


def _run_fold(
    cfg: ExperimentConfig, data: EmbeddingDataset, fold: int, pair: tuple[np.ndarray, np.ndarray]
) -> FoldResult:
    train_idx, test_idx = pair
    head = build_head(cfg, data.dim, data.num_classes, fold)
    trace = TrainTrace()
    if cfg.split.mode != "zero_shot" and cfg.train.epochs > 0 and len(train_idx) > 0:
        rng = rngstream.stream(cfg.train.seed, rngstream.TRAIN, fold)
        head, trace = train(head, data.subset(train_idx), cfg.train, rng)
    records = evaluate_head(
        head, data, test_idx, cfg.mc_passes, cfg.train.seed, cfg.train.use_posterior
    )
    report = build_report(records, flag_threshold=cfg.flag_threshold)
    return FoldResult(
        fold=fold,
        train_ids=[data.ids[int(i)] for i in train_idx],
        test_ids=[data.ids[int(i)] for i in test_idx],
        report=report,
        trace=trace,
        head=head,
    )


def run_experiment(
    cfg: ExperimentConfig,
    data: EmbeddingDataset | None = None,
    now: float | None = None,
) -> dict:
    """Execute the configured protocol and write all artifacts.

    Returns the report dict (also written as report.json under output_dir).
    """
    cfg.validate()
    if data is None:
        data = read_embf(cfg.dataset_path)
    data.validate()
    if len(data) == 0:
        raise DataError("experiment requires a nonempty dataset")

    splits = make_splits(data, cfg.split)
    threads = max(1, int(os.environ.get(THREADS_ENV, "1")))
    if threads > 1 and len(splits) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda fp: _run_fold(cfg, data, fp[0], fp[1]), enumerate(splits)))
    else:
        results = [_run_fold(cfg, data, f, pair) for f, pair in enumerate(splits)]

    folds_out = []
    for r in results:
        folds_out.append(
            {
                "fold": r.fold,
                "train_size": len(r.train_ids),
                "test_size": len(r.test_ids),
                "train_ids_digest": _ids_digest(r.train_ids),
                "test_ids_digest": _ids_digest(r.test_ids),
                "test_ids": r.test_ids,
                "metrics": r.report.to_dict(),
                "epochs_run": len(r.trace.train_losses),
                "stopped_early": r.trace.stopped_early,
                "best_epoch": r.trace.best_epoch,
            }
        )
    mean_metrics = {
        m: float(np.mean([r.report.to_dict()[m] for r in results])) for m in _SCALAR_METRICS
    }
    k = data.num_classes
    mean_metrics["per_class_brier"] = [
        float(np.mean([r.report.per_class_brier[c] for r in results])) for c in range(k)
    ]
    second = [
        r.report.second_choice_accuracy
        for r in results
        if r.report.second_choice_accuracy is not None
    ]
    mean_metrics["second_choice_accuracy"] = float(np.mean(second)) if second else None

    report = {
        "dataset": {"name": data.name, "size": len(data), "dim": data.dim, "classes": data.classes},
        "config": cfg.to_dict(),
        "mode": "baseline" if cfg.baseline_mode else "proposed",
        "split_seed": cfg.split.seed,
        "split_plan": cfg.split.describe(),
        "folds": folds_out,
        "mean": mean_metrics,
        "timestamp": time.time() if now is None else now,
    }

    os.makedirs(cfg.output_dir, exist_ok=True)
    write_report_files(report, results, cfg, data)
    return report


def report_json_bytes(report: dict) -> bytes:
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_report_files(
    report: dict, results: list[FoldResult], cfg: ExperimentConfig, data: EmbeddingDataset
) -> None:
    out = cfg.output_dir
    with open(os.path.join(out, "report.json"), "wb") as fh:
        fh.write(report_json_bytes(report))

    lines = ["fold,class,brier\n"]
    for r in results:
        for c, v in enumerate(r.report.per_class_brier):
            lines.append(f"{r.fold},{data.classes[c]},{v!r}\n")
    with open(os.path.join(out, "per_class_brier.csv"), "w") as fh:
        fh.writelines(lines)

    lines = ["fold,bin_lo,bin_hi,correct,incorrect\n"]
    for r in results:
        for lo, hi, c, w in r.report.bins:
            lines.append(f"{r.fold},{lo!r},{hi!r},{c},{w}\n")
    with open(os.path.join(out, "bins.csv"), "w") as fh:
        fh.writelines(lines)

    for r in results:
        with open(os.path.join(out, f"train_trace_fold{r.fold}.csv"), "w") as fh:
            fh.write(r.trace.to_csv_text())
        artifact = ModelArtifact(
            head=r.head,
            train_config=cfg.train,
            provenance={
                "dataset": data.name,
                "split": f"{cfg.split.describe()} fold {r.fold}",
                "seed": cfg.train.seed,
                "timestamp": report["timestamp"],
            },
            embedding_dim=data.dim,
        )
        save_model(artifact, os.path.join(out, f"model_fold{r.fold}.embm"))

    if cfg.write_svg:
        from .svg_report import report_svgs

        for name, text in report_svgs(report).items():
            with open(os.path.join(out, name), "w") as fh:
                fh.write(text)


def compare_runs(report_a: dict, report_b: dict) -> dict:
    """Per-metric deltas (A - B); Brier/RMSE improvements show as negative."""
    if report_a["dataset"]["name"] != report_b["dataset"]["name"]:
        raise ConfigError("compare_runs requires reports on the same dataset")
    if report_a["split_seed"] != report_b["split_seed"] or report_a["split_plan"] != report_b["split_plan"]:
        raise ConfigError("compare_runs requires identical split plans and seeds")
    for fa, fb in zip(report_a["folds"], report_b["folds"]):
        if fa["test_ids_digest"] != fb["test_ids_digest"]:
            raise ConfigError(f"fold {fa['fold']}: test sets differ; comparison is invalid")
    deltas = {}
    for m in _SCALAR_METRICS:
        deltas[m] = {
            "a": report_a["mean"][m],
            "b": report_b["mean"][m],
            "delta": report_a["mean"][m] - report_b["mean"][m],
            "lower_is_better": m in ("brier", "rmse"),
        }
    return {
        "dataset": report_a["dataset"]["name"],
        "split_plan": report_a["split_plan"],
        "mode_a": report_a["mode"],
        "mode_b": report_b["mode"],
        "deltas": deltas,
    }
