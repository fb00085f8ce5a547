"""Command-line experiment runner.

Subcommands: train, eval, fewshot, crossval, compare, flag, report-svg.
Flags mirror the experiment config in kebab-case; a JSON config file can
supply any field and individual flags override it. Failures exit nonzero
with one machine-parsable line: ``error: <category>: <message>``.
"""

from __future__ import annotations

import functools
import json
import os
import sys

import click

from .bayes_dropout import predict_mc
from .calibration import PredictionRecord, flag_uncertain
from .data_io import load_model, read_embf
from .errors import BetadropError, ConfigError, DataError
from .experiment import ExperimentConfig, compare_runs, report_json_bytes, run_experiment
from .kernels import KERNEL_KINDS
from .rngstream import PREDICT, key_for, stream
from .training import SplitPlan
from .svg_report import report_svgs


def _fail(category: str, message: str, code: int) -> None:
    click.echo(f"error: {category}: {message}", err=True)
    sys.exit(code)


def cli_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BetadropError as exc:
            _fail(exc.category, str(exc), exc.exit_code)
        except FileNotFoundError as exc:
            _fail("data", str(exc), 3)
        except (FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            _fail("numeric", str(exc), 4)

    return wrapper


_EXPERIMENT_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file."),
    click.option("--dataset", "dataset_path", type=click.Path(), default=None),
    click.option("--output-dir", type=click.Path(), default=None),
    click.option("--kernel-kind", type=click.Choice(KERNEL_KINDS), default=None),
    click.option("--kernel-gamma", type=float, default=None),
    click.option("--rff-dim", type=int, default=None),
    click.option("--rff-seed", type=int, default=None),
    click.option("--kernel-scale", type=float, default=None),
    click.option("--concat-original/--no-concat-original", default=None),
    click.option("--head-layers", type=str, default=None, help="Hidden widths, e.g. '64,32'; empty for linear."),
    click.option("--beta-alpha", type=float, default=None),
    click.option("--beta-beta", type=float, default=None),
    click.option("--tau", type=float, default=None),
    click.option("--epochs", type=int, default=None),
    click.option("--learning-rate", type=float, default=None),
    click.option("--batch-size", type=int, default=None),
    click.option("--l2", type=float, default=None),
    click.option("--early-stop-patience", type=int, default=None),
    click.option("--validation-fraction", type=float, default=None),
    click.option("--seed", type=int, default=None),
    click.option("--use-posterior/--no-use-posterior", default=None),
    click.option("--mc-passes", type=int, default=None),
    click.option("--baseline-mode/--no-baseline-mode", default=None),
    click.option("--flag-threshold", type=float, default=None),
    click.option("--svg/--no-svg", "write_svg", default=None),
]


def experiment_options(fn):
    for opt in reversed(_EXPERIMENT_OPTIONS):
        fn = opt(fn)
    return fn


_KERNEL_KEYS = {
    "kernel_kind": "kind",
    "kernel_gamma": "gamma",
    "rff_dim": "rff_dim",
    "rff_seed": "rff_seed",
    "kernel_scale": "scale",
    "concat_original": "concat_original",
}
_TRAIN_KEYS = (
    "epochs",
    "learning_rate",
    "batch_size",
    "l2",
    "early_stop_patience",
    "validation_fraction",
    "seed",
    "use_posterior",
)
_TOP_KEYS = (
    "dataset_path",
    "output_dir",
    "beta_alpha",
    "beta_beta",
    "tau",
    "mc_passes",
    "baseline_mode",
    "flag_threshold",
    "write_svg",
)


def build_config(kwargs: dict) -> ExperimentConfig:
    base: dict = {}
    if kwargs.get("config_path"):
        with open(kwargs["config_path"], "r", encoding="utf-8") as fh:
            base = json.load(fh)
    cfg = ExperimentConfig.from_dict(base) if base else ExperimentConfig()

    kern = cfg.kernel.to_dict()
    for flag, field_ in _KERNEL_KEYS.items():
        if kwargs.get(flag) is not None:
            kern[field_] = kwargs[flag]
    from .kernels import KernelConfig

    cfg.kernel = KernelConfig.from_dict(kern)
    patience_explicit = kwargs.get("early_stop_patience") is not None or "early_stop_patience" in base.get("train", {})
    for key in _TRAIN_KEYS:
        if kwargs.get(key) is not None:
            setattr(cfg.train, key, kwargs[key])
    if not patience_explicit:
        cfg.train.early_stop_patience = min(cfg.train.early_stop_patience, cfg.train.epochs)
    for key in _TOP_KEYS:
        if kwargs.get(key) is not None:
            setattr(cfg, key, kwargs[key])
    if kwargs.get("head_layers") is not None:
        text = kwargs["head_layers"].strip()
        cfg.head_layers = [int(w) for w in text.split(",") if w.strip()] if text else []
    cfg.validate()
    return cfg


def _require_dataset(cfg: ExperimentConfig) -> None:
    if not cfg.dataset_path:
        raise ConfigError("--dataset (or config dataset_path) is required")


def _echo_summary(report: dict) -> None:
    m = report["mean"]
    click.echo(
        f"{report['split_plan']} [{report['mode']}] "
        f"f1={m['f1_macro']:.3f} acc={m['accuracy']:.3f} "
        f"brier={m['brier']:.3f} rmse={m['rmse']:.3f} -> {report['config']['output_dir']}"
    )


@click.group()
def main() -> None:
    """Uncertainty-aware classification over embedding datasets."""


@main.command("train")
@experiment_options
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@cli_errors
def train_cmd(train_fraction: float, **kwargs) -> None:
    """Train on a stratified fraction split and evaluate the held-out part."""
    cfg = build_config(kwargs)
    _require_dataset(cfg)
    cfg.split = SplitPlan(mode="fraction", train_fraction=train_fraction, seed=cfg.train.seed)
    _echo_summary(run_experiment(cfg))


@main.command("eval")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--output-dir", type=click.Path(), default="out")
@click.option("--mc-passes", type=int, default=None)
@click.option("--flag-threshold", type=float, default=0.7, show_default=True)
@click.option("--seed", type=int, default=None)
@cli_errors
def eval_cmd(model_path, dataset_path, output_dir, mc_passes, flag_threshold, seed) -> None:
    """Evaluate a saved model on a full dataset (no training)."""
    from .calibration import build_report
    from .experiment import evaluate_head
    import numpy as np

    artifact = load_model(model_path)
    data = read_embf(dataset_path)
    data.validate()
    if data.dim != artifact.embedding_dim:
        raise DataError(f"dataset dim {data.dim} != model embedding dim {artifact.embedding_dim}")
    tcfg = artifact.train_config
    records = evaluate_head(
        artifact.head,
        data,
        np.arange(len(data)),
        mc_passes or tcfg.mc_passes_eval,
        tcfg.seed if seed is None else seed,
        tcfg.use_posterior,
    )
    report = build_report(records, flag_threshold=flag_threshold)
    os.makedirs(output_dir, exist_ok=True)
    payload = {"dataset": data.name, "model": model_path, "metrics": report.to_dict()}
    with open(os.path.join(output_dir, "eval_report.json"), "wb") as fh:
        fh.write((json.dumps(payload, sort_keys=True, indent=2) + "\n").encode())
    click.echo(
        f"eval f1={report.f1_macro:.3f} acc={report.accuracy:.3f} "
        f"brier={report.brier:.3f} rmse={report.rmse:.3f} -> {output_dir}"
    )


@main.command("fewshot")
@experiment_options
@click.option("--shots", type=str, default="0,5,15", show_default=True, help="Comma-separated k values; 0 = zero-shot.")
@cli_errors
def fewshot_cmd(shots: str, **kwargs) -> None:
    """Run the zero/k-shot protocol, one experiment per k."""
    cfg = build_config(kwargs)
    _require_dataset(cfg)
    base_out = cfg.output_dir
    summary = {}
    for token in shots.split(","):
        k = int(token)
        cfg.output_dir = os.path.join(base_out, f"shot{k}")
        if k == 0:
            cfg.split = SplitPlan(mode="zero_shot", seed=cfg.train.seed)
        else:
            cfg.split = SplitPlan(mode="k_shot", k=k, seed=cfg.train.seed)
        report = run_experiment(cfg)
        summary[f"shot{k}"] = report["mean"]
        _echo_summary(report)
    cfg.output_dir = base_out
    with open(os.path.join(base_out, "fewshot_summary.json"), "wb") as fh:
        fh.write((json.dumps(summary, sort_keys=True, indent=2) + "\n").encode())


@main.command("crossval")
@experiment_options
@click.option("--folds", type=int, default=5, show_default=True)
@cli_errors
def crossval_cmd(folds: int, **kwargs) -> None:
    """k-fold cross-validation; the report carries per-fold and mean metrics."""
    cfg = build_config(kwargs)
    _require_dataset(cfg)
    cfg.split = SplitPlan(mode="cross_val", folds=folds, seed=cfg.train.seed)
    _echo_summary(run_experiment(cfg))


@main.command("compare")
@click.argument("report_a", type=click.Path(exists=False))
@click.argument("report_b", type=click.Path(exists=False))
@click.option("--output", type=click.Path(), default=None)
@cli_errors
def compare_cmd(report_a, report_b, output) -> None:
    """Delta table between two report.json files (A minus B)."""
    with open(report_a, "r", encoding="utf-8") as fh:
        a = json.load(fh)
    with open(report_b, "r", encoding="utf-8") as fh:
        b = json.load(fh)
    table = compare_runs(a, b)
    text = json.dumps(table, sort_keys=True, indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    click.echo(text, nl=False)


@main.command("flag")
@click.option("--model", "model_path", type=click.Path(), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(), required=True)
@click.option("--threshold", type=float, default=0.7, show_default=True)
@click.option("--mc-passes", type=int, default=None)
@cli_errors
def flag_cmd(model_path, dataset_path, threshold, mc_passes) -> None:
    """List instances whose max probability falls below the threshold."""
    artifact = load_model(model_path)
    data = read_embf(dataset_path)
    data.validate()
    tcfg = artifact.train_config
    records = []
    for i, iid in enumerate(data.ids):
        rng = stream(tcfg.seed, PREDICT, key_for(iid))
        summary = predict_mc(
            artifact.head, data.vectors[i], mc_passes or tcfg.mc_passes_eval, rng, tcfg.use_posterior
        )
        records.append(
            PredictionRecord(iid, summary.mean_probs, int(data.labels[i]), summary.sample_variance)
        )
    for iid in flag_uncertain(records, threshold):
        click.echo(iid)


@main.command("report-svg")
@click.argument("report_path", type=click.Path())
@click.option("--output-dir", type=click.Path(), default=None)
@cli_errors
def report_svg_cmd(report_path, output_dir) -> None:
    """Render static SVG charts from a report.json."""
    with open(report_path, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    out = output_dir or os.path.dirname(os.path.abspath(report_path))
    os.makedirs(out, exist_ok=True)
    for name, text in report_svgs(report).items():
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        click.echo(os.path.join(out, name))


if __name__ == "__main__":
    main()
