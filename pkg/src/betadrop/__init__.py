"""Uncertainty-aware classification over precomputed text embeddings.

Monte Carlo dropout with per-layer Beta-distributed keep-probabilities and
deterministic kernel feature maps, plus the calibration and few-shot
evaluation harness around it.
"""

from .bayes_dropout import (
    BetaState,
    DropoutHead,
    LayerSpec,
    PredictiveSummary,
    beta_posterior_update,
    forward_stochastic,
    init_head,
    predict_mc,
    predictive_variance,
    sample_keep_prob,
    sample_mask,
)
from .calibration import (
    CalibrationReport,
    PredictionRecord,
    brier_binary,
    brier_multiclass,
    build_report,
    f1_accuracy,
    flag_uncertain,
    per_class_brier,
    probability_bins,
    rmse,
    second_choice_accuracy,
)
from .data_io import (
    EmbeddingDataset,
    ModelArtifact,
    import_jsonl,
    load_model,
    read_embf,
    save_model,
    write_embf,
)
from .errors import BetadropError, ConfigError, DataError, NumericError
from .experiment import ExperimentConfig, compare_runs, run_experiment
from .kernels import KernelConfig, kernel_map, output_dim
from .training import (
    SplitPlan,
    TrainConfig,
    TrainTrace,
    gradient_check,
    loss,
    make_splits,
    train,
)

__version__ = "0.1.0"
