"""catprobe: query-based robustness assessment for classifiers over categorical inputs."""

from .instances import (
    CategoricalInstance,
    Dataset,
    PerturbationSet,
    apply_perturbation,
    diff,
    load_dataset,
    write_dataset,
)
from .metrics import DeltaSet, ExpenseStats, MetricSet, aggregate_expenses, compute_deltas, compute_metrics
from .models import (
    SoftmaxClassifier,
    TrainConfig,
    gradient_check,
    load_model,
    save_model,
    synth_classification,
    synth_log_sessions,
    train_softmax,
    train_window_predictor,
)
from .oracle import Oracle, OracleError, QueryStats, oracle_from_model, remote_oracle, truth_oracle
from .pipeline import (
    AssessmentRun,
    assess_classification,
    assess_log_windows,
    assess_sessions,
    slice_windows,
)
from .report import DiagnosticReport, build_report, parse_machine, render
from .search import (
    SearchConfig,
    SearchOutcome,
    brute_force,
    fsgs,
    margin,
    margin_topk,
    run_search,
    sgs,
    ucbs,
)

__version__ = "0.1.0"
