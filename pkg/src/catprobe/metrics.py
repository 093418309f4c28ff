"""Detection metrics, attack deltas, and assessment-expense statistics."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "MetricSet",
    "DeltaSet",
    "ExpenseStats",
    "compute_metrics",
    "compute_deltas",
    "aggregate_expenses",
    "auc_score",
]


@dataclass
class MetricSet:
    """Per-mode detection metrics; absent metrics are None."""

    acc: float | None = None
    f1: float | None = None
    fpr: float | None = None
    auc: float | None = None
    dr: float | None = None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class DeltaSet:
    """Signed relative changes per metric; None marks a zero or absent baseline."""

    dacc: float | None = None
    df1: float | None = None
    dfpr: float | None = None
    dauc: float | None = None
    ddr: float | None = None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class ExpenseStats:
    """Mean queries and runtime per attacked unit; skipped units counted apart."""

    avg_queries: float | None
    avg_runtime: float | None
    attacked_count: int
    skipped_count: int


def auc_score(scores, labels) -> float | None:
    """Probability that a random positive outranks a random negative.

    Rank-sum method with ties counting one half. None when only one class
    is present.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        return None
    wins = 0.0
    for p in pos:
        wins += np.sum(p > neg) + 0.5 * np.sum(p == neg)
    return float(wins / (len(pos) * len(neg)))


def compute_metrics(predictions, labels, scores=None, include_dr: bool = False) -> MetricSet:
    """Standard detection metrics with class 1 as the positive class.

    f1 is 0 when precision and recall are both undefined; fpr is None with
    no negatives; auc is None without scores or with single-class labels;
    dr (recall on positives) is reported only when include_dr is set.
    """
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")

    acc = float(np.mean(predictions == labels))
    tp = int(np.sum((predictions == 1) & (labels == 1)))
    fp = int(np.sum((predictions == 1) & (labels == 0)))
    fn = int(np.sum((predictions == 0) & (labels == 1)))
    tn = int(np.sum((predictions == 0) & (labels == 0)))

    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    if precision is None and recall is None:
        f1 = 0.0
    elif not precision or not recall:
        f1 = 0.0
    else:
        f1 = 2 * precision * recall / (precision + recall)
    fpr = fp / (fp + tn) if fp + tn > 0 else None
    dr = recall if include_dr else None
    auc = auc_score(scores, labels) if scores is not None else None
    return MetricSet(acc=acc, f1=f1, fpr=fpr, auc=auc, dr=dr)


def _delta(before: float | None, after: float | None) -> float | None:
    if before is None or after is None or before == 0:
        return None
    return (after - before) / before


def compute_deltas(before: MetricSet, after: MetricSet) -> DeltaSet:
    """Relative change of each metric; None for zero or absent baselines."""
    return DeltaSet(
        dacc=_delta(before.acc, after.acc),
        df1=_delta(before.f1, after.f1),
        dfpr=_delta(before.fpr, after.fpr),
        dauc=_delta(before.auc, after.auc),
        ddr=_delta(before.dr, after.dr),
    )


def aggregate_expenses(outcomes) -> ExpenseStats:
    """Expense means over attacked units; skipped units never contribute.

    `outcomes` is an iterable of per-unit records exposing `skipped`,
    `queries`, and `runtime` attributes.
    """
    attacked = [o for o in outcomes if not o.skipped]
    skipped = sum(1 for o in outcomes if o.skipped)
    if not attacked:
        return ExpenseStats(None, None, 0, skipped)
    return ExpenseStats(
        avg_queries=float(np.mean([o.queries for o in attacked])),
        avg_runtime=float(np.mean([o.runtime for o in attacked])),
        attacked_count=len(attacked),
        skipped_count=skipped,
    )
