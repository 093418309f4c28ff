"""End-to-end assessment drivers.

Three modes: plain classification assessment, next-key prediction over
sliding log windows with top-K consistency, and session-level anomaly
assessment where a session is flagged abnormal whenever any of its windows
is inconsistent.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .instances import CategoricalInstance, Dataset
from .metrics import ExpenseStats, MetricSet, aggregate_expenses, compute_metrics
from .oracle import Oracle
from .search import SearchConfig, margin_topk, run_search

__all__ = [
    "WindowUnit",
    "UnitOutcome",
    "AssessmentRun",
    "slice_windows",
    "windows_as_instances",
    "assess_classification",
    "assess_log_windows",
    "assess_sessions",
    "write_unit_outcomes",
]


@dataclass(frozen=True)
class WindowUnit:
    """One sliding window: the inputs are the first window-1 keys, the target
    is the last key."""

    session_id: str
    offset: int
    inputs: tuple[int, ...]
    target: int


@dataclass
class UnitOutcome:
    """Per-unit assessment record (instance, window, or session-window)."""

    unit_id: str
    skipped: bool
    success: bool = False
    queries: int = 0
    runtime: float = 0.0
    margin: float | None = None
    before_ok: bool = True  # clean prediction correct / window consistent
    after_ok: bool = True
    before_score: float | None = None
    after_score: float | None = None
    terminated_by: str | None = None

    def as_dict(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "skipped": self.skipped,
            "success": self.success,
            "queries": self.queries,
            "runtime": self.runtime,
            "margin": self.margin,
            "before_ok": self.before_ok,
            "after_ok": self.after_ok,
            "terminated_by": self.terminated_by,
        }


@dataclass
class AssessmentRun:
    """A completed assessment: configuration echo plus per-unit outcomes."""

    mode: str
    config: SearchConfig
    outcomes: list[UnitOutcome]
    before: MetricSet
    after: MetricSet
    expenses: ExpenseStats
    k_rank: int = 1
    window: int | None = None
    window_fraction: float | None = None
    dataset_digest: str | None = None
    session_flags: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def slice_windows(session: CategoricalInstance, window: int) -> list[WindowUnit]:
    """Overlapping length-`window` windows at stride 1 over a session's keys."""
    keys = session.values
    if len(keys) < window:
        return []
    return [
        WindowUnit(
            session_id=session.session_id or session.id,
            offset=off,
            inputs=keys[off : off + window - 1],
            target=keys[off + window - 1],
        )
        for off in range(len(keys) - window + 1)
    ]


def window_instance(unit: WindowUnit, vocab: int) -> CategoricalInstance:
    """A window as a categorical instance: every position may take any key."""
    return CategoricalInstance(
        id=f"{unit.session_id}@{unit.offset}",
        true_label=unit.target,
        values=unit.inputs,
        candidates=tuple(tuple(range(vocab)) for _ in unit.inputs),
    )


def windows_as_instances(session: CategoricalInstance, window: int, vocab: int):
    return [window_instance(u, vocab) for u in slice_windows(session, window)]


def _parallel_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def assess_classification(
    data: Dataset, oracle: Oracle, cfg: SearchConfig, workers: int = 1
) -> AssessmentRun:
    """Attack every correctly-classified instance; clean misses are skipped.

    Clean and verification queries run on a side handle so expense averages
    cover only the search itself.
    """
    if data.kind != "classification":
        raise ValueError("assess_classification expects a classification dataset")
    binary = data.num_classes == 2

    def assess_one(inst: CategoricalInstance) -> UnitOutcome:
        side = oracle.clone()
        clean = side.query(inst)
        before_ok = int(np.argmax(clean)) == inst.true_label
        rec = UnitOutcome(
            unit_id=inst.id,
            skipped=not before_ok,
            before_ok=before_ok,
            after_ok=before_ok,
            before_score=float(clean[1]) if binary else None,
        )
        rec.after_score = rec.before_score
        if not before_ok:
            return rec
        outcome = run_search(inst, oracle.clone(), cfg)
        after = side.query(inst, outcome.perturbation)
        rec.success = outcome.success
        rec.queries = outcome.stats.queries_issued
        rec.runtime = outcome.wall_time
        rec.margin = outcome.margin
        rec.after_ok = int(np.argmax(after)) == inst.true_label
        rec.after_score = float(after[1]) if binary else None
        rec.terminated_by = outcome.terminated_by
        return rec

    outcomes = _parallel_map(assess_one, data.instances, workers)
    labels = [inst.true_label for inst in data.instances]
    before_pred = [inst.true_label if o.before_ok else _other(inst.true_label, data.num_classes)
                   for inst, o in zip(data.instances, outcomes)]
    after_pred = [inst.true_label if o.after_ok else _other(inst.true_label, data.num_classes)
                  for inst, o in zip(data.instances, outcomes)]
    before_scores = [o.before_score for o in outcomes] if binary else None
    after_scores = [o.after_score for o in outcomes] if binary else None
    before = compute_metrics(before_pred, labels, before_scores) if binary else MetricSet(
        acc=float(np.mean([o.before_ok for o in outcomes]))
    )
    after = compute_metrics(after_pred, labels, after_scores) if binary else MetricSet(
        acc=float(np.mean([o.after_ok for o in outcomes]))
    )
    return AssessmentRun(
        mode="classification",
        config=cfg,
        outcomes=outcomes,
        before=before,
        after=after,
        expenses=aggregate_expenses(outcomes),
        dataset_digest=data.source_digest,
    )


def _other(label: int, num_classes: int) -> int:
    return (label + 1) % num_classes


def assess_log_windows(
    sessions: Dataset,
    oracle: Oracle,
    cfg: SearchConfig,
    window: int = 10,
    workers: int = 1,
) -> AssessmentRun:
    """Attack every clean-consistent window of every session.

    A window is consistent when the true next key is within the top
    cfg.topk predictions. Windows already inconsistent are skipped. The
    binary view treats "consistent" as the positive prediction against
    all-ones labels, so precision is 1 by construction; AUC uses the
    probability assigned to the true key as the score against the clean
    consistency flag as the label.
    """
    if sessions.kind != "log_sessions":
        raise ValueError("assess_log_windows expects a log_sessions dataset")
    vocab = sessions.num_classes
    warnings = []
    units = []
    for sess in sessions.instances:
        ws = slice_windows(sess, window)
        if not ws:
            warnings.append(f"session {sess.id}: shorter than window {window}, no windows")
        units.extend(ws)

    def assess_one(unit: WindowUnit) -> UnitOutcome:
        inst = window_instance(unit, vocab)
        side = oracle.clone()
        clean = side.query(inst)
        clean_margin = margin_topk(clean, inst.true_label, cfg.topk)
        before_ok = clean_margin < 0
        rec = UnitOutcome(
            unit_id=inst.id,
            skipped=not before_ok,
            before_ok=before_ok,
            after_ok=before_ok,
            before_score=float(clean[inst.true_label]),
        )
        rec.after_score = rec.before_score
        if not before_ok:
            return rec
        outcome = run_search(inst, oracle.clone(), cfg)
        after = side.query(inst, outcome.perturbation)
        rec.success = outcome.success
        rec.queries = outcome.stats.queries_issued
        rec.runtime = outcome.wall_time
        rec.margin = outcome.margin
        rec.after_ok = margin_topk(after, inst.true_label, cfg.topk) < 0
        rec.after_score = float(after[inst.true_label])
        rec.terminated_by = outcome.terminated_by
        return rec

    outcomes = _parallel_map(assess_one, units, workers)
    labels = [1] * len(outcomes)
    clean_flags = [1 if o.before_ok else 0 for o in outcomes]
    before = compute_metrics([1 if o.before_ok else 0 for o in outcomes], labels)
    after = compute_metrics([1 if o.after_ok else 0 for o in outcomes], labels)
    from .metrics import auc_score

    before.auc = auc_score([o.before_score for o in outcomes], clean_flags)
    after.auc = auc_score([o.after_score for o in outcomes], clean_flags)
    return AssessmentRun(
        mode="log_window",
        config=cfg,
        outcomes=outcomes,
        before=before,
        after=after,
        expenses=aggregate_expenses(outcomes),
        k_rank=cfg.topk,
        window=window,
        dataset_digest=sessions.source_digest,
        warnings=warnings,
    )


def assess_sessions(
    sessions: Dataset,
    oracle: Oracle,
    cfg: SearchConfig,
    window: int = 10,
    window_fraction: float = 0.3,
    workers: int = 1,
) -> AssessmentRun:
    """Session-level anomaly assessment before and after window attacks.

    Clean pass: a session is flagged abnormal when at least one window is
    inconsistent. Attack pass: a seeded uniform sample of
    ceil(fraction * window count) windows per session is attacked; on
    abnormal sessions the attack pushes windows toward consistency
    (evasion), on normal sessions toward inconsistency (false alarms).
    Session flags are recomputed with the attacked windows substituted.
    """
    if sessions.kind != "log_sessions":
        raise ValueError("assess_sessions expects a log_sessions dataset")
    if not 0.0 < window_fraction <= 1.0:
        raise ValueError("window_fraction must be in (0, 1]")
    vocab = sessions.num_classes
    warnings = []

    def assess_session(item: tuple[int, CategoricalInstance]):
        sess_idx, sess = item
        side = oracle.clone()
        units = slice_windows(sess, window)
        if not units:
            return [], {"session_id": sess.id, "label": sess.session_label,
                        "before": False, "after": False, "windows": 0}
        clean_margins = [
            margin_topk(side.query(window_instance(u, vocab)), u.target, cfg.topk) for u in units
        ]
        inconsistent = [m >= 0 for m in clean_margins]
        rng = np.random.default_rng((cfg.seed, sess_idx))
        pick_count = math.ceil(window_fraction * len(units))
        picked = sorted(rng.choice(len(units), size=pick_count, replace=False).tolist())
        evade = sess.session_label == 1  # abnormal: force windows consistent
        records = []
        after_flags = list(inconsistent)
        for w_idx in picked:
            unit = units[w_idx]
            inst = window_instance(unit, vocab)
            # Nothing to attack when the window already has the adversary's
            # preferred state.
            if inconsistent[w_idx] != evade:
                records.append(
                    UnitOutcome(unit_id=inst.id, skipped=True,
                                before_ok=not inconsistent[w_idx],
                                after_ok=not inconsistent[w_idx])
                )
                continue
            unit_cfg = SearchConfig(**{**cfg.__dict__, "invert_objective": evade})
            outcome = run_search(inst, oracle.clone(), unit_cfg)
            after = side.query(inst, outcome.perturbation)
            after_flags[w_idx] = margin_topk(after, inst.true_label, cfg.topk) >= 0
            records.append(
                UnitOutcome(
                    unit_id=inst.id,
                    skipped=False,
                    success=outcome.success,
                    queries=outcome.stats.queries_issued,
                    runtime=outcome.wall_time,
                    margin=outcome.margin,
                    before_ok=not inconsistent[w_idx],
                    after_ok=not after_flags[w_idx],
                    terminated_by=outcome.terminated_by,
                )
            )
        flag = {
            "session_id": sess.id,
            "label": sess.session_label,
            "before": any(inconsistent),
            "after": any(after_flags),
            "windows": len(units),
        }
        return records, flag

    results = _parallel_map(assess_session, list(enumerate(sessions.instances)), workers)
    outcomes = [rec for records, _ in results for rec in records]
    flags = [flag for _, flag in results]
    warnings = [
        f"session {f['session_id']}: shorter than window {window}, no windows"
        for f in flags if f["windows"] == 0
    ]
    scored = [f for f in flags if f["windows"] > 0]
    labels = [f["label"] for f in scored]
    before = compute_metrics([int(f["before"]) for f in scored], labels, include_dr=True)
    after = compute_metrics([int(f["after"]) for f in scored], labels, include_dr=True)
    return AssessmentRun(
        mode="session",
        config=cfg,
        outcomes=outcomes,
        before=before,
        after=after,
        expenses=aggregate_expenses(outcomes),
        k_rank=cfg.topk,
        window=window,
        window_fraction=window_fraction,
        dataset_digest=sessions.source_digest,
        session_flags=flags,
        warnings=warnings,
    )


def write_unit_outcomes(run: AssessmentRun, path: str) -> None:
    """Append per-unit outcome records as line-delimited JSON."""
    with open(path, "a", encoding="utf-8") as fh:
        for rec in run.outcomes:
            fh.write(json.dumps(rec.as_dict(), sort_keys=True) + "\n")
