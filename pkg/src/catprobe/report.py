"""Diagnostic report assembly and rendering.

The machine rendering is canonical key-sorted JSON and round-trips
losslessly; it deliberately excludes wall-clock timing so identical runs
produce byte-identical files. Timing appears in the human rendering only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .metrics import DeltaSet, ExpenseStats, MetricSet, compute_deltas
from .pipeline import AssessmentRun

__all__ = ["DiagnosticReport", "build_report", "render", "parse_machine", "TOOLKIT_VERSION"]

TOOLKIT_VERSION = "0.1.0"


@dataclass
class DiagnosticReport:
    mode: str
    config: dict
    dataset_digest: str | None
    before: MetricSet
    after: MetricSet
    deltas: DeltaSet
    expenses: ExpenseStats
    unit_summary: dict
    version: str = TOOLKIT_VERSION
    avg_runtime: float | None = None  # volatile; excluded from the machine form


def build_report(run: AssessmentRun) -> DiagnosticReport:
    """Assemble the report; deterministic given the run's non-timing content."""
    config = dict(run.config.__dict__)
    config.update(
        {"mode": run.mode, "k_rank": run.k_rank, "window": run.window,
         "window_fraction": run.window_fraction}
    )
    attacked = [o for o in run.outcomes if not o.skipped]
    unit_summary = {
        "units": len(run.outcomes),
        "attacked": len(attacked),
        "skipped": sum(1 for o in run.outcomes if o.skipped),
        "successes": sum(1 for o in attacked if o.success),
        "timeouts": sum(1 for o in attacked if o.terminated_by == "timeout"),
    }
    if run.session_flags:
        unit_summary["sessions"] = len(run.session_flags)
    return DiagnosticReport(
        mode=run.mode,
        config=config,
        dataset_digest=run.dataset_digest,
        before=run.before,
        after=run.after,
        deltas=compute_deltas(run.before, run.after),
        expenses=run.expenses,
        unit_summary=unit_summary,
        avg_runtime=run.expenses.avg_runtime,
    )


def _pct(value: float | None) -> str:
    if value is None:
        return "n/a (zero baseline)"
    return f"{value * 100:+.0f}%"


def _cell(metric: float | None, delta: float | None) -> str:
    if metric is None:
        return "n/a"
    return f"{metric:.2f} ({_pct(delta)})"


def render(report: DiagnosticReport, style: str = "machine") -> str:
    """machine: canonical key-sorted JSON (no timing). human: plain-text tables."""
    if style == "machine":
        payload = {
            "version": report.version,
            "mode": report.mode,
            "config": report.config,
            "dataset_digest": report.dataset_digest,
            "before": report.before.as_dict(),
            "after": report.after.as_dict(),
            "deltas": report.deltas.as_dict(),
            "expenses": {
                "avg_queries": report.expenses.avg_queries,
                "attacked_count": report.expenses.attacked_count,
                "skipped_count": report.expenses.skipped_count,
            },
            "unit_summary": report.unit_summary,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if style != "human":
        raise ValueError(f"unknown render style {style!r}")

    b, a, d = report.before, report.after, report.deltas
    rows = [
        ("Acc/DAcc", _cell(a.acc, d.dacc), _fmt(b.acc)),
        ("F1/DF1", _cell(a.f1, d.df1), _fmt(b.f1)),
        ("FPR/DFPR", _cell(a.fpr, d.dfpr), _fmt(b.fpr)),
        ("AUC/DAUC", _cell(a.auc, d.dauc), _fmt(b.auc)),
        ("DR/DDR", _cell(a.dr, d.ddr), _fmt(b.dr)),
    ]
    lines = [
        f"Robustness diagnostic report (toolkit {report.version})",
        f"mode: {report.mode}",
        "config: " + ", ".join(f"{k}={v}" for k, v in sorted(report.config.items())),
        f"dataset digest: {report.dataset_digest}",
        "",
        f"{'metric':<10} {'after attack':<22} {'before':<8}",
    ]
    for name, cell, base in rows:
        if cell != "n/a":
            lines.append(f"{name:<10} {cell:<22} {base:<8}")
    e = report.expenses
    lines.append("")
    lines.append(
        f"attacked units: {e.attacked_count}, skipped: {e.skipped_count}"
    )
    if e.avg_queries is not None:
        lines.append(f"avg queries per attacked unit: {e.avg_queries:.1f}")
    if report.avg_runtime is not None:
        lines.append(f"avg runtime per attacked unit: {report.avg_runtime:.3f} s")
    return "\n".join(lines) + "\n"


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def parse_machine(text: str) -> DiagnosticReport:
    """Parse the machine rendering back into a report (timing is None)."""
    payload = json.loads(text)
    return DiagnosticReport(
        mode=payload["mode"],
        config=payload["config"],
        dataset_digest=payload["dataset_digest"],
        before=MetricSet(**payload["before"]),
        after=MetricSet(**payload["after"]),
        deltas=DeltaSet(**payload["deltas"]),
        expenses=ExpenseStats(
            avg_queries=payload["expenses"]["avg_queries"],
            avg_runtime=None,
            attacked_count=payload["expenses"]["attacked_count"],
            skipped_count=payload["expenses"]["skipped_count"],
        ),
        unit_summary=payload["unit_summary"],
        version=payload["version"],
    )
