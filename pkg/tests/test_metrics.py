from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import f1_score, roc_auc_score

from catprobe.metrics import (
    DeltaSet,
    ExpenseStats,
    MetricSet,
    aggregate_expenses,
    auc_score,
    compute_deltas,
    compute_metrics,
)


@dataclass
class FakeOutcome:
    skipped: bool
    queries: int = 0
    runtime: float = 0.0


class TestAuc:
    def test_perfect_separation(self):
        assert auc_score([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0]) == 1.0

    def test_ties_count_half(self):
        assert auc_score([0.5, 0.5], [1, 0]) == 0.5

    def test_single_class_undefined(self):
        assert auc_score([0.1, 0.9], [1, 1]) is None
        assert auc_score([0.1, 0.9], [0, 0]) is None

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)),
                    min_size=4, max_size=40))
    @settings(max_examples=200, deadline=None)
    def test_matches_sklearn(self, pairs):
        scores = [round(s, 3) for s, _ in pairs]
        labels = [l for _, l in pairs]
        if len(set(labels)) < 2:
            assert auc_score(scores, labels) is None
            return
        assert auc_score(scores, labels) == pytest.approx(
            roc_auc_score(labels, scores))

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)),
                    min_size=4, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_monotone_transform_invariance(self, pairs):
        scores = np.array([round(s, 3) for s, _ in pairs])
        labels = [l for _, l in pairs]
        if len(set(labels)) < 2:
            return
        assert auc_score(scores, labels) == pytest.approx(
            auc_score(3.0 * scores + 1.0, labels))


class TestComputeMetrics:
    def test_perfect_predictions(self):
        m = compute_metrics([1, 0, 1, 0], [1, 0, 1, 0], include_dr=True)
        assert m.acc == 1.0
        assert m.fpr == 0.0
        assert m.dr == 1.0
        assert m.f1 == 1.0

    def test_forced_precision_f1_identity(self):
        """With all-positive labels and only true/false positives among
        predictions, precision is 1 and f1 = 2a/(1+a) where a is accuracy."""
        n = 100
        a = 0.91
        labels = np.ones(n, dtype=int)
        preds = np.ones(n, dtype=int)
        preds[: n - int(a * n)] = 0
        m = compute_metrics(preds, labels)
        assert m.acc == pytest.approx(0.91)
        assert m.f1 == pytest.approx(2 * a / (1 + a))
        assert m.f1 == pytest.approx(0.9529, abs=5e-4)
        assert abs(m.f1 - 0.96) < 0.01

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)),
                    min_size=1, max_size=50))
    @settings(max_examples=200, deadline=None)
    def test_f1_matches_sklearn(self, pairs):
        preds = [p for p, _ in pairs]
        labels = [l for _, l in pairs]
        m = compute_metrics(preds, labels)
        assert m.f1 == pytest.approx(
            f1_score(labels, preds, zero_division=0.0))

    def test_fpr_undefined_without_negatives(self):
        m = compute_metrics([1, 1], [1, 1])
        assert m.fpr is None

    def test_dr_only_on_request(self):
        assert compute_metrics([1, 0], [1, 0]).dr is None
        assert compute_metrics([1, 0], [1, 0], include_dr=True).dr == 1.0

    def test_auc_from_scores(self):
        m = compute_metrics([1, 1, 0, 0], [1, 1, 0, 0],
                            scores=[0.9, 0.8, 0.3, 0.2])
        assert m.auc == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            compute_metrics([1, 0], [1])

    def test_values_in_unit_interval(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 30))
            m = compute_metrics(rng.integers(0, 2, n), rng.integers(0, 2, n),
                                scores=rng.random(n), include_dr=True)
            for v in m.as_dict().values():
                if v is not None:
                    assert 0.0 <= v <= 1.0


class TestComputeDeltas:
    def test_accuracy_drop(self):
        d = compute_deltas(MetricSet(acc=0.92), MetricSet(acc=0.55))
        assert d.dacc == pytest.approx(-0.4022, abs=1e-4)
        assert round(d.dacc * 100) == -40

    def test_detection_rate_wipeout(self):
        d = compute_deltas(MetricSet(dr=0.63), MetricSet(dr=0.0))
        assert d.ddr == pytest.approx(-1.0)

    def test_identity_gives_zero(self):
        m = MetricSet(acc=0.7, f1=0.5, fpr=0.2, auc=0.9, dr=0.6)
        d = compute_deltas(m, m)
        assert all(v == 0.0 for v in d.as_dict().values())

    def test_zero_baseline_undefined(self):
        d = compute_deltas(MetricSet(fpr=0.0), MetricSet(fpr=0.4))
        assert d.dfpr is None

    def test_absent_baseline_undefined(self):
        d = compute_deltas(MetricSet(), MetricSet(acc=0.5))
        assert d.dacc is None

    @given(st.floats(0.01, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=100, deadline=None)
    def test_sign_matches_direction(self, before, after):
        d = compute_deltas(MetricSet(acc=before), MetricSet(acc=after))
        if after <= before:
            assert d.dacc <= 0
        else:
            assert d.dacc > 0


class TestAggregateExpenses:
    def test_mean_over_attacked(self):
        e = aggregate_expenses([FakeOutcome(False, 10, 0.1),
                                FakeOutcome(False, 30, 0.9),
                                FakeOutcome(True)])
        assert e.avg_queries == 20.0
        assert e.avg_runtime == pytest.approx(0.5)
        assert e.attacked_count == 2
        assert e.skipped_count == 1

    def test_all_skipped(self):
        e = aggregate_expenses([FakeOutcome(True)] * 4)
        assert e == ExpenseStats(None, None, 0, 4)

    def test_single_unit(self):
        e = aggregate_expenses([FakeOutcome(False, 7, 0.5)])
        assert e.avg_runtime == pytest.approx(0.5)
        assert e.avg_queries == 7.0
