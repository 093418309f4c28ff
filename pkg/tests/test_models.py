import numpy as np
import pytest

from catprobe.models import (
    SoftmaxClassifier,
    TrainConfig,
    gradient_check,
    hidden_rule_labels,
    load_model,
    normal_chain,
    save_model,
    synth_classification,
    synth_log_sessions,
    train_softmax,
    train_window_predictor,
)
from catprobe.pipeline import slice_windows


class TestSynthClassification:
    def test_shapes(self):
        ds = synth_classification(seed=1, num_features=4, num_candidates=3, count=200)
        assert len(ds) == 200
        assert all(len(inst.candidates[i]) == 3 for inst in ds.instances for i in range(4))

    def test_deterministic(self):
        a = synth_classification(seed=7, num_features=3, num_candidates=4, count=50)
        b = synth_classification(seed=7, num_features=3, num_candidates=4, count=50)
        assert a.instances == b.instances

    def test_noise_free_labels_match_hidden_rule(self):
        ds = synth_classification(seed=3, num_features=5, num_candidates=3, count=100,
                                  label_noise=0.0)
        for inst in ds.instances:
            assert inst.true_label == hidden_rule_labels(3, 5, 3, 2, inst.values)


class TestTrainSoftmax:
    def test_fits_separable_data(self):
        ds = synth_classification(seed=1, num_features=4, num_candidates=3, count=200,
                                  label_noise=0.0)
        model = train_softmax(ds, TrainConfig(epochs=40, seed=0))
        assert model.accuracy(ds) >= 0.95

    def test_zero_epochs_is_chance(self):
        ds = synth_classification(seed=2, num_features=4, num_candidates=3, count=400,
                                  label_noise=0.0)
        model = train_softmax(ds, TrainConfig(epochs=0, seed=0))
        assert 0.3 <= model.accuracy(ds) <= 0.7

    def test_same_seed_same_parameters(self):
        ds = synth_classification(seed=1, num_features=3, num_candidates=3, count=60)
        cfg = TrainConfig(epochs=5, seed=11)
        a = train_softmax(ds, cfg)
        b = train_softmax(ds, cfg)
        assert np.array_equal(a.weights, b.weights)
        assert all(np.array_equal(x, y) for x, y in zip(a.embeddings, b.embeddings))


class TestPredictProba:
    def test_zero_parameters_give_uniform(self):
        model = SoftmaxClassifier(
            embeddings=[np.zeros((3, 2))], weights=np.zeros((4, 2)), bias=np.zeros(4)
        )
        assert np.allclose(model.predict_proba((0,)), 0.25)

    def test_shift_invariance(self):
        model = SoftmaxClassifier.init([3, 3], num_classes=2, embed_dim=2, seed=5)
        base = model.predict_proba((1, 2))
        model.bias += 3.7  # constant logit shift
        shifted = model.predict_proba((1, 2))
        assert np.allclose(base, shifted, atol=1e-12)
        assert np.argmax(base) == np.argmax(shifted)


class TestGradientCheck:
    def test_random_models(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            model = SoftmaxClassifier.init([3, 4], num_classes=3, embed_dim=2,
                                           seed=int(rng.integers(1000)))
            values = (int(rng.integers(3)), int(rng.integers(4)))
            assert gradient_check(model, values, int(rng.integers(3))) < 1e-4

    def test_repeatable(self):
        model = SoftmaxClassifier.init([3], num_classes=2, embed_dim=2, seed=1)
        assert gradient_check(model, (0,), 0) == gradient_check(model, (0,), 0)


class TestSynthLogSessions:
    def test_all_normal_when_fraction_zero(self):
        ds = synth_log_sessions(seed=1, vocab=10, count=20, abnormal_fraction=0.0)
        assert all(inst.session_label == 0 for inst in ds.instances)

    def test_reproducible(self):
        a = synth_log_sessions(seed=5, vocab=12, count=10)
        b = synth_log_sessions(seed=5, vocab=12, count=10)
        assert a.instances == b.instances

    def test_lengths_in_range(self):
        ds = synth_log_sessions(seed=2, vocab=10, count=30)
        assert all(50 <= len(inst.values) <= 200 for inst in ds.instances)

    def test_abnormal_sessions_leave_the_chain(self):
        ds = synth_log_sessions(seed=4, vocab=15, count=20, abnormal_fraction=0.5)
        chain = normal_chain(4, 15)
        for inst in ds.instances:
            transitions = [chain[a, b] for a, b in zip(inst.values, inst.values[1:])]
            if inst.session_label == 1:
                assert min(transitions) < 0.01
            else:
                assert min(transitions) > 0.01


def test_window_predictor_learns_the_chain():
    """Next-key accuracy thresholds calibrated against the chain's Bayes predictor
    (dominant transition probability 0.7, support of 5 keys)."""
    train = synth_log_sessions(seed=10, vocab=20, count=40, abnormal_fraction=0.0)
    held = synth_log_sessions(seed=11, vocab=20, count=10, abnormal_fraction=0.0,
                              chain_seed=10)
    model = train_window_predictor(train, window=10, cfg=TrainConfig(epochs=3, seed=0))
    top1 = top9 = total = 0
    for sess in held.instances:
        for unit in slice_windows(sess, 10):
            probs = model.predict_proba(unit.inputs)
            order = np.argsort(probs)[::-1]
            top1 += unit.target == order[0]
            top9 += unit.target in order[:9]
            total += 1
    assert top1 / total >= 0.6
    assert top9 / total >= 0.95


def test_save_load_identity(tmp_path):
    model = SoftmaxClassifier.init([3, 5], num_classes=2, embed_dim=4, seed=9)
    path = tmp_path / "m.npz"
    save_model(model, path)
    loaded = load_model(path)
    assert np.array_equal(model.weights, loaded.weights)
    assert np.array_equal(model.bias, loaded.bias)
    assert all(np.array_equal(a, b) for a, b in zip(model.embeddings, loaded.embeddings))


def test_train_rejects_bad_config():
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
