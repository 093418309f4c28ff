"""Built-in trainable models and synthetic data generators.

A linear softmax classifier over jointly-trained per-feature embeddings
serves as the default assessment target, so the whole pipeline runs without
external ML dependencies. A window predictor is the same classifier applied
to consecutive log keys, predicting the next key.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import CategoricalInstance, Dataset

__all__ = [
    "SoftmaxClassifier",
    "TrainConfig",
    "train_softmax",
    "train_window_predictor",
    "gradient_check",
    "synth_classification",
    "synth_log_sessions",
    "save_model",
    "load_model",
    "MODEL_FORMAT_VERSION",
]

MODEL_FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0
    embed_dim: int = 8

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size <= 0 or self.embed_dim <= 0:
            raise ValueError("learning_rate, batch_size and embed_dim must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")


class SoftmaxClassifier:
    """Linear softmax over concatenated per-feature embedding vectors.

    Parameters: one embedding table per feature (rows indexed by candidate
    value), a weight matrix mapping the concatenated n*D features to K
    logits, and a K-vector bias. Embeddings are trained jointly with the
    weights.
    """

    def __init__(self, embeddings: list[np.ndarray], weights: np.ndarray, bias: np.ndarray):
        self.embeddings = [np.asarray(e, dtype=float) for e in embeddings]
        self.weights = np.asarray(weights, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.num_features = len(self.embeddings)
        self.embed_dim = self.embeddings[0].shape[1]
        self.num_classes = self.bias.shape[0]
        if self.weights.shape != (self.num_classes, self.num_features * self.embed_dim):
            raise ValueError("weight matrix shape does not match embeddings and bias")

    @classmethod
    def init(cls, vocab_sizes: list[int], num_classes: int, embed_dim: int, seed: int):
        rng = np.random.default_rng(seed)
        embeddings = [rng.uniform(-0.1, 0.1, size=(v, embed_dim)) for v in vocab_sizes]
        weights = rng.uniform(-0.1, 0.1, size=(num_classes, len(vocab_sizes) * embed_dim))
        bias = np.zeros(num_classes)
        return cls(embeddings, weights, bias)

    def _features(self, values) -> np.ndarray:
        return np.concatenate([self.embeddings[i][v] for i, v in enumerate(values)])

    def logits(self, values) -> np.ndarray:
        return self.weights @ self._features(values) + self.bias

    def predict_proba(self, values) -> np.ndarray:
        z = self.logits(values)
        z = np.exp(z - z.max())
        return z / z.sum()

    def predict(self, values) -> int:
        return int(np.argmax(self.logits(values)))

    def accuracy(self, data: Dataset) -> float:
        correct = sum(1 for inst in data.instances if self.predict(inst.values) == inst.true_label)
        return correct / len(data)

    def loss_and_grads(self, values, label: int):
        """Cross-entropy loss and gradients w.r.t. all parameters for one sample."""
        feats = self._features(values)
        z = self.weights @ feats + self.bias
        z = z - z.max()
        expz = np.exp(z)
        probs = expz / expz.sum()
        loss = -np.log(probs[label] + 1e-300)
        dlogits = probs.copy()
        dlogits[label] -= 1.0
        dW = np.outer(dlogits, feats)
        db = dlogits
        dfeats = self.weights.T @ dlogits
        demb = [(i, v, dfeats[i * self.embed_dim : (i + 1) * self.embed_dim])
                for i, v in enumerate(values)]
        return loss, dW, db, demb


def train_softmax(data: Dataset, cfg: TrainConfig) -> SoftmaxClassifier:
    """Mini-batch gradient descent on cross-entropy; deterministic given the seed."""
    if data.kind != "classification":
        raise ValueError("train_softmax expects a classification dataset")
    vocab_sizes = [
        1 + max(max(inst.candidates[i]) for inst in data.instances)
        for i in range(data.instances[0].num_features)
    ]
    model = SoftmaxClassifier.init(vocab_sizes, data.num_classes, cfg.embed_dim, cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    samples = [(inst.values, inst.true_label) for inst in data.instances]
    for _ in range(cfg.epochs):
        order = rng.permutation(len(samples))
        for start in range(0, len(samples), cfg.batch_size):
            batch = [samples[j] for j in order[start : start + cfg.batch_size]]
            dW = np.zeros_like(model.weights)
            db = np.zeros_like(model.bias)
            demb = [np.zeros_like(e) for e in model.embeddings]
            total = 0.0
            for values, label in batch:
                loss, gW, gb, gemb = model.loss_and_grads(values, label)
                total += loss
                dW += gW
                db += gb
                for i, v, g in gemb:
                    demb[i][v] += g
            if not np.isfinite(total):
                raise FloatingPointError("training diverged: non-finite loss")
            scale = cfg.learning_rate / len(batch)
            model.weights -= scale * dW
            model.bias -= scale * db
            for i in range(model.num_features):
                model.embeddings[i] -= scale * demb[i]
    return model


def train_window_predictor(sessions: Dataset, window: int, cfg: TrainConfig) -> SoftmaxClassifier:
    """Next-key predictor trained on sliding windows of the normal sessions.

    Input features are the window-1 preceding keys; the class label is the
    next key, so num_classes equals the key vocabulary size.
    """
    from .pipeline import windows_as_instances

    if sessions.kind != "log_sessions":
        raise ValueError("train_window_predictor expects a log_sessions dataset")
    normal = [inst for inst in sessions.instances if inst.session_label == 0]
    if not normal:
        raise ValueError("no normal sessions to train on")
    vocab = sessions.num_classes
    instances = []
    for sess in normal:
        instances.extend(windows_as_instances(sess, window, vocab))
    window_data = Dataset(instances=instances, num_classes=vocab, kind="classification")
    return train_softmax(window_data, cfg)


def gradient_check(model: SoftmaxClassifier, values, label: int, step: float = 1e-5) -> float:
    """Max relative error of analytic gradients vs central finite differences."""

    def loss_at() -> float:
        return model.loss_and_grads(values, label)[0]

    _, dW, db, demb = model.loss_and_grads(values, label)
    demb_dense = [np.zeros_like(e) for e in model.embeddings]
    for i, v, g in demb:
        demb_dense[i][v] += g

    params = [(model.weights, dW), (model.bias, db)] + list(zip(model.embeddings, demb_dense))
    max_err = 0.0
    for array, grad in params:
        flat = array.ravel()
        gflat = grad.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            hi = loss_at()
            flat[idx] = orig - step
            lo = loss_at()
            flat[idx] = orig
            numeric = (hi - lo) / (2 * step)
            denom = max(abs(numeric), abs(gflat[idx]), 1e-8)
            max_err = max(max_err, abs(numeric - gflat[idx]) / denom)
    return max_err


def synth_classification(
    seed: int,
    num_features: int,
    num_candidates: int,
    num_classes: int = 2,
    count: int = 200,
    label_noise: float = 0.05,
) -> Dataset:
    """Synthetic classification instances labeled by a hidden linear rule.

    Every feature has `num_candidates` admissible values (so num_candidates-1
    alternatives). Labels are the argmax of per-(feature, value) class scores,
    flipped uniformly at `label_noise` rate. Deterministic by seed.
    """
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(num_classes, num_features, num_candidates))
    instances = []
    for idx in range(count):
        values = tuple(int(v) for v in rng.integers(0, num_candidates, size=num_features))
        logits = scores[:, np.arange(num_features), list(values)].sum(axis=1)
        label = int(np.argmax(logits))
        if label_noise > 0 and rng.random() < label_noise:
            label = int((label + 1 + rng.integers(0, num_classes - 1)) % num_classes)
        instances.append(
            CategoricalInstance(
                id=f"synth-{seed}-{idx}",
                true_label=label,
                values=values,
                candidates=tuple(tuple(range(num_candidates)) for _ in range(num_features)),
            )
        )
    return Dataset(instances=instances, num_classes=num_classes, kind="classification")


def hidden_rule_labels(seed: int, num_features: int, num_candidates: int,
                       num_classes: int, values) -> int:
    """Recompute the hidden linear rule of synth_classification for one record."""
    rng = np.random.default_rng(seed)
    scores = rng.normal(size=(num_classes, num_features, num_candidates))
    logits = scores[:, np.arange(num_features), list(values)].sum(axis=1)
    return int(np.argmax(logits))


def normal_chain(seed: int, vocab: int) -> np.ndarray:
    """Ground-truth first-order Markov chain used for normal sessions.

    Each key transitions to a 5-key support: one dominant successor at 0.7
    and four others at 0.075 each. Keys outside the support have probability
    exactly zero, which makes anomalous transitions verifiable.
    """
    rng = np.random.default_rng(seed)
    chain = np.zeros((vocab, vocab))
    for k in range(vocab):
        support = rng.choice(vocab, size=min(5, vocab), replace=False)
        chain[k, support[0]] = 0.7
        chain[k, support[1:]] = 0.3 / (len(support) - 1)
    return chain


def synth_log_sessions(
    seed: int,
    vocab: int = 20,
    count: int = 100,
    abnormal_fraction: float = 0.3,
    min_len: int = 50,
    max_len: int = 200,
    chain_seed: int | None = None,
) -> Dataset:
    """Synthetic log sessions from a ground-truth Markov chain over keys.

    Normal sessions follow the chain exactly. Abnormal sessions contain one
    contiguous segment whose every transition leaves the normal chain's
    support (probability 0 under the chain), drawn from a disjoint anomalous
    process. `chain_seed` (default: seed) pins the chain independently of the
    sampling seed, so held-out sets can share the generating process.
    """
    if not 0.0 <= abnormal_fraction <= 1.0:
        raise ValueError("abnormal_fraction must be in [0, 1]")
    rng = np.random.default_rng(seed)
    chain = normal_chain(seed if chain_seed is None else chain_seed, vocab)
    num_abnormal = round(count * abnormal_fraction)
    if num_abnormal > 0 and vocab <= 5:
        raise ValueError(
            "abnormal sessions need vocab > 5: the normal chain supports 5 "
            "keys per row, leaving no zero-probability keys to draw from"
        )
    instances = []
    for idx in range(count):
        length = int(rng.integers(min_len, max_len + 1))
        keys = [int(rng.integers(0, vocab))]
        while len(keys) < length:
            keys.append(int(rng.choice(vocab, p=chain[keys[-1]])))
        label = 1 if idx < num_abnormal else 0
        if label == 1:
            seg_len = int(rng.integers(10, 21))
            start = int(rng.integers(1, length - seg_len))
            for pos in range(start, start + seg_len):
                off_support = np.flatnonzero(chain[keys[pos - 1]] == 0.0)
                keys[pos] = int(rng.choice(off_support))
        instances.append(
            CategoricalInstance(
                id=f"sess-{seed}-{idx}",
                true_label=label,
                values=tuple(keys),
                candidates=tuple(tuple(range(vocab)) for _ in range(length)),
                session_id=f"sess-{seed}-{idx}",
                session_label=label,
            )
        )
    return Dataset(instances=instances, num_classes=vocab, kind="log_sessions")


def save_model(model: SoftmaxClassifier, path: str) -> None:
    """Single-file format with a version tag; save followed by load is identity."""
    arrays = {
        "format_version": np.array([MODEL_FORMAT_VERSION]),
        "weights": model.weights,
        "bias": model.bias,
        "num_features": np.array([model.num_features]),
    }
    for i, emb in enumerate(model.embeddings):
        arrays[f"emb_{i}"] = emb
    np.savez_compressed(path, **arrays)


def load_model(path: str) -> SoftmaxClassifier:
    with np.load(path) as data:
        version = int(data["format_version"][0])
        if version != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        n = int(data["num_features"][0])
        embeddings = [data[f"emb_{i}"] for i in range(n)]
        return SoftmaxClassifier(embeddings, data["weights"], data["bias"])
