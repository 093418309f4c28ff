"""A self-contained softmax classifier over one-hot categorical features.

Model files are JSON: a per-feature score table ``tables[i][v]`` holding a
length-K class-score vector for value index ``v`` of feature ``i``, plus a
bias vector. Prediction is softmax over the summed scores, so identical
inputs always yield identical, normalized probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


@dataclass
class ServedModel:
    tables: list[np.ndarray]  # per feature: (num_values, num_classes)
    bias: np.ndarray  # (num_classes,)

    @property
    def num_features(self) -> int:
        return len(self.tables)

    @property
    def num_classes(self) -> int:
        return int(self.bias.shape[0])

    def value_counts(self) -> list[int]:
        return [int(t.shape[0]) for t in self.tables]

    def scores(self, values) -> np.ndarray:
        if len(values) != self.num_features:
            raise ValueError(
                f"expected {self.num_features} values, got {len(values)}"
            )
        total = self.bias.copy()
        for table, v in zip(self.tables, values):
            if not 0 <= v < table.shape[0]:
                raise ValueError(f"value index {v} out of range [0, {table.shape[0]})")
            total += table[v]
        return total

    def predict_proba(self, values) -> np.ndarray:
        s = self.scores(values)
        s -= s.max()
        e = np.exp(s)
        return e / e.sum()

    def save(self, path: str) -> None:
        payload = {
            "format": "modelserver-softmax",
            "version": 1,
            "bias": self.bias.tolist(),
            "tables": [t.tolist() for t in self.tables],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh)

    @classmethod
    def load(cls, path: str) -> "ServedModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != "modelserver-softmax":
            raise ValueError(f"{path}: not a modelserver-softmax file")
        if payload.get("version") != 1:
            raise ValueError(f"{path}: unsupported version {payload.get('version')}")
        return cls(
            tables=[np.asarray(t, dtype=float) for t in payload["tables"]],
            bias=np.asarray(payload["bias"], dtype=float),
        )


def load_jsonl_records(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def train_model(
    records: list[dict],
    num_classes: int | None = None,
    epochs: int = 80,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> ServedModel:
    """Full-batch gradient descent on cross-entropy over one-hot features.

    Each record needs ``values`` (integer indexes), ``candidates`` (per-feature
    value lists, sizing the tables), and ``label``.
    """
    if not records:
        raise ValueError("no training records")
    n = len(records[0]["values"])
    sizes = [max(max(c) for r in records for c in [r["candidates"][i]]) + 1
             for i in range(n)]
    labels = np.array([r.get("label", r.get("true_label")) for r in records], dtype=int)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    rng = np.random.default_rng(seed)
    tables = [rng.uniform(-0.01, 0.01, (size, num_classes)) for size in sizes]
    bias = np.zeros(num_classes)
    X = np.array([r["values"] for r in records], dtype=int)
    count = len(records)

    for _ in range(epochs):
        scores = bias + sum(tables[i][X[:, i]] for i in range(n))
        scores -= scores.max(axis=1, keepdims=True)
        probs = np.exp(scores)
        probs /= probs.sum(axis=1, keepdims=True)
        grad = probs
        grad[np.arange(count), labels] -= 1.0
        grad /= count
        bias -= learning_rate * grad.sum(axis=0)
        for i in range(n):
            np.subtract.at(tables[i], X[:, i], learning_rate * grad)
    return ServedModel(tables=tables, bias=bias)
