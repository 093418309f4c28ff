"""Categorical instances, perturbation sets, and dataset ingestion.

All feature values are anonymized integer indexes. An instance carries, per
feature, the list of admissible replacement indexes (always including the
current value). A perturbation is a set of (feature, replacement) edits with
at most one edit per feature.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

__all__ = [
    "CategoricalInstance",
    "PerturbationSet",
    "Dataset",
    "DatasetError",
    "load_dataset",
    "write_dataset",
    "apply_perturbation",
    "diff",
]


class DatasetError(ValueError):
    """Malformed dataset file or record."""


@dataclass(frozen=True)
class CategoricalInstance:
    """An n-feature record of integer value indexes plus candidate tables."""

    id: str
    true_label: int
    values: tuple[int, ...]
    candidates: tuple[tuple[int, ...], ...]
    session_id: str | None = None
    session_label: int | None = None

    def __post_init__(self):
        if len(self.values) < 1:
            raise ValueError(f"instance {self.id!r}: needs at least one feature")
        if len(self.values) != len(self.candidates):
            raise ValueError(
                f"instance {self.id!r}: {len(self.values)} values vs "
                f"{len(self.candidates)} candidate lists"
            )
        if self.true_label < 0:
            raise ValueError(f"instance {self.id!r}: negative label")
        for i, (v, cand) in enumerate(zip(self.values, self.candidates)):
            if v < 0 or any(c < 0 for c in cand):
                raise ValueError(f"instance {self.id!r}: negative index at feature {i}")
            if len(set(cand)) != len(cand):
                raise ValueError(f"instance {self.id!r}: duplicate candidates at feature {i}")
            if v not in cand:
                raise ValueError(
                    f"instance {self.id!r}: value {v} not in candidates at feature {i}"
                )

    @property
    def num_features(self) -> int:
        return len(self.values)

    def alternatives(self, i: int) -> tuple[int, ...]:
        """Admissible replacement values for feature i, current value excluded."""
        cur = self.values[i]
        return tuple(c for c in self.candidates[i] if c != cur)


@dataclass(frozen=True)
class PerturbationSet:
    """Edits as (feature index, replacement index) pairs, one edit per feature."""

    edits: frozenset[tuple[int, int]] = frozenset()

    @classmethod
    def of(cls, *edits: tuple[int, int]) -> "PerturbationSet":
        return cls(frozenset(edits))

    def __post_init__(self):
        feats = [i for i, _ in self.edits]
        if len(set(feats)) != len(feats):
            raise ValueError("multiple edits on one feature")

    def __len__(self) -> int:
        return len(self.edits)

    def sorted_edits(self) -> list[tuple[int, int]]:
        return sorted(self.edits)

    def validate_for(self, instance: CategoricalInstance) -> None:
        for i, v in self.edits:
            if not 0 <= i < instance.num_features:
                raise ValueError(f"edit on out-of-range feature {i}")
            if v == instance.values[i]:
                raise ValueError(f"edit on feature {i} does not change the value")
            if v not in instance.candidates[i]:
                raise ValueError(f"value {v} not admissible for feature {i}")


EMPTY_PERTURBATION = PerturbationSet()


def apply_perturbation(instance: CategoricalInstance, p: PerturbationSet) -> CategoricalInstance:
    """Return a copy of `instance` with each edit applied; the original is unchanged."""
    p.validate_for(instance)
    values = list(instance.values)
    for i, v in p.edits:
        values[i] = v
    return CategoricalInstance(
        id=instance.id,
        true_label=instance.true_label,
        values=tuple(values),
        candidates=instance.candidates,
        session_id=instance.session_id,
        session_label=instance.session_label,
    )


def diff(original: CategoricalInstance, perturbed: CategoricalInstance) -> PerturbationSet:
    """Edits turning `original` into `perturbed`; inverse of apply_perturbation."""
    if original.num_features != perturbed.num_features:
        raise ValueError("instances have different feature counts")
    if original.candidates != perturbed.candidates:
        raise ValueError("instances have different candidate tables")
    edits = frozenset(
        (i, b) for i, (a, b) in enumerate(zip(original.values, perturbed.values)) if a != b
    )
    return PerturbationSet(edits)


@dataclass
class Dataset:
    """A list of instances plus the class count and the dataset kind."""

    instances: list[CategoricalInstance]
    num_classes: int
    kind: str = "classification"  # or "log_sessions"
    source_digest: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.instances:
            raise DatasetError("empty dataset")
        if self.kind not in ("classification", "log_sessions"):
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        for inst in self.instances:
            if inst.true_label >= self.num_classes:
                raise DatasetError(
                    f"instance {inst.id!r}: label {inst.true_label} >= K={self.num_classes}"
                )

    def __len__(self) -> int:
        return len(self.instances)


_REQUIRED_KEYS = ("id", "true_label", "values", "candidates")


def _parse_record(obj: dict, lineno: int) -> CategoricalInstance:
    for key in _REQUIRED_KEYS:
        if key not in obj:
            raise DatasetError(f"line {lineno}: missing field {key!r}")
    try:
        return CategoricalInstance(
            id=str(obj["id"]),
            true_label=int(obj["true_label"]),
            values=tuple(int(v) for v in obj["values"]),
            candidates=tuple(tuple(int(c) for c in cand) for cand in obj["candidates"]),
            session_id=obj.get("session_id"),
            session_label=obj.get("session_label"),
        )
    except (TypeError, ValueError) as exc:
        raise DatasetError(f"line {lineno}: {exc}") from exc


def load_dataset(path: str, num_classes: int | None = None, kind: str | None = None) -> Dataset:
    """Load a line-delimited JSON dataset file.

    Each line is one record with keys `id`, `true_label`, `values`,
    `candidates`; log-session records additionally carry `session_id` and
    `session_label`. When `num_classes` is not given it is inferred as
    max(label)+1 for classification datasets and as the full key vocabulary
    size (max index over values and candidates, plus 1) for session datasets.
    """
    instances = []
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: invalid JSON ({exc})") from exc
        instances.append(_parse_record(obj, lineno))
    if not instances:
        raise DatasetError(f"{path}: no records")

    if kind is None:
        kind = "log_sessions" if instances[0].session_id is not None else "classification"
    if num_classes is None:
        if kind == "log_sessions":
            num_classes = 1 + max(
                max(max(inst.values) for inst in instances),
                max(max(max(c) for c in inst.candidates) for inst in instances),
            )
        else:
            num_classes = 1 + max(inst.true_label for inst in instances)
    return Dataset(instances=instances, num_classes=num_classes, kind=kind, source_digest=digest)


def write_dataset(dataset: Dataset, path: str) -> None:
    """Write a dataset back to the line-delimited format read by load_dataset."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            obj = {
                "id": inst.id,
                "true_label": inst.true_label,
                "values": list(inst.values),
                "candidates": [list(c) for c in inst.candidates],
            }
            if inst.session_id is not None:
                obj["session_id"] = inst.session_id
                obj["session_label"] = inst.session_label
            fh.write(json.dumps(obj) + "\n")
