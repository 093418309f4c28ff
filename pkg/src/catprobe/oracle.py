"""Black-box probability-vector query layer.

An Oracle wraps any deterministic values -> probabilities backend behind a
uniform interface with query counting, optional caching, and wall-clock
accounting. Backends: an in-process model, a remote HTTP endpoint, or a
ground-truth synthetic rule used by tests.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import requests

from .instances import EMPTY_PERTURBATION, CategoricalInstance, PerturbationSet, apply_perturbation

__all__ = [
    "Oracle",
    "OracleError",
    "QueryStats",
    "RemoteBackend",
    "oracle_from_model",
    "truth_oracle",
    "NORMALIZATION_TOL",
    "REMOTE_TIMEOUT_ENV",
]

NORMALIZATION_TOL = 1e-6
REMOTE_TIMEOUT_ENV = "CATPROBE_REMOTE_TIMEOUT"
DEFAULT_REMOTE_TIMEOUT = 10.0


class OracleError(RuntimeError):
    """Backend failure: unreachable endpoint, shape mismatch, bad response."""


@dataclass
class QueryStats:
    """Counters over one search: real evaluations, cache hits, time in queries."""

    queries_issued: int = 0
    cache_hits: int = 0
    elapsed: float = 0.0

    def merge(self, other: "QueryStats") -> None:
        self.queries_issued += other.queries_issued
        self.cache_hits += other.cache_hits
        self.elapsed += other.elapsed


@dataclass
class Oracle:
    """Query handle around a deterministic values -> probability-vector backend."""

    backend: Callable[[tuple[int, ...]], np.ndarray]
    num_features: int
    num_classes: int
    cache_enabled: bool = True
    stats: QueryStats = field(default_factory=QueryStats)
    _cache: dict = field(default_factory=dict, repr=False)

    def query(
        self, instance: CategoricalInstance, p: PerturbationSet = EMPTY_PERTURBATION
    ) -> np.ndarray:
        """Class distribution of the perturbed instance.

        Counts a real evaluation on a cache miss and a cache hit otherwise.
        The returned vector is validated: length K, non-negative, sums to 1
        within NORMALIZATION_TOL.
        """
        if instance.num_features != self.num_features:
            raise OracleError(
                f"instance has {instance.num_features} features, oracle expects {self.num_features}"
            )
        values = apply_perturbation(instance, p).values if p.edits else instance.values
        if self.cache_enabled and values in self._cache:
            self.stats.cache_hits += 1
            return self._cache[values]
        start = time.perf_counter()
        probs = np.asarray(self.backend(values), dtype=float)
        self.stats.elapsed += time.perf_counter() - start
        self.stats.queries_issued += 1
        self._validate(probs)
        if self.cache_enabled:
            self._cache[values] = probs
        return probs

    def _validate(self, probs: np.ndarray) -> None:
        if probs.shape != (self.num_classes,):
            raise OracleError(f"backend returned shape {probs.shape}, expected ({self.num_classes},)")
        if np.any(probs < 0) or not np.isfinite(probs).all():
            raise OracleError("backend returned negative or non-finite probabilities")
        if abs(float(probs.sum()) - 1.0) > NORMALIZATION_TOL:
            raise OracleError(f"backend probabilities sum to {probs.sum():.8f}, not 1")

    def reset_stats(self) -> QueryStats:
        """Zero the counters and return the pre-reset snapshot."""
        snapshot = QueryStats(self.stats.queries_issued, self.stats.cache_hits, self.stats.elapsed)
        self.stats = QueryStats()
        return snapshot

    def clone(self) -> "Oracle":
        """Fresh handle on the same backend with empty stats and cache."""
        return Oracle(
            backend=self.backend,
            num_features=self.num_features,
            num_classes=self.num_classes,
            cache_enabled=self.cache_enabled,
        )


class RemoteBackend:
    """HTTP backend speaking the /v1/query wire protocol."""

    def __init__(self, base_url: str, timeout: float | None = None):
        self.base_url = base_url.rstrip("/")
        if timeout is None:
            timeout = float(os.environ.get(REMOTE_TIMEOUT_ENV, DEFAULT_REMOTE_TIMEOUT))
        self.timeout = timeout
        self.session = requests.Session()

    def info(self) -> dict:
        try:
            resp = self.session.get(f"{self.base_url}/v1/info", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except requests.RequestException as exc:
            raise OracleError(f"remote oracle /v1/info failed: {exc}") from exc

    def __call__(self, values: tuple[int, ...]) -> np.ndarray:
        try:
            resp = self.session.post(
                f"{self.base_url}/v1/query",
                json={"values": list(values)},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return np.asarray(resp.json()["probs"], dtype=float)
        except requests.RequestException as exc:
            raise OracleError(f"remote oracle query failed: {exc}") from exc

    def query_batch(self, values_batch: list[list[int]]) -> list[list[float]]:
        try:
            resp = self.session.post(
                f"{self.base_url}/v1/query_batch",
                json={"values_batch": values_batch},
                timeout=self.timeout,
            )
            resp.raise_for_status()
            return resp.json()["probs_batch"]
        except requests.RequestException as exc:
            raise OracleError(f"remote oracle batch query failed: {exc}") from exc


def remote_oracle(url: str, cache: bool = True, timeout: float | None = None) -> Oracle:
    """Oracle over a remote /v1/query endpoint; shape comes from /v1/info."""
    backend = RemoteBackend(url, timeout=timeout)
    info = backend.info()
    return Oracle(
        backend=backend,
        num_features=int(info["num_features"]),
        num_classes=int(info["num_classes"]),
        cache_enabled=cache,
    )


def oracle_from_model(model, cache: bool = True) -> Oracle:
    """Oracle over an in-process model exposing predict_proba(values)."""
    return Oracle(
        backend=lambda values: model.predict_proba(values),
        num_features=model.num_features,
        num_classes=model.num_classes,
        cache_enabled=cache,
    )


def truth_oracle(rule: str, num_features: int, num_classes: int = 2, cache: bool = True) -> Oracle:
    """Ground-truth synthetic oracle for tests and demos.

    Rules:
      parity    -- one-hot on sum(values) mod K.
      linear:<seed> -- softmax over per-(feature, value) class scores drawn
                       from a seeded RNG; smooth margins, fully known.
    """
    if rule == "parity":

        def backend(values: tuple[int, ...]) -> np.ndarray:
            probs = np.zeros(num_classes)
            probs[sum(values) % num_classes] = 1.0
            return probs

    elif rule.startswith("linear"):
        _, _, seed_str = rule.partition(":")
        seed = int(seed_str) if seed_str else 0
        rng = np.random.default_rng(seed)
        # Scores indexed [class, feature, value]; value range kept generous.
        scores = rng.normal(scale=1.5, size=(num_classes, num_features, 64))

        def backend(values: tuple[int, ...]) -> np.ndarray:
            logits = scores[:, np.arange(num_features), list(values)].sum(axis=1)
            z = np.exp(logits - logits.max())
            return z / z.sum()

    else:
        raise ValueError(f"unknown truth rule {rule!r}")
    return Oracle(
        backend=backend, num_features=num_features, num_classes=num_classes, cache_enabled=cache
    )
