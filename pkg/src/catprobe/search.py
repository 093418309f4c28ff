"""Margin objective and the perturbation-search algorithms.

Three query-based algorithms look for a within-budget set of feature edits
driving the margin (max wrong-class probability minus true-class
probability) to the success threshold:

  greedy   -- forward stepwise greedy: each iteration scores every remaining
              feature against every subset of the already-selected features
              with every alternative value.
  stochastic -- the greedy schedule restricted to r uniformly sampled
              remaining features per iteration.
  bandit   -- each feature is an arm; after one single-edit probe per
              alternative, arms are pulled by an upper-confidence-bound rule.

A brute-force enumerator provides the exact optimum on small instances.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .instances import CategoricalInstance, PerturbationSet
from .oracle import Oracle, OracleError, QueryStats

__all__ = [
    "ALGORITHMS",
    "SearchConfig",
    "SearchOutcome",
    "margin",
    "margin_topk",
    "run_search",
    "fsgs",
    "sgs",
    "ucbs",
    "brute_force",
]

ALGORITHMS = ("fsgs", "sgs", "ucbs", "brute")

BRUTE_FORCE_GUARD = 10**6


def margin(probs: np.ndarray, true_label: int) -> float:
    """Max wrong-class probability minus true-class probability.

    In [-1, 1]; non-negative exactly when the prediction is wrong or tied.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.shape[0] < 2:
        raise ValueError("margin needs at least two classes")
    if not 0 <= true_label < probs.shape[0]:
        raise ValueError(f"true_label {true_label} out of range")
    wrong = np.delete(probs, true_label)
    return float(wrong.max() - probs[true_label])


def margin_topk(probs: np.ndarray, true_label: int, k_rank: int) -> float:
    """k_rank-th largest wrong-class probability minus true-class probability.

    Non-negative exactly when at least k_rank wrong classes outrank the true
    one, i.e. the true label falls outside the top-k_rank predictions. At
    k_rank=1 this is exactly margin().
    """
    probs = np.asarray(probs, dtype=float)
    if not 1 <= k_rank < probs.shape[0]:
        raise ValueError(f"k_rank must be in [1, {probs.shape[0] - 1}], got {k_rank}")
    if not 0 <= true_label < probs.shape[0]:
        raise ValueError(f"true_label {true_label} out of range")
    wrong = np.delete(probs, true_label)
    kth = np.sort(wrong)[-k_rank]
    return float(kth - probs[true_label])


@dataclass
class SearchConfig:
    algorithm: str = "fsgs"
    budget: int = 5
    time_limit: float = 60.0
    sgs_r: int = 5
    ucb_alpha: float = 2.0
    seed: int = 0
    success_threshold: float = 0.0
    cache: bool = True
    topk: int = 1
    # Average bandit rewards over rounds elapsed (as published) or over the
    # arm's own pull count; the former is the default behavior.
    ucb_mean_by_pulls: bool = False
    invert_objective: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.sgs_r < 1:
            raise ValueError("sgs_r must be >= 1")
        if self.ucb_alpha <= 0:
            raise ValueError("ucb_alpha must be > 0")
        if self.time_limit <= 0:
            raise ValueError("time_limit must be > 0")
        if self.topk < 1:
            raise ValueError("topk must be >= 1")


@dataclass
class SearchOutcome:
    success: bool
    perturbation: PerturbationSet
    margin: float
    margin_trace: list[float]
    stats: QueryStats
    wall_time: float
    terminated_by: str  # success | budget | timeout | exhausted
    queries_per_iteration: list[int] = field(default_factory=list)


class _Timeout(Exception):
    pass


class _Searcher:
    """Shared query bookkeeping: best-so-far tracking and the time limit."""

    def __init__(self, instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig):
        self.instance = instance
        self.oracle = oracle
        self.cfg = cfg
        self.sign = -1.0 if cfg.invert_objective else 1.0
        self.best_obj = -math.inf
        self.best_pert = PerturbationSet()
        self.start = time.perf_counter()
        oracle.cache_enabled = cfg.cache
        oracle.reset_stats()

    def objective(self, probs: np.ndarray) -> float:
        m = margin_topk(probs, self.instance.true_label, self.cfg.topk)
        return self.sign * m

    def query(self, pert: PerturbationSet) -> float:
        if time.perf_counter() - self.start > self.cfg.time_limit:
            raise _Timeout
        probs = self.oracle.query(self.instance, pert)
        obj = self.objective(probs)
        if obj > self.best_obj:
            self.best_obj = obj
            self.best_pert = pert
        return obj

    @property
    def succeeded(self) -> bool:
        return self.best_obj >= self.cfg.success_threshold

    def outcome(self, terminated_by: str, per_iteration: list[int]) -> SearchOutcome:
        if self.best_obj == -math.inf:
            # No candidate query was possible; fall back to the clean margin.
            self.query(PerturbationSet())
        if self.succeeded:
            terminated_by = "success"
        return SearchOutcome(
            success=self.succeeded,
            perturbation=self.best_pert,
            margin=self.sign * self.best_obj,
            margin_trace=[],
            stats=self.oracle.stats,
            wall_time=time.perf_counter() - self.start,
            terminated_by=terminated_by,
            queries_per_iteration=per_iteration,
        )


def _greedy(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig,
            sample_r: int | None) -> SearchOutcome:
    """Forward stepwise greedy; with sample_r set, the stochastic variant."""
    s = _Searcher(instance, oracle, cfg)
    rng = np.random.default_rng(cfg.seed)
    selected: list[tuple[int, int]] = []  # (feature, stored value), selection order
    trace: list[float] = []
    per_iteration: list[int] = []
    terminated_by = "budget"
    try:
        for t in range(cfg.budget):
            remaining = [
                i for i in range(instance.num_features)
                if i not in {f for f, _ in selected} and instance.alternatives(i)
            ]
            if not remaining:
                terminated_by = "exhausted"
                break
            if sample_r is not None and sample_r < len(remaining):
                picked = rng.choice(len(remaining), size=sample_r, replace=False)
                remaining = sorted(remaining[j] for j in picked)
            queries_before = oracle.stats.queries_issued + oracle.stats.cache_hits
            # Inner level: per candidate feature, the best (subset of selected,
            # replacement value) pair; subset members keep their stored values.
            subsets = [
                [selected[j] for j in range(len(selected)) if mask >> j & 1]
                for mask in range(1 << len(selected))
            ]
            best_feature: tuple[int, int] | None = None
            best_feature_obj = -math.inf
            for i in remaining:
                for subset in subsets:
                    for v in instance.alternatives(i):
                        obj = s.query(PerturbationSet(frozenset(subset + [(i, v)])))
                        if obj > best_feature_obj:
                            best_feature_obj = obj
                            best_feature = (i, v)
            per_iteration.append(
                oracle.stats.queries_issued + oracle.stats.cache_hits - queries_before
            )
            # Outer level: the feature with the best inner result joins the set.
            selected.append(best_feature)
            trace.append(s.sign * s.best_obj)
            if s.succeeded:
                break
    except _Timeout:
        terminated_by = "timeout"
    except OracleError:
        terminated_by = "timeout"
    outcome = s.outcome(terminated_by, per_iteration)
    outcome.margin_trace = trace
    return outcome


def fsgs(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig) -> SearchOutcome:
    """Full greedy search over all remaining features each iteration."""
    return _greedy(instance, oracle, cfg, sample_r=None)


def sgs(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig) -> SearchOutcome:
    """Greedy search restricted to sgs_r sampled remaining features per iteration."""
    return _greedy(instance, oracle, cfg, sample_r=cfg.sgs_r)


def ucbs(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig) -> SearchOutcome:
    """Bandit search: one probe per single-edit arm, then UCB-driven pulls."""
    s = _Searcher(instance, oracle, cfg)
    arms = [i for i in range(instance.num_features) if instance.alternatives(i)]
    trace: list[float] = []
    per_iteration: list[int] = []
    terminated_by = "budget"
    best_value: dict[int, int] = {}
    cum_reward: dict[int, float] = {}
    pulls: dict[int, int] = {}
    try:
        # Initialization: modify each feature once per alternative value; keep
        # the best single edit per feature and its wrong-class probability as
        # the arm's first reward. A success here returns immediately.
        init_before = 0
        for i in arms:
            best_obj = -math.inf
            for v in instance.alternatives(i):
                probs = oracle.query(instance, PerturbationSet.of((i, v)))
                obj = s.objective(probs)
                if obj > s.best_obj:
                    s.best_obj = obj
                    s.best_pert = PerturbationSet.of((i, v))
                if obj > best_obj:
                    best_obj = obj
                    best_value[i] = v
                    cum_reward[i] = _reward(probs, instance.true_label, cfg)
                pulls[i] = 1
                if time.perf_counter() - s.start > cfg.time_limit:
                    raise _Timeout
                if s.succeeded:
                    trace.append(s.sign * s.best_obj)
                    per_iteration.append(oracle.stats.queries_issued + oracle.stats.cache_hits)
                    return _finish(s, "success", trace, per_iteration)
        per_iteration.append(oracle.stats.queries_issued + oracle.stats.cache_hits - init_before)
        trace.append(s.sign * s.best_obj)

        selected: list[tuple[int, int]] = []
        rounds = 1  # the initialization counts as the first round
        while len(selected) < cfg.budget:
            available = [i for i in arms if i not in {f for f, _ in selected}]
            if not available:
                terminated_by = "exhausted"
                break
            chosen = None
            chosen_b = -math.inf
            for i in available:
                denom = pulls[i] if cfg.ucb_mean_by_pulls else rounds
                mean = cum_reward[i] / denom
                bonus = math.sqrt(cfg.ucb_alpha * math.log(rounds) / (2 * pulls[i]))
                b = mean + bonus
                if b > chosen_b:
                    chosen_b = b
                    chosen = i
            selected.append((chosen, best_value[chosen]))
            probs = oracle.query(instance, PerturbationSet(frozenset(selected)))
            obj = s.objective(probs)
            if obj > s.best_obj:
                s.best_obj = obj
                s.best_pert = PerturbationSet(frozenset(selected))
            cum_reward[chosen] += _reward(probs, instance.true_label, cfg)
            pulls[chosen] += 1
            rounds += 1
            per_iteration.append(1)
            trace.append(s.sign * s.best_obj)
            if time.perf_counter() - s.start > cfg.time_limit:
                raise _Timeout
            if s.succeeded:
                break
    except _Timeout:
        terminated_by = "timeout"
    except OracleError:
        terminated_by = "timeout"
    return _finish(s, terminated_by, trace, per_iteration)


def _reward(probs: np.ndarray, true_label: int, cfg: SearchConfig) -> float:
    """Bandit reward in [0, 1] for one query.

    Standard objective: the largest (topk-th largest) wrong-class
    probability. Inverted objective: the true-class probability.
    """
    if cfg.invert_objective:
        return float(probs[true_label])
    wrong = np.delete(np.asarray(probs, dtype=float), true_label)
    return float(np.sort(wrong)[-cfg.topk])


def _finish(s: _Searcher, terminated_by: str, trace, per_iteration) -> SearchOutcome:
    outcome = s.outcome(terminated_by, per_iteration)
    outcome.margin_trace = trace
    return outcome


def brute_force(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig) -> SearchOutcome:
    """Exhaustive enumeration of all perturbation sets within the budget.

    Guarded against search-space blowup; ties broken toward smaller edit
    sets, then lexicographically smallest edits (enumeration order plus
    strict improvement gives both).
    """
    n = instance.num_features
    max_alt = max((len(instance.alternatives(i)) for i in range(n)), default=0)
    space = sum(math.comb(n, k) * max_alt**k for k in range(min(cfg.budget, n) + 1))
    if space > BRUTE_FORCE_GUARD:
        raise ValueError(f"brute-force space {space} exceeds guard {BRUTE_FORCE_GUARD}")

    s = _Searcher(instance, oracle, cfg)
    terminated_by = "exhausted"
    try:
        s.query(PerturbationSet())
        editable = [i for i in range(n) if instance.alternatives(i)]
        for k in range(1, min(cfg.budget, len(editable)) + 1):
            for feats in itertools.combinations(editable, k):
                for values in itertools.product(*(instance.alternatives(i) for i in feats)):
                    s.query(PerturbationSet(frozenset(zip(feats, values))))
    except _Timeout:
        terminated_by = "timeout"
    outcome = s.outcome(terminated_by, [])
    outcome.margin_trace = [outcome.margin]
    return outcome


_DISPATCH = {"fsgs": fsgs, "sgs": sgs, "ucbs": ucbs, "brute": brute_force}


def run_search(instance: CategoricalInstance, oracle: Oracle, cfg: SearchConfig) -> SearchOutcome:
    return _DISPATCH[cfg.algorithm](instance, oracle, cfg)
