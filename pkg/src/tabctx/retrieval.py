"""Context-row retrieval over a mixed-type training pool.

Per-feature distances: categorical features use an inequality indicator
(the missing token is an ordinary category); numerical features take the
absolute difference of normalized values and are then min-max rescaled per
query across the eligible pool, so the nearest row sits at 0 and the
farthest at 1. A missing numerical value on either side yields distance
1 (degenerate all-missing columns normalize to a constant instead, so
they contribute 0). Feature distances aggregate into a row distance via
``sqrt(sum(d_i^2 * w_i))``.

Dual-importance selection: the ceil(quota/2) nearest rows under the
Pearson-weighted ranking, plus the floor(quota/2) nearest under the
tree-score ranking minus duplicates, topped up from a merged ranking
(per-row minimum of the two distances) until the quota or the eligible
pool is exhausted. All orderings break ties by (distance, row index).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dataset as ds
from . import normalize as nz
from .importance import IMPORTANCE_MODES, FeatureWeights, pearson_importance, pps_importance
from .util import rng_for

TAG_PEARSON = "pearson-half"
TAG_PPS = "pps-half"
TAG_MERGED = "merged"

TIE_BREAKS = ("distance_then_index",)


@dataclass(frozen=True)
class RetrievalConfig:
    quota: int = 128
    importance_mode: str = "dual"
    numeric_norm: str = nz.MODE_QUANTILE
    per_feature_norm: dict = field(default_factory=dict)
    distance_minmax_rescale: bool = True
    match_constraints: tuple[str, ...] = ()
    tie_break: str = "distance_then_index"
    pps_folds: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.quota < 1:
            raise ValueError("quota must be at least 1")
        if self.importance_mode not in IMPORTANCE_MODES:
            raise ValueError(f"unknown importance mode {self.importance_mode!r}")
        if self.numeric_norm not in nz.MODES:
            raise ValueError(f"unknown normalization mode {self.numeric_norm!r}")
        for mode in self.per_feature_norm.values():
            if mode not in nz.MODES:
                raise ValueError(f"unknown normalization mode {mode!r}")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie-break rule {self.tie_break!r}")
        object.__setattr__(self, "match_constraints", tuple(self.match_constraints))


@dataclass(frozen=True)
class RetrievedContext:
    indices: np.ndarray
    distances: np.ndarray
    provenance: tuple[str, ...]

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        dist = np.asarray(self.distances, dtype=np.float64)
        if len(idx) != len(set(idx.tolist())):
            raise ValueError("duplicate rows in retrieved context")
        if len(dist) and (not np.all(np.isfinite(dist)) or dist.min() < 0):
            raise ValueError("context distances must be finite and nonnegative")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "distances", dist)

    def __len__(self):
        return len(self.indices)


class ContextPool:
    """Immutable retrieval index over the training rows of a dataset."""

    def __init__(self, dataset: ds.Dataset, rows: np.ndarray, cfg: RetrievalConfig,
                 stats: dict[str, nz.ColumnStats],
                 pearson_weights: dict[str, float] | None,
                 pps_weights: dict[str, float] | None):
        self.dataset = dataset
        self.rows = np.sort(np.asarray(rows, dtype=np.int64))
        self.cfg = cfg
        self.stats = stats
        self.pearson_weights = pearson_weights
        self.pps_weights = pps_weights
        self.features = [c.name for c in dataset.feature_columns]
        self.feature_kinds = {c.name: c.kind for c in dataset.feature_columns}
        self._norm_cols = {}
        for name in dataset.numerical_features:
            self._norm_cols[name] = nz.apply_array(stats[name], dataset.column(name)[self.rows])
        self._cat_cols = {name: dataset.column(name)[self.rows] for name in dataset.categorical_features}

    @property
    def size(self) -> int:
        return len(self.rows)

    def normalized(self, feature: str) -> np.ndarray:
        return self._norm_cols[feature]

    def categories(self, feature: str) -> np.ndarray:
        return self._cat_cols[feature]

    def weight_vectors(self) -> tuple[np.ndarray, np.ndarray | None]:
        mode = self.cfg.importance_mode
        if mode == "uniform":
            return np.ones(len(self.features)), None
        if mode == "pearson_only":
            return np.asarray([self.pearson_weights[f] for f in self.features]), None
        if mode == "pps_only":
            return np.asarray([self.pps_weights[f] for f in self.features]), None
        return (np.asarray([self.pearson_weights[f] for f in self.features]),
                np.asarray([self.pps_weights[f] for f in self.features]))

    def feature_weights(self) -> FeatureWeights:
        if self.pearson_weights is None or self.pps_weights is None:
            raise ValueError("pool was built without both importance measures")
        return FeatureWeights(pearson=self.pearson_weights, pps=self.pps_weights)

    def train_label_mean(self) -> float:
        return float(np.mean(np.asarray(self.dataset.labels()[self.rows], dtype=np.float64)))


def build_pool(dataset: ds.Dataset, train_rows, cfg: RetrievalConfig,
               weights: FeatureWeights | None = None) -> ContextPool:
    """Fit normalization stats and importance weights on the training rows.
    Only the measures the config's mode consumes are computed; pass
    ``weights`` to reuse precomputed scores."""
    rows = np.sort(np.asarray(train_rows, dtype=np.int64))
    if len(rows) == 0:
        raise ValueError("context pool must be non-empty")
    stats = nz.fit_stats(dataset, rows, mode=cfg.numeric_norm, overrides=cfg.per_feature_norm)
    pearson = pps = None
    if weights is not None:
        pearson, pps = dict(weights.pearson), dict(weights.pps)
    else:
        mode = cfg.importance_mode
        if mode in ("dual", "pearson_only"):
            pearson = pearson_importance(dataset, rows)
        if mode in ("dual", "pps_only"):
            pps = pps_importance(dataset, rows, cv_folds=cfg.pps_folds, seed=cfg.seed)
    return ContextPool(dataset, rows, cfg, stats, pearson, pps)


def feature_distance(pool: ContextPool, query: dict, feature: str,
                     eligible: np.ndarray | None = None, rescale: bool | None = None) -> np.ndarray:
    """Distance vector from the query to every (eligible) pool row for one feature."""
    if feature not in pool.feature_kinds:
        raise KeyError(f"unknown feature {feature!r}")
    if eligible is None:
        eligible = np.arange(pool.size)
    if rescale is None:
        rescale = pool.cfg.distance_minmax_rescale

    if pool.feature_kinds[feature] == ds.KIND_CATEGORICAL:
        qv = str(query.get(feature, ds.MISSING_TOKEN))
        return (pool.categories(feature)[eligible] != qv).astype(np.float64)

    qraw = query.get(feature, math.nan)
    qv = nz.apply(pool.stats[feature], float(qraw) if qraw is not None else math.nan)
    col = pool.normalized(feature)[eligible]
    raw = np.abs(col - qv)
    missing = ~np.isfinite(raw)
    out = np.ones(len(eligible))
    present = ~missing
    if present.any():
        vals = raw[present]
        if not rescale:
            out[present] = vals
        else:
            lo, hi = vals.min(), vals.max()
            if hi == lo:
                out[present] = 0.0
            else:
                out[present] = (vals - lo) / (hi - lo)
    return out


def aggregate(per_feature: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Row distance: sqrt of the weighted sum of squared feature distances."""
    D = np.asarray(per_feature, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if D.ndim != 2 or D.shape[1] != len(w):
        raise ValueError(f"distance matrix has {D.shape[1] if D.ndim == 2 else '?'} columns, "
                         f"weights have {len(w)}")
    if len(w) and w.min() < 0:
        raise ValueError("weights must be nonnegative")
    return np.sqrt(np.sum(D * D * w[None, :], axis=1))


def _eligible_rows(pool: ContextPool, query: dict, constraints) -> np.ndarray:
    mask = np.ones(pool.size, dtype=bool)
    for name in constraints:
        if pool.feature_kinds.get(name) != ds.KIND_CATEGORICAL:
            raise KeyError(f"match constraint {name!r} is not a categorical feature")
        qv = str(query.get(name, ds.MISSING_TOKEN))
        mask &= pool.categories(name) == qv
    return np.flatnonzero(mask)


def _ranking(distances: np.ndarray, eligible: np.ndarray) -> np.ndarray:
    """Positions into `eligible`, sorted by (distance, global row index)."""
    return np.lexsort((eligible, distances))


def retrieve(pool: ContextPool, query: dict, cfg: RetrievalConfig | None = None) -> RetrievedContext:
    """Select up to ``cfg.quota`` supporting rows for the query row."""
    cfg = cfg or pool.cfg
    eligible = _eligible_rows(pool, query, cfg.match_constraints)
    if len(eligible) == 0:
        return RetrievedContext(np.empty(0, dtype=np.int64), np.empty(0), ())

    D = np.column_stack([
        feature_distance(pool, query, f, eligible, cfg.distance_minmax_rescale)
        for f in pool.features
    ]) if pool.features else np.zeros((len(eligible), 0))

    w_primary, w_secondary = pool.weight_vectors()
    d_primary = aggregate(D, w_primary)
    target = min(cfg.quota, len(eligible))

    if cfg.importance_mode != "dual":
        tag = {"pearson_only": TAG_PEARSON, "pps_only": TAG_PPS, "uniform": TAG_MERGED}[cfg.importance_mode]
        order = _ranking(d_primary, eligible)[:target]
        return RetrievedContext(pool.rows[eligible[order]], d_primary[order], (tag,) * target)

    d_secondary = aggregate(D, w_secondary)
    k_primary = (cfg.quota + 1) // 2
    k_secondary = cfg.quota - k_primary

    order_p = _ranking(d_primary, eligible)
    order_s = _ranking(d_secondary, eligible)

    chosen: dict[int, tuple[float, str]] = {}
    for p in order_p[:k_primary]:
        chosen[p] = (d_primary[p], TAG_PEARSON)
    for p in order_s[:k_secondary]:
        if p not in chosen:
            chosen[p] = (d_secondary[p], TAG_PPS)
    if len(chosen) < target:
        d_merged = np.minimum(d_primary, d_secondary)
        for p in _ranking(d_merged, eligible):
            if p not in chosen:
                chosen[p] = (d_merged[p], TAG_MERGED)
                if len(chosen) == target:
                    break

    picks = sorted(chosen.items(), key=lambda kv: (kv[1][0], eligible[kv[0]]))
    positions = np.asarray([p for p, _ in picks], dtype=np.int64)
    return RetrievedContext(pool.rows[eligible[positions]],
                            np.asarray([v[0] for _, v in picks]),
                            tuple(v[1] for _, v in picks))


def retrieve_random(pool: ContextPool, quota: int, seed: int) -> RetrievedContext:
    """Baseline policy: uniform sample without replacement from the pool."""
    take = min(quota, pool.size)
    picked = np.sort(rng_for(seed, "random-context").choice(pool.rows, size=take, replace=False))
    return RetrievedContext(picked, np.zeros(take), (TAG_MERGED,) * take)


def context_trace(ctx: RetrievedContext, query_index: int) -> dict:
    return {"query": int(query_index),
            "selected": ctx.indices.tolist(),
            "distances": [float(d) for d in ctx.distances],
            "provenance": list(ctx.provenance)}
