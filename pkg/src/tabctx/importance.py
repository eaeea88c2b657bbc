"""Feature relevance scoring on the training pool.

Two measures per feature:

* ``pearson_importance`` captures linear relationships as the maximum
  absolute Pearson correlation over indicator encodings (categorical
  features are one-hot encoded, classification labels use per-class
  indicators).
* ``pps_importance`` captures non-linear relationships: a depth-limited
  decision tree on the single feature is scored under k-fold cross
  validation against a naive baseline, clipped at zero.

Single-feature tree contract (the exact fitting semantics, needed for
reproducibility):

* Candidate thresholds are the quantiles of the non-missing training
  values at 2% steps (0.02 .. 0.98), deduplicated. A split sends
  ``x <= t`` left.
* Rows are ordered by stable sort on the feature value; a leaf's cost is
  ``np.sum(np.abs(y - np.median(y)))`` over that ordering (regression) or
  the count of rows not in the leaf's majority class, ties to the lowest
  class index (classification). An empty leaf costs 0.
* The fitted tree is the global minimizer of total training cost over all
  trees of the configured depth. Ties are resolved by preferring a leaf
  over an equal-cost split, then the smallest candidate threshold,
  applied recursively from the root.
* Empty leaves and rows with a missing feature value predict the fold's
  global label median (regression) or modal class (classification).
* Categorical features split one-vs-rest on a single category per level,
  chosen greedily with strict-improvement stopping; candidate categories
  are scanned in sorted token order.

Scores compare out-of-fold tree predictions with out-of-fold naive
predictions (fold-train median / most frequent class):
``max(0, 1 - MAE_tree / MAE_naive)`` for regression and
``max(0, (F1w_tree - F1w_naive) / (1 - F1w_naive))`` for classification,
with weighted F1; a perfect naive baseline scores 0.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from .util import kfold_indices, subseed

IMPORTANCE_MODES = ("dual", "pearson_only", "pps_only", "uniform")

DEFAULT_TREE_DEPTH = 4
DEFAULT_CV_FOLDS = 4
DEFAULT_QUANTILE_STEP = 0.02


@dataclass(frozen=True)
class FeatureWeights:
    pearson: dict[str, float]
    pps: dict[str, float]

    def __post_init__(self):
        if set(self.pearson) != set(self.pps):
            raise ValueError("pearson and pps maps must cover the same features")
        for m in (self.pearson, self.pps):
            for name, w in m.items():
                if not (np.isfinite(w) and 0.0 <= w <= 1.0):
                    raise ValueError(f"weight for {name!r} out of range: {w}")


# ---------------------------------------------------------------------------
# Pearson


def _max_abs_corr(F: np.ndarray, L: np.ndarray) -> float:
    n = F.shape[0]
    if n < 2:
        return 0.0
    Fc = F - F.mean(axis=0)
    Lc = L - L.mean(axis=0)
    sf = np.sqrt((Fc ** 2).sum(axis=0))
    sl = np.sqrt((Lc ** 2).sum(axis=0))
    keep_f = sf > 0
    keep_l = sl > 0
    if not keep_f.any() or not keep_l.any():
        return 0.0
    R = (Fc[:, keep_f].T @ Lc[:, keep_l]) / np.outer(sf[keep_f], sl[keep_l])
    return float(min(1.0, np.max(np.abs(R))))


def _label_matrix(d: ds.Dataset, rows: np.ndarray) -> np.ndarray:
    y = d.labels()[rows]
    if d.task == ds.TASK_REGRESSION:
        return np.asarray(y, dtype=np.float64).reshape(-1, 1)
    return np.stack([(y == c).astype(np.float64) for c in d.class_labels], axis=1)


def _category_matrix(tokens: np.ndarray) -> np.ndarray:
    cats = sorted(set(tokens.tolist()))
    return np.stack([(tokens == c).astype(np.float64) for c in cats], axis=1)


def pearson_importance(d: ds.Dataset, train_rows) -> dict[str, float]:
    """Per-feature weight in [0, 1]: max |r| over indicator encodings.
    Undefined correlations (constant columns, fewer than 2 pairs) score 0."""
    rows = np.asarray(train_rows, dtype=np.int64)
    if len(rows) == 0:
        raise ValueError("training rows must be non-empty")
    out: dict[str, float] = {}
    for col in d.feature_columns:
        vals = d.column(col.name)[rows]
        if col.kind == ds.KIND_NUMERICAL:
            keep = np.isfinite(np.asarray(vals, dtype=np.float64))
            if keep.sum() < 2:
                out[col.name] = 0.0
                continue
            F = np.asarray(vals, dtype=np.float64)[keep].reshape(-1, 1)
            L = _label_matrix(d, rows[keep])
        else:
            F = _category_matrix(vals)
            L = _label_matrix(d, rows)
        out[col.name] = _max_abs_corr(F, L)
    return out


# ---------------------------------------------------------------------------
# Single-feature trees


def quantile_candidates(values: np.ndarray, step: float = DEFAULT_QUANTILE_STEP) -> np.ndarray:
    n_steps = int(round(1.0 / step)) - 1
    qs = np.linspace(step, 1.0 - step, n_steps)
    return np.unique(np.quantile(values, qs))


def _leaf_value_reg(y: np.ndarray, fallback: float) -> float:
    return float(np.median(y)) if len(y) else fallback


def _leaf_value_cls(codes: np.ndarray, n_classes: int, fallback: int) -> int:
    if len(codes) == 0:
        return fallback
    return int(np.argmax(np.bincount(codes, minlength=n_classes)))


def _segment_costs_reg(y_sorted: np.ndarray, pos: np.ndarray) -> np.ndarray:
    b = len(pos)
    C = np.full((b, b), np.inf)
    for i in range(b - 1):
        for j in range(i + 1, b):
            seg = y_sorted[pos[i]:pos[j]]
            C[i, j] = 0.0 if len(seg) == 0 else float(np.sum(np.abs(seg - np.median(seg))))
    return C


def _segment_costs_cls(codes_sorted: np.ndarray, pos: np.ndarray, n_classes: int) -> np.ndarray:
    pref = np.zeros((n_classes, len(codes_sorted) + 1), dtype=np.int64)
    for c in range(n_classes):
        pref[c, 1:] = np.cumsum(codes_sorted == c)
    P = pref[:, pos]
    counts = P[:, None, :] - P[:, :, None]
    sizes = pos[None, :] - pos[:, None]
    C = (sizes - counts.max(axis=0)).astype(np.float64)
    C[np.tril_indices_from(C)] = np.inf
    return C


def _depth_tables(C: np.ndarray, depth: int) -> list[np.ndarray]:
    tables = [C]
    M = C
    for _ in range(depth):
        S = np.min(M[:, :, None] + M[None, :, :], axis=1)
        M = np.minimum(C, S)
        tables.append(M)
    return tables


def _extract_boundaries(C, tables, i, j, d, out):
    if d == 0 or tables[d][i, j] == C[i, j]:
        return
    target = tables[d][i, j]
    prev = tables[d - 1]
    for k in range(i + 1, j):
        if prev[i, k] + prev[k, j] == target:
            _extract_boundaries(C, tables, i, k, d - 1, out)
            out.append(k)
            _extract_boundaries(C, tables, k, j, d - 1, out)
            return
    raise AssertionError("optimal split has no witness")


@dataclass
class _NumericTree:
    thresholds: np.ndarray
    leaf_values: np.ndarray
    fallback: float

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.full(len(x), self.fallback, dtype=self.leaf_values.dtype)
        seen = np.isfinite(x)
        if seen.any():
            idx = np.searchsorted(self.thresholds, x[seen], side="left")
            out[seen] = self.leaf_values[idx]
        return out


def fit_numeric_tree(x: np.ndarray, y: np.ndarray, thresholds: np.ndarray, depth: int,
                     n_classes: int | None, fallback) -> _NumericTree:
    """Optimal depth-limited quantile tree on one numeric feature; x must be
    finite. Classification when n_classes is given (y holds class codes)."""
    order = np.argsort(x, kind="stable")
    xs, ysrt = x[order], y[order]
    pos = np.concatenate([[0], np.searchsorted(xs, thresholds, side="right"), [len(xs)]]).astype(np.int64)
    if n_classes is None:
        C = _segment_costs_reg(ysrt, pos)
    else:
        C = _segment_costs_cls(ysrt, pos, n_classes)
    tables = _depth_tables(C, depth)
    chosen: list[int] = []
    _extract_boundaries(C, tables, 0, len(pos) - 1, depth, chosen)
    bounds = np.asarray([thresholds[k - 1] for k in chosen], dtype=np.float64)
    edges = [0] + [pos[k] for k in chosen] + [len(xs)]
    leaves = []
    for a, b in zip(edges[:-1], edges[1:]):
        seg = ysrt[a:b]
        if n_classes is None:
            leaves.append(_leaf_value_reg(seg, fallback))
        else:
            leaves.append(_leaf_value_cls(seg.astype(np.int64), n_classes, fallback))
    dtype = np.float64 if n_classes is None else np.int64
    return _NumericTree(bounds, np.asarray(leaves, dtype=dtype), fallback)


class _CategoricalTree:
    def __init__(self, isolated: dict[str, object], rest_value, fallback):
        self.isolated = isolated
        self.rest_value = rest_value
        self.fallback = fallback

    def predict_one(self, token: str):
        return self.isolated.get(token, self.rest_value)


def _cat_cost(y: np.ndarray, n_classes: int | None) -> float:
    if len(y) == 0:
        return 0.0
    if n_classes is None:
        return float(np.sum(np.abs(y - np.median(y))))
    counts = np.bincount(y.astype(np.int64), minlength=n_classes)
    return float(len(y) - counts.max())


def fit_categorical_tree(tokens: np.ndarray, y: np.ndarray, depth: int,
                         n_classes: int | None, fallback) -> _CategoricalTree:
    cats = sorted(set(tokens.tolist()))
    iso_cost = {c: _cat_cost(y[tokens == c], n_classes) for c in cats}
    isolated: list[str] = []
    rest_mask = np.ones(len(tokens), dtype=bool)
    current = _cat_cost(y, n_classes)
    for _ in range(depth):
        best_cat, best_cost = None, current
        for c in cats:
            if c in isolated:
                continue
            rest = rest_mask & (tokens != c)
            cost = sum(iso_cost[k] for k in isolated) + iso_cost[c] + _cat_cost(y[rest], n_classes)
            if cost < best_cost:
                best_cat, best_cost = c, cost
        if best_cat is None:
            break
        isolated.append(best_cat)
        rest_mask &= tokens != best_cat
        current = best_cost
    iso_values = {}
    for c in isolated:
        seg = y[tokens == c]
        iso_values[c] = _leaf_value_reg(seg, fallback) if n_classes is None else _leaf_value_cls(
            seg.astype(np.int64), n_classes, fallback)
    rest_seg = y[rest_mask]
    rest_value = _leaf_value_reg(rest_seg, fallback) if n_classes is None else _leaf_value_cls(
        rest_seg.astype(np.int64), n_classes, fallback)
    return _CategoricalTree(iso_values, rest_value, fallback)


# ---------------------------------------------------------------------------
# Scoring


def weighted_f1(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    n = len(y_true)
    total = 0.0
    for c in range(n_classes):
        support = int(np.sum(y_true == c))
        if support == 0:
            continue
        tp = int(np.sum((y_true == c) & (y_pred == c)))
        fp = int(np.sum((y_true != c) & (y_pred == c)))
        fn = support - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        total += support / n * f1
    return total


def _score_from_folds(y, tree_preds, naive_preds, n_classes: int | None) -> float:
    if n_classes is None:
        mae_naive = float(np.mean(np.abs(naive_preds - y)))
        if mae_naive == 0.0:
            return 0.0
        mae_tree = float(np.mean(np.abs(tree_preds - y)))
        return max(0.0, 1.0 - mae_tree / mae_naive)
    f1_naive = weighted_f1(y, naive_preds, n_classes)
    if f1_naive >= 1.0:
        return 0.0
    f1_tree = weighted_f1(y, tree_preds, n_classes)
    return max(0.0, (f1_tree - f1_naive) / (1.0 - f1_naive))


def _pps_single(col: ds.ColumnSchema, values: np.ndarray, y: np.ndarray,
                folds: list[np.ndarray], depth: int, step: float,
                n_classes: int | None) -> float:
    n = len(y)
    tree_preds = np.empty(n, dtype=np.float64 if n_classes is None else np.int64)
    naive_preds = np.empty_like(tree_preds)
    numeric = col.kind == ds.KIND_NUMERICAL
    if numeric:
        x = np.asarray(values, dtype=np.float64)
        finite_all = x[np.isfinite(x)]
        if len(finite_all) == 0:
            return 0.0
        thresholds = quantile_candidates(finite_all, step)
    for val_idx in folds:
        val_mask = np.zeros(n, dtype=bool)
        val_mask[val_idx] = True
        yt = y[~val_mask]
        if n_classes is None:
            fallback = float(np.median(yt))
        else:
            fallback = int(np.argmax(np.bincount(yt.astype(np.int64), minlength=n_classes)))
        naive_preds[val_mask] = fallback
        if numeric:
            xt = x[~val_mask]
            ft = np.isfinite(xt)
            if ft.sum() == 0 or len(thresholds) == 0:
                tree_preds[val_mask] = fallback
            else:
                tree = fit_numeric_tree(xt[ft], yt[ft], thresholds, depth, n_classes, fallback)
                tree_preds[val_mask] = tree.predict(x[val_mask])
        else:
            tree = fit_categorical_tree(values[~val_mask], yt, depth, n_classes, fallback)
            tree_preds[val_mask] = [tree.predict_one(t) for t in values[val_mask]]
    return _score_from_folds(y, tree_preds, naive_preds, n_classes)


def pps_importance(d: ds.Dataset, train_rows, cv_folds: int = DEFAULT_CV_FOLDS,
                   seed: int = 0, depth: int = DEFAULT_TREE_DEPTH,
                   quantile_step: float = DEFAULT_QUANTILE_STEP,
                   workers: int = 1) -> dict[str, float]:
    """Cross-validated tree-vs-naive score per feature, clipped to [0, 1].
    Per-feature computation is independent; workers > 1 parallelizes it while
    keeping deterministic output."""
    rows = np.asarray(train_rows, dtype=np.int64)
    if cv_folds < 2:
        raise ValueError("cv_folds must be at least 2")
    if len(rows) < cv_folds:
        raise ValueError("need at least cv_folds training rows")
    folds = kfold_indices(len(rows), cv_folds, subseed(seed, "pps-folds"))
    if d.task == ds.TASK_REGRESSION:
        y = np.asarray(d.labels()[rows], dtype=np.float64)
        n_classes = None
    else:
        code = {c: i for i, c in enumerate(d.class_labels)}
        y = np.asarray([code[v] for v in d.labels()[rows]], dtype=np.int64)
        n_classes = len(d.class_labels)

    cols = d.feature_columns

    def one(col):
        return _pps_single(col, d.column(col.name)[rows], y, folds, depth, quantile_step, n_classes)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(one, cols))
    else:
        scores = [one(c) for c in cols]
    return {c.name: float(min(1.0, s)) for c, s in zip(cols, scores)}


def compute_feature_weights(d: ds.Dataset, train_rows, cv_folds: int = DEFAULT_CV_FOLDS,
                            seed: int = 0, **pps_kwargs) -> FeatureWeights:
    return FeatureWeights(pearson=pearson_importance(d, train_rows),
                          pps=pps_importance(d, train_rows, cv_folds, seed=seed, **pps_kwargs))


def combine(weights: FeatureWeights, mode: str, features) -> tuple[np.ndarray, np.ndarray | None]:
    """Resolve the weight vectors used for distance aggregation, ordered by
    ``features``. Dual mode keeps both rankings; uniform is all ones."""
    names = list(features)
    if mode == "dual":
        return (np.asarray([weights.pearson[f] for f in names]),
                np.asarray([weights.pps[f] for f in names]))
    if mode == "pearson_only":
        return np.asarray([weights.pearson[f] for f in names]), None
    if mode == "pps_only":
        return np.asarray([weights.pps[f] for f in names]), None
    if mode == "uniform":
        ones = np.ones(len(names))
        return ones, ones.copy()
    raise ValueError(f"unknown importance mode {mode!r}")
