"""Per-column normalization statistics fitted on the context pool.

Quantile mode is an interpolated empirical CDF over a sorted knot sample
(capped at 1000 evenly spaced order statistics for larger pools). Degenerate
columns (all missing, or a single distinct value) normalize to a constant,
0.5 for the bounded modes and 0 for standard mode, for every input including
NaN, so their distance contribution between any two rows is zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dataset as ds
from .util import dump_json, load_json

MODE_QUANTILE = "quantile"
MODE_STANDARD = "standard"
MODE_MINMAX = "minmax"
MODE_NONE = "none"
MODES = (MODE_QUANTILE, MODE_STANDARD, MODE_MINMAX, MODE_NONE)

KNOT_CAP = 1000


@dataclass(frozen=True)
class ColumnStats:
    column: str
    mode: str
    n_seen: int
    degenerate: bool
    quantile_knots: np.ndarray | None = None
    mean: float = 0.0
    stddev: float = 0.0
    vmin: float = 0.0
    vmax: float = 0.0


def fit_column(name: str, values: np.ndarray, mode: str, knot_cap: int = KNOT_CAP) -> ColumnStats:
    if mode not in MODES:
        raise ValueError(f"unknown normalization mode {mode!r}")
    vals = np.asarray(values, dtype=np.float64)
    vals = vals[np.isfinite(vals)]
    n = len(vals)
    if mode == MODE_NONE:
        return ColumnStats(column=name, mode=mode, n_seen=n, degenerate=False)
    if n == 0:
        return ColumnStats(column=name, mode=mode, n_seen=0, degenerate=True)

    srt = np.sort(vals)
    degenerate = bool(srt[0] == srt[-1])
    if mode == MODE_QUANTILE:
        if n > knot_cap:
            pick = np.round(np.linspace(0, n - 1, knot_cap)).astype(np.int64)
            knots = srt[pick]
        else:
            knots = srt
        return ColumnStats(column=name, mode=mode, n_seen=n, degenerate=degenerate,
                           quantile_knots=knots)
    if mode == MODE_STANDARD:
        mean = float(np.mean(vals))
        std = float(np.std(vals))
        return ColumnStats(column=name, mode=mode, n_seen=n, degenerate=bool(std == 0.0),
                           mean=mean, stddev=std)
    return ColumnStats(column=name, mode=mode, n_seen=n, degenerate=degenerate,
                       vmin=float(srt[0]), vmax=float(srt[-1]))


def fit_stats(d: ds.Dataset, train_rows, mode: str = MODE_QUANTILE,
              overrides: dict[str, str] | None = None, knot_cap: int = KNOT_CAP) -> dict[str, ColumnStats]:
    """Fit stats for every numerical feature from training rows only."""
    overrides = overrides or {}
    rows = np.asarray(train_rows, dtype=np.int64)
    out = {}
    for name in d.numerical_features:
        out[name] = fit_column(name, d.column(name)[rows], overrides.get(name, mode), knot_cap)
    return out


def apply_array(stats: ColumnStats, values) -> np.ndarray:
    """Vectorized normalization. NaN propagates for non-degenerate stats; the
    degenerate constant applies to every input."""
    v = np.asarray(values, dtype=np.float64)
    if stats.mode == MODE_NONE:
        return v.copy()
    if stats.degenerate:
        const = 0.0 if stats.mode == MODE_STANDARD else 0.5
        return np.full_like(v, const)
    if stats.mode == MODE_QUANTILE:
        knots = stats.quantile_knots
        grid = np.linspace(0.0, 1.0, len(knots))
        return np.interp(v, knots, grid)
    if stats.mode == MODE_STANDARD:
        return (v - stats.mean) / stats.stddev
    out = (v - stats.vmin) / (stats.vmax - stats.vmin)
    return np.clip(out, 0.0, 1.0)


def apply(stats: ColumnStats, v: float) -> float:
    return float(apply_array(stats, np.asarray([v]))[0])


def stats_to_dict(stats: ColumnStats) -> dict:
    return {
        "column": stats.column,
        "mode": stats.mode,
        "n_seen": stats.n_seen,
        "degenerate": stats.degenerate,
        "quantile_knots": None if stats.quantile_knots is None else stats.quantile_knots.tolist(),
        "mean": stats.mean,
        "stddev": stats.stddev,
        "vmin": stats.vmin,
        "vmax": stats.vmax,
    }


def stats_from_dict(raw: dict) -> ColumnStats:
    knots = raw.get("quantile_knots")
    return ColumnStats(column=raw["column"], mode=raw["mode"], n_seen=raw["n_seen"],
                       degenerate=raw["degenerate"],
                       quantile_knots=None if knots is None else np.asarray(knots, dtype=np.float64),
                       mean=raw.get("mean", 0.0), stddev=raw.get("stddev", 0.0),
                       vmin=raw.get("vmin", 0.0), vmax=raw.get("vmax", 0.0))


def save_stats(stats: dict[str, ColumnStats], path) -> None:
    dump_json(path, {k: stats_to_dict(v) for k, v in sorted(stats.items())})


def load_stats(path) -> dict[str, ColumnStats]:
    return {k: stats_from_dict(v) for k, v in load_json(path).items()}


def stats_cache_path(cache_dir, dataset_id: str, split_seed: int, mode: str):
    """Conventional location for a between-run stats cache file."""
    from pathlib import Path
    return Path(cache_dir) / f"{dataset_id}.seed{split_seed}.{mode}.stats.json"
