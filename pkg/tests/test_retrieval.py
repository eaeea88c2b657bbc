import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tabctx import retrieval as rt
from tabctx.importance import FeatureWeights
from conftest import make_dataset
from oracles import random_mixed_dataset, retrieval_oracle


def pool_for(d, rows, cfg, pearson=None, pps=None):
    w = None
    if pearson is not None:
        w = FeatureWeights(pearson=pearson, pps=pps or pearson)
    return rt.build_pool(d, rows, cfg, weights=w)


def test_categorical_distance_indicator():
    d = make_dataset(cat={"c": ["red", "blue"]}, label=["a", "b"])
    cfg = rt.RetrievalConfig(quota=1, importance_mode="uniform")
    pool = rt.build_pool(d, [0, 1], cfg)
    dist = rt.feature_distance(pool, {"c": "red"}, "c")
    assert dist.tolist() == [0.0, 1.0]


def test_numeric_rescale_arithmetic():
    # normalized pool values 0.5/0.0/1.0 against query 0.5: raw [0,.5,.5] -> [0,1,1]
    d = make_dataset(num={"x": [1.0, 0.0, 2.0]}, label=[0, 0, 1], task="regression")
    cfg = rt.RetrievalConfig(quota=1, importance_mode="uniform", numeric_norm="minmax")
    pool = rt.build_pool(d, [0, 1, 2], cfg)
    dist = rt.feature_distance(pool, {"x": 1.0}, "x")
    assert dist.tolist() == [0.0, 1.0, 1.0]


def test_constant_numeric_column_zero_distance():
    d = make_dataset(num={"x": [3.0, 3.0, 3.0]}, label=[0, 1, 0], task="regression")
    cfg = rt.RetrievalConfig(quota=1, importance_mode="uniform")
    pool = rt.build_pool(d, [0, 1, 2], cfg)
    assert rt.feature_distance(pool, {"x": 9.0}, "x").tolist() == [0.0, 0.0, 0.0]


def test_missing_numeric_distance_is_one():
    d = make_dataset(num={"x": [1.0, np.nan, 3.0]}, label=[0, 1, 0], task="regression")
    cfg = rt.RetrievalConfig(quota=1, importance_mode="uniform")
    pool = rt.build_pool(d, [0, 1, 2], cfg)
    dist = rt.feature_distance(pool, {"x": 1.0}, "x")
    assert dist[1] == 1.0
    assert rt.feature_distance(pool, {"x": np.nan}, "x").tolist() == [1.0, 1.0, 1.0]


def test_rescale_off_keeps_raw():
    d = make_dataset(num={"x": [0.0, 10.0]}, label=[0, 1], task="regression")
    cfg = rt.RetrievalConfig(quota=1, importance_mode="uniform", numeric_norm="none",
                             distance_minmax_rescale=False)
    pool = rt.build_pool(d, [0, 1], cfg)
    assert rt.feature_distance(pool, {"x": 4.0}, "x").tolist() == [4.0, 6.0]


def test_aggregate_examples():
    assert rt.aggregate(np.array([[0.3, 0.4]]), np.array([1.0, 1.0]))[0] == pytest.approx(0.5, abs=1e-12)
    assert rt.aggregate(np.array([[0.0, 0.0]]), np.array([1.0, 1.0]))[0] == 0.0
    assert rt.aggregate(np.array([[0.8, 0.9]]), np.array([0.25, 0.0]))[0] == pytest.approx(0.4, abs=1e-12)
    with pytest.raises(ValueError):
        rt.aggregate(np.array([[0.1, 0.2]]), np.array([1.0]))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=20),
       st.floats(0, 5), st.floats(0, 5))
def test_aggregate_bound(rows, w1, w2):
    D = np.asarray(rows)
    w = np.asarray([w1, w2])
    agg = rt.aggregate(D, w)
    assert np.all(agg >= 0)
    assert np.all(agg <= np.sqrt(w.sum()) + 1e-12)


def dual_test_dataset():
    # feature "a" ranks rows 0..15 nearest, feature "b" ranks rows 16..31 nearest
    a = np.concatenate([np.arange(16.0), 1000 + np.arange(16.0)])
    b = np.concatenate([1000 + np.arange(16.0), np.arange(16.0)])
    return make_dataset(num={"a": a, "b": b}, label=np.zeros(32), task="regression")


def test_dual_quota_split_disjoint_rankings():
    d = dual_test_dataset()
    cfg = rt.RetrievalConfig(quota=8, importance_mode="dual", numeric_norm="none",
                             distance_minmax_rescale=False)
    pool = pool_for(d, range(32), cfg, pearson={"a": 1.0, "b": 0.0}, pps={"a": 0.0, "b": 1.0})
    ctx = rt.retrieve(pool, {"a": 0.0, "b": 0.0}, cfg)
    tags = dict(zip(ctx.indices.tolist(), ctx.provenance))
    assert sum(1 for t in ctx.provenance if t == rt.TAG_PEARSON) == 4
    assert sum(1 for t in ctx.provenance if t == rt.TAG_PPS) == 4
    assert all(tags[i] == rt.TAG_PEARSON for i in range(4))
    assert all(tags[i] == rt.TAG_PPS for i in range(16, 20))


def test_dual_identical_rankings_dedup_and_top_up():
    d = make_dataset(num={"a": np.arange(10.0)}, label=np.zeros(10), task="regression")
    cfg = rt.RetrievalConfig(quota=4, importance_mode="dual", numeric_norm="none",
                             distance_minmax_rescale=False)
    pool = pool_for(d, range(10), cfg, pearson={"a": 1.0}, pps={"a": 1.0})
    ctx = rt.retrieve(pool, {"a": 0.0}, cfg)
    assert ctx.indices.tolist() == [0, 1, 2, 3]
    assert ctx.provenance.count(rt.TAG_PEARSON) == 2
    assert ctx.provenance.count(rt.TAG_MERGED) == 2


def test_quota_saturation_returns_everything():
    d = make_dataset(num={"a": [5.0, 1.0, 3.0]}, label=np.zeros(3), task="regression")
    cfg = rt.RetrievalConfig(quota=50, importance_mode="uniform", numeric_norm="none",
                             distance_minmax_rescale=False)
    pool = rt.build_pool(d, range(3), cfg)
    ctx = rt.retrieve(pool, {"a": 0.0}, cfg)
    assert len(ctx) == 3
    assert ctx.indices.tolist() == [1, 2, 0]  # ascending |a - 0|


def test_match_constraint_soundness():
    d = make_dataset(num={"x": np.arange(12.0)},
                     cat={"g": ["u", "v"] * 6},
                     label=np.zeros(12), task="regression")
    cfg = rt.RetrievalConfig(quota=4, importance_mode="uniform", match_constraints=("g",))
    pool = rt.build_pool(d, range(12), cfg)
    ctx = rt.retrieve(pool, {"x": 5.0, "g": "v"}, cfg)
    assert len(ctx) == 4
    assert all(d.column("g")[i] == "v" for i in ctx.indices)


def test_constraint_filtering_can_empty_pool():
    d = make_dataset(cat={"g": ["u", "u"]}, label=["a", "b"])
    cfg = rt.RetrievalConfig(quota=2, importance_mode="uniform", match_constraints=("g",))
    pool = rt.build_pool(d, [0, 1], cfg)
    ctx = rt.retrieve(pool, {"g": "zzz"}, cfg)
    assert len(ctx) == 0


def test_self_retrieval_duplicate_row():
    rng = np.random.default_rng(0)
    x = rng.normal(size=30)
    d = make_dataset(num={"x": x}, cat={"c": ["a"] * 30}, label=np.zeros(30), task="regression")
    cfg = rt.RetrievalConfig(quota=3, importance_mode="uniform")
    pool = rt.build_pool(d, range(30), cfg)
    query = {"x": float(x[7]), "c": "a"}
    ctx = rt.retrieve(pool, query, cfg)
    assert 7 in ctx.indices.tolist()
    assert ctx.distances[ctx.indices.tolist().index(7)] == 0.0


def test_retrieve_random_determinism():
    d = make_dataset(num={"x": np.arange(100.0)}, label=np.zeros(100), task="regression")
    cfg = rt.RetrievalConfig(quota=8, importance_mode="uniform")
    pool = rt.build_pool(d, range(100), cfg)
    a = rt.retrieve_random(pool, 8, seed=5)
    b = rt.retrieve_random(pool, 8, seed=5)
    assert np.array_equal(a.indices, b.indices)
    assert len(set(a.indices.tolist())) == 8
    full = rt.retrieve_random(pool, 200, seed=5)
    assert sorted(full.indices.tolist()) == list(range(100))


def test_uniform_mode_reproduces_equal_weight_brute_force():
    rng = np.random.default_rng(3)
    x1, x2 = rng.normal(size=40), rng.normal(size=40)
    d = make_dataset(num={"x1": x1, "x2": x2}, label=np.zeros(40), task="regression")
    cfg = rt.RetrievalConfig(quota=6, importance_mode="uniform", numeric_norm="none",
                             distance_minmax_rescale=False)
    pool = rt.build_pool(d, range(40), cfg)
    q = {"x1": 0.3, "x2": -0.2}
    ctx = rt.retrieve(pool, q, cfg)
    brute = sorted(range(40), key=lambda i: (np.hypot(x1[i] - 0.3, x2[i] + 0.2), i))[:6]
    assert ctx.indices.tolist() == brute


@pytest.mark.parametrize("mode", ["dual", "pearson_only", "pps_only", "uniform"])
def test_matches_naive_oracle_small(mode):
    for seed in (11, 12, 13):
        d = random_mixed_dataset(seed)
        n = d.n_rows
        rng = np.random.default_rng(seed + 1000)
        train = np.sort(rng.choice(n, size=max(5, int(n * 0.7)), replace=False))
        feats = [c.name for c in d.feature_columns]
        pw = {f: float(rng.uniform(0, 1)) for f in feats}
        sw = {f: float(rng.uniform(0, 1)) for f in feats}
        cfg = rt.RetrievalConfig(quota=int(rng.integers(1, 12)), importance_mode=mode)
        pool = pool_for(d, train, cfg, pearson=pw, pps=sw)
        query = d.feature_row(int(rng.choice([i for i in range(n) if i not in set(train.tolist())] or [0])))
        got = rt.retrieve(pool, query, cfg)
        want = retrieval_oracle(d, train, query, cfg, pw, sw)
        assert got.indices.tolist() == [r for r, _, _ in want]
        assert list(got.provenance) == [t for _, _, t in want]
