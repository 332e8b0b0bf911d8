import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nnchain.geom import DimensionError, LpMetric
from nnchain.kann import IndexError_, KannIndex, build

from conftest import METRICS


def oracle_k(pts, alive, q, k, metric):
    ids = np.array(sorted(alive), dtype=np.int64)
    d = metric.to_many(q, pts[ids])
    order = np.lexsort((ids, d))[:k]
    return ids[order], d[order]


def test_empty_index_returns_empty():
    idx = build(np.zeros((0, 2)), LpMetric(2, 2))
    assert idx.query((0, 0), 3) == []
    assert len(idx) == 0


def test_two_point_exact():
    idx = build([(0, 0), (10, 0)], LpMetric(2, 2))
    assert idx.query((1, 0), 1) == [(0, 1.0)]
    assert idx.query((1, 0), 5) == [(0, 1.0), (1, 9.0)]


def test_slack_bound_arithmetic():
    # with eps=1 either point is a legal rank-1 answer: 1.0 <= 2 * 0.5
    idx = build([(0, 0), (1.5, 0)], LpMetric(2, 2), epsilon=1.0)
    (i, d), = idx.query((1, 0), 1)
    assert d <= 2 * 0.5


def test_bad_inputs():
    idx = build([(0, 0)], LpMetric(2, 2))
    with pytest.raises(DimensionError):
        idx.query((0, 0, 0), 1)
    with pytest.raises(ValueError):
        idx.query((0, 0), 0)
    with pytest.raises(IndexError_):
        idx.delete(7)
    idx.delete(0)
    with pytest.raises(KeyError):
        idx.delete(0)
    with pytest.raises(DimensionError):
        build(np.zeros((2, 3)), LpMetric(2, 2))


@pytest.mark.parametrize("metric", METRICS, ids=str)
def test_exact_queries_match_scan(metric, rng):
    pts = rng.uniform(0, 1, size=(1000, metric.dim))
    idx = build(pts, metric, leaf_size=16)
    for q in rng.uniform(-0.2, 1.2, size=(40, metric.dim)):
        ids, d = idx.query_arrays(q, 5)
        oi, od = oracle_k(pts, range(len(pts)), q, 5, metric)
        assert ids.tolist() == oi.tolist()
        assert np.allclose(d, od, rtol=0, atol=0)


@pytest.mark.parametrize("eps", [0.05, 0.5, 1.0])
def test_per_rank_guarantee(eps, rng):
    for metric in (LpMetric(2, 3), LpMetric(1, 2), LpMetric(math.inf, 4)):
        pts = rng.uniform(0, 1, size=(600, metric.dim))
        idx = build(pts, metric, epsilon=eps, leaf_size=8)
        for q in rng.uniform(0, 1, size=(30, metric.dim)):
            ids, d = idx.query_arrays(q, 7)
            _, od = oracle_k(pts, range(len(pts)), q, 7, metric)
            assert len(set(ids.tolist())) == 7
            assert np.all(d <= (1 + eps) * od + 1e-12)
            assert np.all(np.diff(d) >= 0)


def test_insert_then_delete_is_identity(rng):
    pts = rng.uniform(0, 1, size=(200, 2))
    m = LpMetric(2, 2)
    idx = build(pts, m)
    qs = rng.uniform(0, 1, size=(20, 2))
    before = [idx.query(q, 4) for q in qs]
    new = idx.insert((0.5, 0.5))
    idx.delete(new)
    assert [idx.query(q, 4) for q in qs] == before


def test_delete_nearest_gives_second(rng):
    pts = rng.uniform(0, 1, size=(300, 2))
    m = LpMetric(2, 2)
    idx = build(pts, m)
    q = np.array([0.3, 0.6])
    (first, _), (second, d2) = idx.query(q, 2)
    idx.delete(first)
    assert idx.query(q, 1) == [(second, d2)]


def test_revive_in_place_and_reinsert_moved_id():
    m = LpMetric(2, 2)
    idx = build([(0, 0), (5, 5)], m)
    idx.delete(0)
    idx.insert((0, 0), 0)
    assert idx.query((0.1, 0), 1)[0][0] == 0
    idx.delete(0)
    idx.insert((9, 9), 0)
    assert idx.query((9, 9), 1) == [(0, 0.0)]
    with pytest.raises(ValueError):
        idx.insert((1, 1), 0)


def test_interleaved_ops_against_set_model(rng):
    m = LpMetric(2, 2)
    pts = {}
    idx = KannIndex(m, 0.0, leaf_size=8)
    rebuilds0 = idx.rebuilds
    for step in range(10_000):
        r = rng.random()
        if r < 0.45 or not pts:
            p = rng.uniform(0, 1, 2)
            pts[idx.insert(p)] = p
        elif r < 0.8:
            i = int(rng.choice(list(pts)))
            idx.delete(i)
            del pts[i]
        else:
            q = rng.uniform(0, 1, 2)
            ids = np.array(sorted(pts))
            arr = np.array([pts[i] for i in ids])
            d = m.to_many(q, arr)
            w = np.lexsort((ids, d))[0]
            assert idx.query(q, 1)[0][0] == ids[w]
        if step % 997 == 0:
            assert idx.alive_ids().tolist() == sorted(pts)
    assert len(idx) == len(pts)
    assert idx.rebuilds > rebuilds0


ops = st.lists(st.tuples(st.sampled_from(["ins", "del", "q"]), st.floats(0, 1), st.floats(0, 1)), max_size=80)


@given(ops)
def test_alive_set_property(seq):
    m = LpMetric(1, 2)
    idx = KannIndex(m, leaf_size=4)
    model = {}
    for op, x, y in seq:
        if op == "ins":
            model[idx.insert((x, y))] = (x, y)
        elif op == "del" and model:
            i = min(model)
            idx.delete(i)
            del model[i]
        elif op == "q" and model:
            ids, d = idx.query_arrays((x, y), 3)
            assert set(ids.tolist()) <= set(model)
            assert len(ids) == min(3, len(model))
    assert idx.alive_ids().tolist() == sorted(model)
