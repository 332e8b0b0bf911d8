
import numpy as np
import pytest

import nnchain.motorcycle as mc
from nnchain.motorcycle import (Crashed, CurtainStore, DegenerateInputError, Escaped, Motorcycle,
                                MotorcycleStats, mc_nearest, mc_oracle, motorcycle_graph, pinwheel,
                                random_motorcycles, verify_graph)


def same_status(a, b):
    assert len(a) == len(b)
    for x, y in zip(a, b):
        assert type(x) is type(y)
        if isinstance(x, Crashed):
            assert x.into == y.into
            assert abs(x.time - y.time) <= 1e-9
            assert max(abs(p - q) for p, q in zip(x.point, y.point)) <= 1e-9


def seeded(seed, n_max=60):
    rng = np.random.default_rng(seed)
    return random_motorcycles(int(rng.integers(2, n_max + 1)), rng)


def brute_nearest(mcs, clip, m):
    """Enumerate all ray/segment intersections with plain 2x2 solves."""
    a = mcs[m]
    best = None
    for b in mcs:
        if b.id == m:
            continue
        mat = np.column_stack([a.velocity, -b.velocity])
        if abs(np.linalg.det(mat)) < 1e-12:
            continue
        ta, tb = np.linalg.solve(mat, np.subtract(b.start, a.start))
        if ta > 0 and 0 <= tb < ta and tb <= clip[b.id]:
            if best is None or ta < best[1]:
                best = (b.id, ta)
    return best


def test_single_motorcycle_escapes():
    m = [Motorcycle(0, (0, 0), (1, 0), 1)]
    assert motorcycle_graph(m) == [Escaped()] == mc_oracle(m)
    assert mc_nearest(CurtainStore(m), 0) is None


def test_two_motorcycles():
    mcs = [Motorcycle(0, (0, 0), (1, 0), 1), Motorcycle(1, (1, -2), (0, 1), 1)]
    store = CurtainStore(mcs)
    h = mc_nearest(store, 1)
    assert h.id == 0 and h.point == pytest.approx((1, 0)) and h.time == pytest.approx(2) and h.passed == 1
    assert mc_nearest(store, 0) is None
    st = motorcycle_graph(mcs)
    assert st[0] == Escaped()
    assert st[1].into == 0 and st[1].time == pytest.approx(2) and st[1].point == pytest.approx((1, 0))


def test_parallel_never_interact():
    mcs = [Motorcycle(i, (0, i), (1, 0), 1 + i) for i in range(5)]
    assert motorcycle_graph(mcs) == [Escaped()] * 5 == mc_oracle(mcs)


@pytest.mark.parametrize("k", [3, 4, 5, 7])
def test_pinwheel_cycle(k):
    mcs = pinwheel(k, rotation=0.3)
    stats = MotorcycleStats()
    st = motorcycle_graph(mcs, check=True, stats=stats)
    assert all(isinstance(s, Crashed) for s in st)
    assert [s.into for s in st] == [(i + 1) % k for i in range(k)]
    assert stats.cycles >= 1
    same_status(st, mc_oracle(mcs))


def test_nearest_matches_enumeration():
    for seed in range(30):
        rng = np.random.default_rng(seed)
        mcs = random_motorcycles(20, rng)
        store = CurtainStore(mcs)
        clip = np.full(20, np.inf)
        for i in rng.choice(20, size=6, replace=False):
            clip[i] = float(rng.uniform(0.5, 20))
            store.clip(int(i), clip[i])
        for m in range(20):
            h = mc_nearest(store, m)
            b = brute_nearest(mcs, clip, m)
            if b is None:
                assert h is None
            else:
                assert h.id == b[0] and h.time == pytest.approx(b[1], abs=1e-9)


def test_agrees_with_oracle_and_bounds():
    for seed in range(150):
        mcs = seeded(seed)
        n = len(mcs)
        stats = MotorcycleStats()
        try:
            st = motorcycle_graph(mcs, check=True, stats=stats)
        except DegenerateInputError:
            with pytest.raises(DegenerateInputError):
                mc_oracle(mcs)
            continue
        same_status(st, mc_oracle(mcs))
        assert stats.queries <= 3 * n
        assert stats.clips <= n
        assert verify_graph(mcs, st) == []


def test_partial_cycle_resolution_is_exercised(monkeypatch):
    seen = []
    orig = mc._resolve_cycle

    def spy(members, hits):
        done = orig(members, hits)
        seen.append((len(members), len(done)))
        return done

    monkeypatch.setattr(mc, "_resolve_cycle", spy)
    mcs = seeded(2)
    st = motorcycle_graph(mcs)
    assert any(k > d for k, d in seen)
    same_status(st, mc_oracle(mcs))


def test_degenerate_inputs_rejected():
    # head-on on a common line
    mcs = [Motorcycle(0, (0, 0), (1, 0), 1), Motorcycle(1, (4, 0), (-1, 0), 1)]
    with pytest.raises(DegenerateInputError):
        motorcycle_graph(mcs)
    # simultaneous arrival at a crossing
    mcs = [Motorcycle(0, (0, 0), (1, 0), 1), Motorcycle(1, (2, -2), (0, 1), 1)]
    with pytest.raises(DegenerateInputError):
        motorcycle_graph(mcs)
    with pytest.raises(DegenerateInputError):
        mc_oracle(mcs)


def test_input_errors():
    with pytest.raises(ValueError):
        Motorcycle(0, (0, 0), (0, 0), 1)
    with pytest.raises(ValueError):
        Motorcycle(0, (0, 0), (1, 0), 0)
    with pytest.raises(ValueError):
        motorcycle_graph([Motorcycle(0, (0, 0), (1, 0), 1), Motorcycle(1, (0, 0), (0, 1), 1)])


def test_verify_graph_flags_wrong_answers():
    mcs = [Motorcycle(0, (0, 0), (1, 0), 1), Motorcycle(1, (1, -2), (0, 1), 1)]
    assert verify_graph(mcs, [Escaped(), Escaped()])
    assert verify_graph(mcs, [Crashed(1, (0.5, 0), 0.5), Escaped()])


def test_order_independence():
    """Relabelling motorcycles permutes the answer."""
    mcs = seeded(11, 25)
    base = motorcycle_graph(mcs)
    rng = np.random.default_rng(0)
    perm = rng.permutation(len(mcs))
    moved = [Motorcycle(i, mcs[p].start, mcs[p].dir, mcs[p].speed) for i, p in enumerate(perm)]
    got = motorcycle_graph(moved)
    for i, p in enumerate(perm):
        a, b = got[i], base[p]
        assert type(a) is type(b)
        if isinstance(a, Crashed):
            assert perm[a.into] == b.into and a.time == pytest.approx(b.time)
