import numpy as np
import pytest
from hypothesis import given, strategies as st

from nnchain.matching import (BlockingPair, EmptyStructureError, FirstChoiceHull2D, FirstChoiceScan, MatchStats,
                              Stable, affinity, affinity_matrix, first_choice_2d, first_choice_scan,
                              gale_shapley_oracle, greedy_best_pair, narcissistic_match, random_instance,
                              verify_stability)


def test_single_pair():
    assert narcissistic_match([[1.0, 2.0]], [[3.0, 1.0]]) == [(0, 0)]
    assert gale_shapley_oracle([[1.0]], [[2.0]]) == [(0, 0)]
    assert verify_stability([(0, 0)], [[1.0]], [[2.0]])


def test_two_by_two_example():
    left, right = [[3, 1], [1, 3]], [[4, 1], [1, 4]]
    assert affinity(np.array([4.0, 1.0]), np.array([3.0, 1.0])) == 13
    assert narcissistic_match(left, right) == [(0, 0), (1, 1)]
    assert gale_shapley_oracle(left, right) == [(0, 0), (1, 1)]


def test_symmetric_affinity_is_bitwise_equal(rng):
    L, R = rng.uniform(0.1, 1, (30, 5)), rng.uniform(0.1, 1, (30, 5))
    A = affinity_matrix(L, R)
    for i in range(30):
        for j in range(30):
            assert affinity(L[i], R[j]) == affinity(R[j], L[i]) == A[i, j]


@pytest.mark.parametrize("k", [1, 2, 3, 5])
def test_equals_oracles(k, rng):
    for n in (1, 7, 40):
        L, R = random_instance(n, k, rng)
        st_ = MatchStats()
        got = narcissistic_match(L, R, check=True, stats=st_)
        assert got == gale_shapley_oracle(L, R, "left") == gale_shapley_oracle(L, R, "right")
        assert got == greedy_best_pair(L, R)
        assert verify_stability(got, L, R) == Stable()
        assert st_.matches == n


def test_hull_and_scan_structures_agree(rng):
    L, R = random_instance(60, 2, rng)
    assert narcissistic_match(L, R, use_hull=True) == narcissistic_match(L, R, use_hull=False)


def test_first_choice_2d_against_scan(rng):
    pts = rng.uniform(0.05, 1, (300, 2))
    h = FirstChoiceHull2D(pts)
    alive = set(range(300))
    for step in range(1000):
        q = rng.uniform(0.01, 1, 2)
        assert first_choice_2d(h, q) == first_choice_scan(pts, q, alive)
        if step % 4 == 0 and len(alive) > 1:
            i = int(rng.choice(sorted(alive)))
            h.delete(i)
            alive.discard(i)


def test_first_choice_axis_queries(rng):
    pts = rng.uniform(0.05, 1, (50, 2))
    h = FirstChoiceHull2D(pts)
    assert first_choice_2d(h, (1, 0)) == int(np.argmax(pts[:, 0]))
    assert first_choice_2d(h, (0, 1)) == int(np.argmax(pts[:, 1]))
    single = FirstChoiceHull2D([[0.3, 0.4]])
    assert first_choice_2d(single, (0.5, 0.5)) == 0


def test_first_choice_scan_basics(rng):
    v = rng.uniform(0.1, 1, (20, 1))
    assert first_choice_scan(v, [1.0]) == int(np.argmax(v[:, 0]))
    v3 = rng.uniform(0.1, 1, (40, 3))
    q = rng.uniform(0.1, 1, 3)
    perm = rng.permutation(40)
    assert perm[first_choice_scan(v3[perm], q)] == first_choice_scan(v3, q)
    # ties go to the smaller id
    assert first_choice_scan([[1, 1], [1, 1]], [1, 2]) == 0


def test_empty_structures():
    h = FirstChoiceHull2D([[1.0, 1.0]])
    h.delete(0)
    with pytest.raises(EmptyStructureError):
        first_choice_2d(h, (1, 1))
    s = FirstChoiceScan([[1.0]])
    s.delete(0)
    with pytest.raises(EmptyStructureError):
        s.query([1.0])
    with pytest.raises(KeyError):
        s.delete(0)


def test_swapped_pairs_block(rng):
    L, R = random_instance(20, 2, rng)
    m = narcissistic_match(L, R)
    found = 0
    for a in range(19):
        bad = list(m)
        (l1, r1), (l2, r2) = bad[a], bad[a + 1]
        bad[a], bad[a + 1] = (l1, r2), (l2, r1)
        res = verify_stability(bad, L, R)
        if isinstance(res, BlockingPair):
            found += 1
            A = affinity_matrix(L, R)
            pl = dict(bad)
            pr = {r: l for l, r in bad}
            assert A[res.left, res.right] > A[res.left, pl[res.left]]
            assert A[res.left, res.right] > A[pr[res.right], res.right]
    assert found > 0


def test_input_errors():
    with pytest.raises(ValueError):
        narcissistic_match([[1, 1]], [[1, 1], [2, 2]])
    with pytest.raises(ValueError):
        narcissistic_match([[1, -1]], [[1, 1]])
    with pytest.raises(ValueError):
        verify_stability([(0, 0)], [[1], [2]], [[1], [2]])
    with pytest.raises(ValueError):
        gale_shapley_oracle([[1]], [[1]], proposing="middle")


def test_generator_positive_and_strict(rng):
    for _ in range(200):
        L, R = random_instance(int(rng.integers(1, 12)), int(rng.integers(1, 5)), rng)
        assert np.all(L > 0) and np.all(R > 0)
        A = affinity_matrix(L, R)
        for row in np.vstack([A, A.T]):
            assert len(np.unique(row)) == len(row)


@given(st.integers(1, 25), st.integers(1, 4), st.integers(0, 2**31))
def test_property_unique_stable_matching(n, k, seed):
    L, R = random_instance(n, k, np.random.default_rng(seed))
    got = narcissistic_match(L, R)
    assert got == gale_shapley_oracle(L, R, "left") == gale_shapley_oracle(L, R, "right")
    assert verify_stability(got, L, R)
