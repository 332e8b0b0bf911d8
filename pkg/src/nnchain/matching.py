"""Narcissistic k-attribute stable matching.

Every agent ranks the other side by the dot product with its own attribute
vector, so both sides of a cross pair see the same value.  Matching mutual
first choices ("soul mates") repeatedly yields the unique stable matching;
the bichromatic nearest-neighbor chain finds them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EmptyStructureError(LookupError):
    pass


def affinity(vectors: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Dot products of each row with q.  Every dot product in this module goes
    through here so that both sides of a pair get bitwise-equal values."""
    return (vectors * q).sum(-1)


def _argmax(vals, ids):
    best = np.max(vals)
    return int(np.min(ids[vals == best]))


def _validate(vectors, name):
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or len(v) == 0:
        raise ValueError(f"{name} must be a nonempty list of attribute vectors")
    if not np.all(v > 0):
        raise ValueError(f"{name} attribute vectors must be strictly positive")
    return v


class FirstChoiceScan:
    """Alive set with linear-scan first-choice queries (any k)."""

    def __init__(self, vectors):
        self.vectors = np.asarray(vectors, dtype=float)
        self.alive = np.ones(len(self.vectors), dtype=bool)

    def __len__(self):
        return int(self.alive.sum())

    def delete(self, i):
        if not self.alive[i]:
            raise KeyError(f"agent {i} already removed")
        self.alive[i] = False

    def query(self, q):
        ids = np.flatnonzero(self.alive)
        if len(ids) == 0:
            raise EmptyStructureError("no alive agents")
        return _argmax(affinity(self.vectors[ids], q), ids)


class FirstChoiceHull2D(FirstChoiceScan):
    """First choice for positive 2D queries by binary search on the top-right
    section of the convex hull of alive points.

    The section runs clockwise from the highest point to the rightmost point.
    Along it, q . edge changes sign once, and the maximizer is the vertex
    where it does.  The section is rebuilt when one of its vertices dies.
    """

    def __init__(self, vectors):
        super().__init__(vectors)
        if self.vectors.shape[1] != 2:
            raise ValueError("hull structure needs 2-attribute vectors")
        self.rebuilds = 0
        self._build()

    def _build(self):
        self.rebuilds += 1
        ids = np.flatnonzero(self.alive)
        if len(ids) == 0:
            self.chain = np.zeros(0, dtype=np.int64)
            return
        pts = self.vectors[ids]
        order = ids[np.lexsort((pts[:, 1], pts[:, 0]))]
        upper = []
        for i in order:
            while len(upper) >= 2:
                o, a = self.vectors[upper[-2]], self.vectors[upper[-1]]
                b = self.vectors[i]
                if (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) >= 0:
                    upper.pop()
                else:
                    break
            upper.append(int(i))
        ys = self.vectors[upper, 1]
        top = int(np.flatnonzero(ys == ys.max())[-1])
        self.chain = np.array(upper[top:], dtype=np.int64)
        self._on_chain = set(self.chain.tolist())

    def delete(self, i):
        super().delete(i)
        if i in self._on_chain:
            self._build()

    def query(self, q):
        c = self.chain
        if len(c) == 0:
            raise EmptyStructureError("no alive agents")
        v = self.vectors[c]
        lo, hi = 0, len(c) - 1
        # first index whose outgoing edge does not increase q . p
        while lo < hi:
            mid = (lo + hi) // 2
            if affinity(v[mid + 1], q) > affinity(v[mid], q):
                lo = mid + 1
            else:
                hi = mid
        near = np.arange(max(lo - 1, 0), min(lo + 2, len(c)))
        return _argmax(affinity(v[near], q), c[near])


def first_choice_2d(h: FirstChoiceHull2D, q) -> int:
    return h.query(np.asarray(q, dtype=float))


def first_choice_scan(vectors, q, alive=None) -> int:
    v = np.asarray(vectors, dtype=float)
    ids = np.arange(len(v)) if alive is None else np.asarray(sorted(alive), dtype=np.int64)
    if len(ids) == 0:
        raise EmptyStructureError("no alive agents")
    return _argmax(affinity(v[ids], np.asarray(q, dtype=float)), ids)


@dataclass
class MatchStats:
    iterations: int = 0
    queries: int = 0
    matches: int = 0
    hull_rebuilds: int = 0


def _structure(vectors, use_hull):
    if use_hull and vectors.shape[1] == 2:
        return FirstChoiceHull2D(vectors)
    return FirstChoiceScan(vectors)


def narcissistic_match(left, right, use_hull=True, check=False, stats: MatchStats | None = None):
    """Unique stable matching as a sorted list of (left id, right id)."""
    L = _validate(left, "left")
    R = _validate(right, "right")
    if L.shape != R.shape:
        raise ValueError(f"size mismatch: {L.shape} vs {R.shape}")
    st = stats if stats is not None else MatchStats()
    vec = (L, R)
    fc = (_structure(R, use_hull), _structure(L, use_hull))  # first choices of side s live in fc[s]
    free = [set(range(len(L))), set(range(len(R)))]
    pairs = []
    chain = []  # (side, id); side 0 = left
    values = []
    while free[0]:
        st.iterations += 1
        if not chain:
            chain.append((0, min(free[0])))
            values.clear()
            continue
        side, x = chain[-1]
        y = fc[side].query(vec[side][x])
        st.queries += 1
        val = float(affinity(vec[1 - side][y], vec[side][x]))
        if len(chain) >= 2 and chain[-2] == (1 - side, y):
            if check:
                _check_soul_mates(side, x, y, vec, free)
            chain.pop()
            chain.pop()
            del values[max(len(chain) - 1, 0):]
            l, r = (x, y) if side == 0 else (y, x)
            pairs.append((l, r))
            fc[0].delete(r)
            fc[1].delete(l)
            free[0].discard(l)
            free[1].discard(r)
            st.matches += 1
        else:
            if check:
                if values and not val > values[-1]:
                    raise AssertionError("chain values do not strictly increase")
                if (1 - side, y) in chain:
                    raise AssertionError(f"agent {y} entered the chain twice")
            chain.append((1 - side, y))
            values.append(val)
    st.hull_rebuilds = sum(getattr(s, "rebuilds", 0) for s in fc)
    return sorted(pairs)


def _check_soul_mates(side, x, y, vec, free):
    ids_y = np.array(sorted(free[1 - side]))
    ids_x = np.array(sorted(free[side]))
    if first_choice_scan(vec[1 - side], vec[side][x], ids_y) != y:
        raise AssertionError(f"{y} is not the first choice of {x}")
    if first_choice_scan(vec[side], vec[1 - side][y], ids_x) != x:
        raise AssertionError(f"{x} is not the first choice of {y}")


def affinity_matrix(left, right) -> np.ndarray:
    L = np.asarray(left, dtype=float)
    R = np.asarray(right, dtype=float)
    return np.array([affinity(R, l) for l in L]).reshape(len(L), len(R))


def gale_shapley_oracle(left, right, proposing: str = "left"):
    """Deferred acceptance on preferences materialized from dot products."""
    A = affinity_matrix(left, right)
    if proposing == "right":
        return sorted((l, r) for r, l in _deferred_acceptance(A.T))
    if proposing != "left":
        raise ValueError("proposing side must be 'left' or 'right'")
    return sorted(_deferred_acceptance(A))


def _deferred_acceptance(A):
    n = A.shape[0]
    ids = np.arange(n)
    prefs = [np.lexsort((ids, -A[i])) for i in range(n)]
    rank = np.empty_like(A, dtype=np.int64)
    for j in range(n):
        rank[np.lexsort((ids, -A[:, j])), j] = ids
    nxt = [0] * n
    holder = [-1] * n
    free = list(range(n - 1, -1, -1))
    while free:
        i = free.pop()
        j = int(prefs[i][nxt[i]])
        nxt[i] += 1
        cur = holder[j]
        if cur == -1:
            holder[j] = i
        elif rank[i, j] < rank[cur, j]:
            holder[j] = i
            free.append(cur)
        else:
            free.append(i)
    return [(holder[j], j) for j in range(n)]


@dataclass(frozen=True)
class Stable:
    def __bool__(self):
        return True


@dataclass(frozen=True)
class BlockingPair:
    left: int
    right: int

    def __bool__(self):
        return False


def verify_stability(matching, left, right):
    A = affinity_matrix(left, right)
    n = A.shape[0]
    if A.shape[0] != A.shape[1] or len(matching) != n:
        raise ValueError("stability is defined for perfect matchings")
    ml = np.full(n, -1)
    mr = np.full(n, -1)
    for l, r in matching:
        if ml[l] != -1 or mr[r] != -1:
            raise ValueError("agent matched twice")
        ml[l], mr[r] = r, l
    pl = A[np.arange(n), ml]
    pr = A[mr, np.arange(n)]
    block = (A > pl[:, None]) & (A > pr[None, :])
    if block.any():
        l, r = np.argwhere(block)[0]
        return BlockingPair(int(l), int(r))
    return Stable()


def greedy_best_pair(left, right):
    """Repeatedly match the globally best remaining cross pair."""
    A = affinity_matrix(left, right).copy()
    n = A.shape[0]
    pairs = []
    for _ in range(n):
        l, r = np.unravel_index(np.argmax(A), A.shape)
        pairs.append((int(l), int(r)))
        A[l, :] = -np.inf
        A[:, r] = -np.inf
    return sorted(pairs)


def random_instance(n: int, k: int, rng, low=0.05, high=1.0):
    """Strictly positive attribute vectors; redrawn until all preferences are
    strict (no equal dot products against any agent)."""
    while True:
        L = rng.uniform(low, high, size=(n, k))
        R = rng.uniform(low, high, size=(n, k))
        A = affinity_matrix(L, R)
        rows_ok = all(len(np.unique(A[i])) == n for i in range(n))
        cols_ok = all(len(np.unique(A[:, j])) == n for j in range(n))
        if rows_ok and cols_ok:
            return L, R
