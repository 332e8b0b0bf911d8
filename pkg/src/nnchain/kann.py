"""Dynamic epsilon-approximate k-nearest-neighbor index.

A kd-tree with leaf buckets over a snapshot of the point set.  Deletions are
tombstones; points inserted after the snapshot sit in a pending bucket that
is scanned linearly.  The tree is rebuilt from the alive points once the
dead fraction passes one half, or at the next query once the pending bucket
outgrows half the tree.
With eps = 0 the tree search runs in scipy's cKDTree instead, asking for
more neighbors until enough of them are alive.

A subtree is skipped when the distance from the query to its bounding box
exceeds (current k-th candidate distance) / (1 + eps).  If the i-th true
neighbor was skipped, every reported point is within (1 + eps) of it, which
gives the per-rank guarantee d(q, p_i) <= (1 + eps) d(q, p*_i).
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .geom import DimensionError, LpMetric, as_point, as_points


class IndexError_(KeyError):
    """Unknown or already-deleted id."""


class KannIndex:
    def __init__(self, metric: LpMetric, epsilon: float = 0.0, leaf_size: int = 48):
        if epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        self.metric = metric
        self.epsilon = float(epsilon)
        self.leaf_size = leaf_size
        self._cap = 16
        self._coords = np.zeros((self._cap, metric.dim))
        self._alive = np.zeros(self._cap, dtype=bool)
        self._ids = np.full(self._cap, -1, dtype=np.int64)
        self._slot = {}  # id -> slot
        self._n = 0  # slots used
        self._n_alive = 0
        self._in_tree = np.zeros(self._cap, dtype=bool)
        self._pending = []
        self._tree_size = 0
        self._tree_dead = 0
        self._next_id = 0
        self.rebuilds = 0
        self._build_tree()

    # -- construction ------------------------------------------------------

    @classmethod
    def build(cls, points, metric: LpMetric, epsilon: float = 0.0, **kw) -> "KannIndex":
        pts = as_points(points, metric.dim) if len(points) else np.zeros((0, metric.dim))
        idx = cls(metric, epsilon, **kw)
        n = len(pts)
        idx._grow(n)
        idx._coords[:n] = pts
        idx._alive[:n] = True
        idx._ids[:n] = np.arange(n)
        idx._slot = {i: i for i in range(n)}
        idx._n = idx._n_alive = idx._next_id = n
        idx._build_tree()
        return idx

    def _grow(self, need):
        if need <= self._cap:
            return
        cap = max(need, 2 * self._cap)
        for name in ("_coords", "_alive", "_ids", "_in_tree"):
            old = getattr(self, name)
            shape = (cap,) + old.shape[1:]
            new = np.zeros(shape, dtype=old.dtype) if name != "_ids" else np.full(shape, -1, dtype=old.dtype)
            new[: self._cap] = old
            setattr(self, name, new)
        self._cap = cap

    def _build_tree(self):
        slots = np.flatnonzero(self._alive[: self._n])
        self._in_tree[:] = False
        self._in_tree[slots] = True
        self._pending = []
        self._tree_size = len(slots)
        self._tree_dead = 0
        lo, hi, left, right, start, end = [], [], [], [], [], []
        perm = slots.copy()
        coords = self._coords

        def rec(s, e):
            node = len(lo)
            pts = coords[perm[s:e]]
            if e > s:
                lo.append(pts.min(axis=0))
                hi.append(pts.max(axis=0))
            else:
                lo.append(np.full(self.metric.dim, np.inf))
                hi.append(np.full(self.metric.dim, -np.inf))
            left.append(-1)
            right.append(-1)
            start.append(s)
            end.append(e)
            if e - s > self.leaf_size:
                axis = int(np.argmax(hi[node] - lo[node]))
                mid = (s + e) // 2
                order = np.argpartition(pts[:, axis], mid - s)
                perm[s:e] = perm[s:e][order]
                left[node] = rec(s, mid)
                right[node] = rec(mid, e)
            return node

        self._kd = None
        if self.epsilon == 0 and len(slots):
            self._kd = cKDTree(coords[slots])
            self._kd_slots = slots
            rec(0, 0)
        else:
            rec(0, len(perm))
        self._perm = perm
        self._lo = np.array(lo)
        self._hi = np.array(hi)
        self._left = left
        self._right = right
        self._start = start
        self._end = end
        self.rebuilds += 1

    # -- updates -------------------------------------------------------------

    def insert(self, point, id: int | None = None) -> int:
        """Insert a point and return its id.

        Re-inserting a deleted id with the same coordinates revives it in place.
        """
        p = as_point(point, self.metric.dim)
        if id is not None and id in self._slot:
            slot = self._slot[id]
            if self._alive[slot]:
                raise ValueError(f"id {id} is already alive")
            if np.array_equal(self._coords[slot], p):
                self._alive[slot] = True
                self._n_alive += 1
                if self._in_tree[slot]:
                    self._tree_dead -= 1
                else:
                    self._pending.append(slot)
                return id
            self._ids[slot] = -1  # coordinates changed: retire the old slot
        if id is None:
            id = self._next_id
        self._next_id = max(self._next_id, id + 1)
        self._grow(self._n + 1)
        slot = self._n
        self._n += 1
        self._coords[slot] = p
        self._alive[slot] = True
        self._ids[slot] = id
        self._slot[id] = slot
        self._n_alive += 1
        self._pending.append(slot)
        return id

    def delete(self, id: int):
        slot = self._slot.get(id)
        if slot is None or not self._alive[slot]:
            raise IndexError_(f"id {id} is not alive in the index")
        self._alive[slot] = False
        self._n_alive -= 1
        if self._in_tree[slot]:
            self._tree_dead += 1
            if self._tree_dead * 2 > self._tree_size:
                self._build_tree()
        else:
            self._pending.remove(slot)

    # -- queries -------------------------------------------------------------

    def __len__(self):
        return self._n_alive

    def __contains__(self, id):
        slot = self._slot.get(id)
        return slot is not None and bool(self._alive[slot])

    def point(self, id) -> np.ndarray:
        return self._coords[self._slot[id]]

    def alive_ids(self) -> np.ndarray:
        return np.sort(self._ids[: self._n][self._alive[: self._n]])

    def _merge(self, cd, ci, slots, q, k):
        slots = slots[self._alive[slots]]
        if len(slots) == 0:
            return cd, ci
        d = self.metric.to_many(q, self._coords[slots])
        ids = self._ids[slots]
        if len(cd):
            d = np.concatenate([cd, d])
            ids = np.concatenate([ci, ids])
        order = np.lexsort((ids, d))[:k]
        return d[order], ids[order]

    def query_arrays(self, q, k: int):
        """Ids and distances of the (1+eps)-approximate k nearest alive points,
        sorted by (distance, id)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        q = as_point(q)
        if q.shape[0] != self.metric.dim:
            raise DimensionError(f"query has {q.shape[0]} coordinates, expected {self.metric.dim}")
        cd = np.zeros(0)
        ci = np.zeros(0, dtype=np.int64)
        if self._n_alive == 0:
            return ci, cd
        if len(self._pending) > max(self.leaf_size, self._tree_size // 2):
            # deferred so that bulk inserts cost one rebuild
            self._build_tree()
        if self._pending:
            cd, ci = self._merge(cd, ci, np.array(self._pending, dtype=np.int64), q, k)
        if self._tree_size - self._tree_dead > 0 and self._kd is not None:
            cd, ci = self._exact_tree(cd, ci, q, k)
        elif self._tree_size - self._tree_dead > 0:
            shrink = 1.0 + self.epsilon
            lo, hi, norm = self._lo, self._hi, self.metric.norm
            stack = [(0.0, 0)]
            while stack:
                bd, node = stack.pop()
                if len(cd) == k and bd > cd[-1] / shrink:
                    continue
                l = self._left[node]
                if l < 0:
                    s, e = self._start[node], self._end[node]
                    cd, ci = self._merge(cd, ci, self._perm[s:e], q, k)
                    continue
                r = self._right[node]
                bl = float(norm(np.maximum(0.0, np.maximum(lo[l] - q, q - hi[l]))))
                br = float(norm(np.maximum(0.0, np.maximum(lo[r] - q, q - hi[r]))))
                if bl <= br:
                    stack.append((br, r))
                    stack.append((bl, l))
                else:
                    stack.append((bl, l))
                    stack.append((br, r))
        return ci, cd

    def _exact_tree(self, cd, ci, q, k):
        kk = min(2 * k, self._tree_size)
        while True:
            far, pos = self._kd.query(q, kk, p=self.metric.p)
            slots = self._kd_slots[np.atleast_1d(pos)]
            live = np.flatnonzero(self._alive[slots])
            if kk == self._tree_size:
                break
            # enough alive points, the k-th strictly inside the searched radius
            far = np.atleast_1d(far)
            if len(live) >= k and far[-1] > far[live[k - 1]] * (1 + 1e-12):
                break
            kk = min(4 * kk, self._tree_size)
        return self._merge(cd, ci, slots[live], q, k)

    def query(self, q, k: int) -> list[tuple[int, float]]:
        ids, d = self.query_arrays(q, k)
        return [(int(i), float(x)) for i, x in zip(ids, d)]


def build(points, metric: LpMetric, epsilon: float = 0.0, **kw) -> KannIndex:
    return KannIndex.build(points, metric, epsilon, **kw)
