"""Soft nearest-neighbor (SNN) queries over points and over path fragments.

A soft query returns either the true nearest neighbor of q (a hard answer)
or a pair of stored points closer to each other than q is to its nearest
neighbor.  The three-way variant returns a triple that is pairwise closer.

The online threshold: with r1 the distance to the closest point the k-ANN
index returned, r1 / (1 + eps) is a lower bound on the true NN distance, so
any returned pair below it is a certified soft answer.  When no such pair
exists, the returned points scaled by that lower bound sit in a shell of
outer radius (1 + eps)**(k + 1), and validity of the parameters for that
shell forces the true NN to be among them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geom import LpMetric, as_points
from .kann import KannIndex
from .params import Arity, ValidParams, analytic_2d_l2, find_params


class EmptyStructureError(LookupError):
    pass


@dataclass(frozen=True)
class Hard:
    id: int
    distance: float


@dataclass(frozen=True)
class Soft:
    ids: tuple  # two ids (two-way) or three (three-way), ascending
    distance: float  # largest pairwise distance among ids


def default_params(metric: LpMetric, arity=Arity.TWO) -> ValidParams:
    arity = Arity(arity)
    if arity is Arity.TWO and metric.dim == 2 and metric.p == 2.0:
        return analytic_2d_l2()
    return find_params(metric, arity)


def _closest_pair_below(dm, ids, t):
    """Closest pair with distance < t, ties toward the smaller id pair."""
    iu, ju = np.nonzero(np.triu(dm < t, 1))
    if len(iu) == 0:
        return None
    a, b = ids[iu], ids[ju]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    w = np.lexsort((hi, lo, dm[iu, ju]))[0]
    return (int(lo[w]), int(hi[w])), float(dm[iu[w], ju[w]])


def _triangle_below(dm, ids, t):
    """A triple pairwise closer than t, found from the shortest qualifying edge."""
    close = dm < t
    np.fill_diagonal(close, False)
    # only points with two close neighbors can sit on a triangle
    keep = np.flatnonzero(close.sum(axis=1) >= 2)
    if len(keep) < 3:
        return None
    dm, ids, close = dm[np.ix_(keep, keep)], ids[keep], close[np.ix_(keep, keep)]
    iu, ju = np.nonzero(np.triu(close, 1))
    c = close.astype(float)
    # edges with a common close neighbor are exactly the edges of triangles
    common = (c @ c)[iu, ju] > 0
    if not common.any():
        return None
    iu, ju = iu[common], ju[common]
    e = np.lexsort((np.maximum(ids[iu], ids[ju]), np.minimum(ids[iu], ids[ju]), dm[iu, ju]))[0]
    i, j = iu[e], ju[e]
    both = np.flatnonzero(close[i] & close[j])
    c = both[np.argmin(ids[both])]
    tri = tuple(sorted(int(x) for x in (ids[i], ids[j], ids[c])))
    return tri, float(max(dm[i, j], dm[i, c], dm[j, c]))


class SnnIndex:
    """Dynamic SNN structure over identified points.

    With ``exact=True`` the inner index has no slack, so the threshold equals
    the true NN distance; this is sound for any k and is the fast mode.
    """

    def __init__(self, points, metric: LpMetric, params: ValidParams | None = None, arity=None, exact=False, **kw):
        if params is None:
            params = default_params(metric, arity or Arity.TWO)
        self.params = params
        self.arity = Arity(arity) if arity is not None else params.arity
        self.metric = metric
        self.k = params.k
        self.index_epsilon = 0.0 if exact else params.index_epsilon()
        self.inner = KannIndex.build(points, metric, self.index_epsilon, **kw)
        self.queries = 0

    def __len__(self):
        return len(self.inner)

    def insert(self, point, id=None):
        return self.inner.insert(point, id)

    def delete(self, id):
        self.inner.delete(id)

    def point(self, id):
        return self.inner.point(id)

    def query_raw(self, q):
        """The k-ANN ids and distances the answer is decided from."""
        return self.inner.query_arrays(q, self.k)

    def query(self, q):
        if len(self.inner) == 0:
            raise EmptyStructureError("SNN structure is empty")
        self.queries += 1
        ids, ds = self.inner.query_arrays(q, self.k)
        if len(ids) >= 2:
            t = ds[0] / (1.0 + self.index_epsilon)
            pts = self.inner._coords[[self.inner._slot[int(i)] for i in ids]]
            dm = self.metric.pairwise(pts)
            found = _closest_pair_below(dm, ids, t) if self.arity is Arity.TWO else _triangle_below(dm, ids, t)
            if found is not None:
                return Soft(*found)
        return Hard(int(ids[0]), float(ds[0]))


def snn_query(s: SnnIndex, q):
    return s.query(q)


def closest_pair(points, metric: LpMetric, params: ValidParams | None = None, exact=False):
    """Closest pair by querying every point against the rest.

    Returns ``(i, j, distance)`` with i < j; ties go to the smaller id pair.
    """
    pts = as_points(points, metric.dim)
    if len(pts) < 2:
        raise ValueError("closest pair needs at least two points")
    s = SnnIndex(pts, metric, params, arity=Arity.TWO, exact=exact)
    best = None
    for i in range(len(pts)):
        s.delete(i)
        ans = s.query(pts[i])
        s.insert(pts[i], i)
        if isinstance(ans, Hard):
            key = (ans.distance, min(i, ans.id), max(i, ans.id))
        else:
            key = (ans.distance, *ans.ids)
        if best is None or key < best:
            best = key
    return best[1], best[2], best[0]


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class PathFragment:
    id: int
    a: int  # endpoint point ids; a == b for a singleton
    b: int

    @property
    def endpoints(self):
        return (self.a,) if self.a == self.b else (self.a, self.b)


@dataclass(frozen=True)
class HardPath:
    path: int
    distance: float


@dataclass(frozen=True)
class SoftPaths:
    paths: tuple  # two distinct path ids, ascending
    distance: float


class PathSnnIndex:
    """Three-way SNN structure over the endpoints of a set of disjoint paths.

    Endpoint ids are the ids of the underlying points, so re-adding a path
    revives its endpoints in place.
    """

    def __init__(self, points, metric: LpMetric, params: ValidParams | None = None, exact=False, **kw):
        self.points = as_points(points, metric.dim)
        self.metric = metric
        self.snn = SnnIndex(np.zeros((0, metric.dim)), metric, params, arity=Arity.THREE, exact=exact, **kw)
        self.owner = {}  # endpoint id -> path id
        self.paths = {}  # path id -> PathFragment

    def __len__(self):
        return len(self.paths)

    @property
    def queries(self):
        return self.snn.queries

    def insert(self, path: PathFragment):
        if path.id in self.paths:
            raise ValueError(f"path {path.id} already present")
        for e in path.endpoints:
            if e in self.owner:
                raise ValueError(f"endpoint {e} already belongs to path {self.owner[e]}")
        for e in path.endpoints:
            self.snn.insert(self.points[e], e)
            self.owner[e] = path.id
        self.paths[path.id] = path

    def delete(self, path_id: int) -> PathFragment:
        path = self.paths.pop(path_id, None)
        if path is None:
            raise KeyError(f"unknown path {path_id}")
        for e in path.endpoints:
            self.snn.delete(e)
            del self.owner[e]
        return path

    def path_distance(self, p: PathFragment, r: PathFragment) -> float:
        ea, eb = list(p.endpoints), list(r.endpoints)
        d = self.metric.norm(self.points[ea][:, None, :] - self.points[eb][None, :, :])
        return float(d.min())

    def _closest_paths(self, endpoint_ids):
        pids = sorted({self.owner[e] for e in endpoint_ids})
        best = None
        for x, y in combinations(pids, 2):
            key = (self.path_distance(self.paths[x], self.paths[y]), x, y)
            if best is None or key < best:
                best = key
        return SoftPaths((best[1], best[2]), best[0])

    def query(self, q: PathFragment):
        """Answer for a path whose endpoints are not currently stored."""
        if not self.paths:
            raise EmptyStructureError("path SNN structure is empty")
        answers = [(self.points[e], self.snn.query(self.points[e])) for e in q.endpoints]
        hards = [(a.distance, self.owner[a.id]) for _, a in answers if isinstance(a, Hard)]
        softs = [a for _, a in answers if isinstance(a, Soft)]
        if not softs:
            d, pid = min(hards)
            return HardPath(pid, d)
        if not hards:
            return self._closest_paths([e for s in softs for e in s.ids])
        sp = self._closest_paths(softs[0].ids)
        d, pid = hards[0]
        if d < sp.distance:
            return HardPath(pid, d)
        return sp


def path_snn_query(ps: PathSnnIndex, q: PathFragment):
    return ps.query(q)
