"""Multi-fragment TSP: soft nearest-neighbor chain, sorted-edge oracle, and
a randomized mutual-nearest-neighbor strategy.

All three accept an optional initial set of paths (lists of point ids that
partition the points); by default every point starts as its own path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geom import LpMetric, as_points
from .params import ValidParams
from .snn import HardPath, PathFragment, PathSnnIndex


@dataclass
class Tour:
    order: list
    length: float
    edges: list  # (i, j) with i < j, sorted; a 2-cycle lists its edge twice

    def edge_multiset(self):
        return sorted(self.edges)


@dataclass
class ChainStats:
    iterations: int = 0
    connections: int = 0
    pushes: int = 0
    pops: int = 0
    queries: int = 0


class InvariantError(AssertionError):
    pass


def _norm_edge(i, j):
    return (i, j) if i <= j else (j, i)


def _initial_paths(n, paths):
    if paths is None:
        return [[i] for i in range(n)]
    paths = [list(map(int, p)) for p in paths]
    seen = sorted(x for p in paths for x in p)
    if seen != list(range(n)) or any(len(p) == 0 for p in paths):
        raise ValueError("initial paths must partition the point ids")
    return paths


def _close_tour(n, edges, ends, dist):
    """Add the closing edge between the two ends of the final path."""
    if n >= 2:
        a, b = ends
        edges.append(_norm_edge(a, b))
    edges.sort()
    length = float(sum(dist(i, j) for i, j in edges))
    return Tour(_walk(n, edges), length, edges)


def _walk(n, edges):
    if n == 0:
        return []
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    order, prev, cur = [0], -1, 0
    while len(order) < n:
        nxt = adj[cur][0] if adj[cur][0] != prev or len(adj[cur]) == 1 else adj[cur][1]
        prev, cur = cur, nxt
        order.append(cur)
    return order


def _path_edges(paths):
    return [_norm_edge(p[i], p[i + 1]) for p in paths for i in range(len(p) - 1)]


def _best_link(ea, eb, dist):
    """Closest endpoint pair between two paths, ties toward smaller ids."""
    return min((dist(x, y), *_norm_edge(x, y), x, y) for x in ea for y in eb)


def _merged_ends(ea, eb, x, y):
    ra = [e for e in ea if e != x] or [x]
    rb = [e for e in eb if e != y] or [y]
    return ra[0], rb[0]


# --------------------------------------------------------------------------
# soft nearest-neighbor chain


def mftsp_snnc(points, metric: LpMetric, params: ValidParams | None = None, paths=None,
               exact=False, check=False, stats: ChainStats | None = None) -> Tour:
    """Multi-fragment tour by the soft nearest-neighbor chain.

    ``check`` asserts the chain invariants every iteration and verifies each
    connection against a brute-force mutual-nearest-neighbor test.
    """
    pts = as_points(points, metric.dim)
    n = len(pts)
    st = stats if stats is not None else ChainStats()
    init = _initial_paths(n, paths)
    edges = _path_edges(init)
    if n == 0:
        return Tour([], 0.0, [])

    def dist(i, j):
        return float(metric.norm(pts[i] - pts[j]))

    ps = PathSnnIndex(pts, metric, params, exact=exact)
    frag = {}
    for pid, p in enumerate(init):
        frag[pid] = PathFragment(pid, p[0], p[-1])
        ps.insert(frag[pid])
    next_id = len(init)
    chain = []  # entries: (pair tuple, witness distance); first entry is (u,)

    def query_from(pid):
        f = ps.delete(pid)
        ans = ps.query(f)
        ps.insert(f)
        if isinstance(ans, HardPath):
            pair = tuple(sorted((pid, ans.path)))
        else:
            pair = ans.paths
        return (ans.distance, *pair)

    while len(ps) > 1:
        st.iterations += 1
        if check:
            _check_chain(chain, ps)
        if not chain:
            chain.append(((min(ps.paths),), None))
            st.pushes += 1
            continue
        top, _ = chain[-1]
        best = min(query_from(pid) for pid in top)
        a = (best[1], best[2])
        if a == top:
            u, v = a
            fu, fv = ps.delete(u), ps.delete(v)
            if check:
                _check_mnn(fu, fv, ps, pts, metric)
            x, y = _best_link(fu.endpoints, fv.endpoints, dist)[3:]
            edges.append(_norm_edge(x, y))
            e1, e2 = _merged_ends(fu.endpoints, fv.endpoints, x, y)
            merged = PathFragment(next_id, e1, e2)
            if check and not set(merged.endpoints) <= set(fu.endpoints) | set(fv.endpoints):
                raise InvariantError("merged endpoints are not inherited from the parts")
            next_id += 1
            ps.insert(merged)
            chain.pop()
            chain.pop()
            st.pops += 2
            st.connections += 1
        else:
            chain.append((a, best[0]))
            st.pushes += 1
    st.queries = ps.queries
    last = next(iter(ps.paths.values()))
    return _close_tour(n, edges, (last.a, last.b), dist)


def _check_chain(chain, ps):
    alive = ps.paths
    ends = [e for f in alive.values() for e in f.endpoints]
    if len(ends) != len(set(ends)):
        raise InvariantError("stored paths share an endpoint")
    keys = [(w, *pair) for pair, w in chain[1:]]
    if any(not keys[i + 1] < keys[i] for i in range(len(keys) - 1)):
        raise InvariantError("chain witnesses do not strictly improve")
    where = {}
    for pos, (pair, _) in enumerate(chain):
        for pid in pair:
            if pid not in alive:
                raise InvariantError(f"chain references removed path {pid}")
            where.setdefault(pid, []).append(pos)
    for pid, at in where.items():
        if len(at) > 2 or (len(at) == 2 and at[1] != at[0] + 1):
            raise InvariantError(f"path {pid} appears at chain positions {at}")


def _check_mnn(fu, fv, ps, pts, metric):
    """Brute force: u and v are each other's nearest path among the rest."""
    others = list(ps.paths.values())
    for f, g in ((fu, fv), (fv, fu)):
        dg = ps.path_distance(f, g)
        for h in others:
            dh = ps.path_distance(f, h)
            if (dh, h.id) < (dg, g.id):
                raise InvariantError(f"paths {fu.id},{fv.id} connected but not mutual nearest neighbors")


# --------------------------------------------------------------------------
# oracle and randomized MNN strategy


def _distance_source(points, metric, dist_matrix):
    if dist_matrix is not None:
        dm = np.asarray(dist_matrix, dtype=float)
        if dm.ndim != 2 or dm.shape[0] != dm.shape[1] or not np.allclose(dm, dm.T):
            raise ValueError("distance matrix must be square and symmetric")
        return dm
    pts = as_points(points, metric.dim)
    return metric.pairwise(pts)


def mftsp_oracle(points=None, metric: LpMetric | None = None, paths=None, dist_matrix=None) -> Tour:
    """Sorted-edge greedy: scan all point pairs by (distance, ids) and keep
    every edge joining endpoints of two different fragments."""
    dm = _distance_source(points, metric, dist_matrix)
    n = dm.shape[0]
    init = _initial_paths(n, paths)
    edges = _path_edges(init)
    if n == 0:
        return Tour([], 0.0, [])
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
        parent[find(i)] = find(j)
    need = len(init) - 1
    iu, ju = np.triu_indices(n, 1)
    order = np.lexsort((ju, iu, dm[iu, ju]))
    for e in order:
        if need == 0:
            break
        i, j = int(iu[e]), int(ju[e])
        if deg[i] < 2 and deg[j] < 2 and find(i) != find(j):
            edges.append((i, j))
            deg[i] += 1
            deg[j] += 1
            parent[find(i)] = find(j)
            need -= 1
    ends = [i for i in range(n) if deg[i] < 2]
    ends = (ends[0], ends[-1]) if ends else (0, 0)
    return _close_tour(n, edges, ends, lambda i, j: float(dm[i, j]))


def mnn_strategy_random(points=None, metric: LpMetric | None = None, seed=0, paths=None, dist_matrix=None) -> Tour:
    """Connect a uniformly random mutual-nearest-neighbor pair of paths until
    one path is left."""
    dm = _distance_source(points, metric, dist_matrix)
    n = dm.shape[0]
    init = _initial_paths(n, paths)
    edges = _path_edges(init)
    if n == 0:
        return Tour([], 0.0, [])
    rng = np.random.default_rng(seed)
    m = len(init)
    ends = np.array([[p[0], p[-1]] for p in init])
    alive = np.ones(m, dtype=bool)
    pd = np.full((m, m), np.inf)
    for a in range(m):
        pd[a] = _row(dm, ends[a], ends)
    np.fill_diagonal(pd, np.inf)
    slots = np.arange(m)
    for _ in range(m - 1):
        nn = np.argmin(pd, axis=1)
        mutual = slots[alive & (nn[nn] == slots) & (slots < nn)]
        a = int(rng.choice(mutual))
        b = int(nn[a])
        ea, eb = sorted(set(ends[a].tolist())), sorted(set(ends[b].tolist()))
        x, y = _best_link(ea, eb, lambda i, j: float(dm[i, j]))[3:]
        edges.append(_norm_edge(x, y))
        ends[a] = _merged_ends(ea, eb, x, y)
        alive[b] = False
        pd[b, :] = np.inf
        pd[:, b] = np.inf
        row = _row(dm, ends[a], ends)
        row[~alive] = np.inf
        row[a] = np.inf
        pd[a, :] = row
        pd[:, a] = row
    last = ends[alive][0]
    return _close_tour(n, edges, (int(last[0]), int(last[1])), lambda i, j: float(dm[i, j]))


def _row(dm, e, ends):
    """Path distances from a path with endpoints e to every path in ends."""
    return np.minimum.reduce([dm[e[0], ends[:, 0]], dm[e[0], ends[:, 1]], dm[e[1], ends[:, 0]], dm[e[1], ends[:, 1]]])


def tour_length(order, points, metric: LpMetric) -> float:
    pts = as_points(points, metric.dim)
    if len(order) < 2:
        return 0.0
    cyc = pts[list(order) + [order[0]]]
    return float(metric.norm(np.diff(cyc, axis=0)).sum())
