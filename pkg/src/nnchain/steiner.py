"""Multi-fragment tours for Steiner TSP on weighted undirected graphs.

Nearest neighbors are found by a Dijkstra search from a fragment's endpoint
sites that stops at the first endpoint site of another fragment.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field


class DisconnectedError(ValueError):
    pass


@dataclass
class WeightedGraph:
    n: int
    edges: list  # (u, v, w)
    sites: list
    adj: list = field(init=False, repr=False)

    def __post_init__(self):
        self.edges = [(int(u), int(v), float(w)) for u, v, w in self.edges]
        self.sites = [int(s) for s in self.sites]
        self.adj = [[] for _ in range(self.n)]
        for u, v, w in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) has a node outside 0..{self.n - 1}")
            if not w > 0:
                raise ValueError(f"edge ({u}, {v}) has non-positive weight {w}")
            self.adj[u].append((v, w))
            self.adj[v].append((u, w))
        if not self.sites:
            raise ValueError("at least one site is required")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("sites must be distinct")
        if any(not 0 <= s < self.n for s in self.sites):
            raise ValueError("site outside the node range")


def dijkstra(g: WeightedGraph, sources, stop=None):
    """Distances (and predecessor, source) from a set of sources.

    ``stop(node)`` ends the search at the first settled node it accepts,
    which is then returned alongside the tables.
    """
    dist, pred, origin = {}, {}, {}
    heap = [(0.0, s, s, -1) for s in sorted(sources)]
    heapq.heapify(heap)
    while heap:
        d, u, src, p = heapq.heappop(heap)
        if u in dist:
            continue
        dist[u], pred[u], origin[u] = d, p, src
        if stop is not None and stop(u):
            return dist, pred, origin, u
        for v, w in g.adj[u]:
            if v not in dist:
                heapq.heappush(heap, (d + w, v, src, u))
    return dist, pred, origin, None


def _trace(pred, u):
    out = [u]
    while pred[out[-1]] != -1:
        out.append(pred[out[-1]])
    return out[::-1]


def shortest_path(g: WeightedGraph, a: int, b: int):
    dist, pred, _, hit = dijkstra(g, [a], stop=lambda u: u == b)
    if hit is None:
        raise DisconnectedError(f"nodes {a} and {b} are not connected")
    return dist[b], _trace(pred, b)


def site_nearest(g: WeightedGraph, site: int, alive) -> tuple | None:
    """Nearest alive site other than ``site``: (site, distance) or None."""
    alive = set(alive)
    dist, _, _, hit = dijkstra(g, [site], stop=lambda u: u != site and u in alive)
    return None if hit is None else (hit, dist[hit])


@dataclass
class SteinerTour:
    order: list  # site node ids in tour order
    length: float
    walk: list  # closed node walk; repeated vertices allowed
    edges: list  # site pairs (a, b), a < b, sorted
    iterations: int = 0
    searches: int = 0


def steiner_mftsp(g: WeightedGraph) -> SteinerTour:
    """Nearest-neighbor chain over site fragments with exact (hard) answers."""
    sites = g.sites
    if len(sites) == 1:
        return SteinerTour([sites[0]], 0.0, [sites[0]], [])
    ends = {i: (s, s) for i, s in enumerate(sites)}  # fragment id -> endpoint sites
    owner = {s: i for i, s in enumerate(sites)}  # endpoint site -> fragment id
    next_id = len(sites)
    edges = []
    chain = []
    iterations = searches = 0

    def nearest(fid):
        nonlocal searches
        searches += 1
        mine = set(ends[fid])
        dist, _, origin, hit = dijkstra(g, mine, stop=lambda u: u in owner and u not in mine)
        if hit is None:
            raise DisconnectedError("sites lie in different components")
        return owner[hit], dist[hit], origin[hit], hit

    while len(ends) > 1:
        iterations += 1
        if not chain:
            chain.append(min(ends))
            continue
        top = chain[-1]
        q, d, x, y = nearest(top)
        if len(chain) >= 2 and q != chain[-2]:
            # prefer the predecessor on ties
            pred = chain[-2]
            dp = _fragment_distance(g, ends[top], ends[pred])
            if dp <= d:
                q, d = pred, dp
        if len(chain) >= 2 and q == chain[-2]:
            a, b = chain.pop(), chain.pop()
            d, x, y = _closest_ends(g, ends[a], ends[b])
            edges.append((min(x, y), max(x, y)))
            ra = [e for e in ends[a] if e != x] or [x]
            rb = [e for e in ends[b] if e != y] or [y]
            for e in set(ends[a]) | set(ends[b]):
                del owner[e]
            del ends[a], ends[b]
            ends[next_id] = (ra[0], rb[0])
            for e in ends[next_id]:
                owner[e] = next_id
            next_id += 1
        else:
            chain.append(q)
    (a, b), = ends.values()
    edges.append((min(a, b), max(a, b)))
    edges.sort()
    order = _cycle_order(sites[0], edges)
    walk, length = [order[0]], 0.0
    for u, v in zip(order, order[1:] + order[:1]):
        d, path = shortest_path(g, u, v)
        length += d
        walk.extend(path[1:])
    return SteinerTour(order, length, walk, edges, iterations, searches)


def _fragment_distance(g, ea, eb):
    dist, _, _, hit = dijkstra(g, set(ea), stop=lambda u: u in eb)
    if hit is None:
        raise DisconnectedError("sites lie in different components")
    return dist[hit]


def _closest_ends(g, ea, eb):
    """(distance, x in ea, y in eb) minimizing distance, ties toward small ids."""
    best = None
    for x in sorted(set(ea)):
        dist, _, _, _ = dijkstra(g, [x])
        for y in sorted(set(eb)):
            if y not in dist:
                raise DisconnectedError("sites lie in different components")
            key = (dist[y], min(x, y), max(x, y), x, y)
            if best is None or key < best:
                best = key
    return best[0], best[3], best[4]


def _cycle_order(start, edges):
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    order, prev, cur = [start], None, start
    while True:
        nbrs = adj[cur]
        nxt = nbrs[0] if nbrs[0] != prev or len(nbrs) == 1 else nbrs[1]
        if nxt == start and len(order) == len(adj):
            return order
        prev, cur = cur, nxt
        order.append(cur)
