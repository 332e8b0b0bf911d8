"""Server cover on a line with cost equal to the sum of radii.

``cover_nnc`` is a linear-time 2-approximation that runs a nearest-neighbor
chain over clusters.  A client cluster is a run of still uncovered clients,
kept as its extreme positions.  A server cluster keeps the interval it covers
and the two servers whose disks reach furthest left and right.  Adjacent
clusters always merge; a client cluster merging into a server cluster is
covered by whichever extreme server needs the smaller growth.  A growth can
push the server's disk over clusters on the other side, which then cascade.

The module also has an exact dynamic program, the classic closest-growth
greedy, a naive mutual-nearest-neighbor matcher, search helpers for bad
instances, and the planar greedy lower-bound construction.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

CLIENT, SERVER = 0, 1
AUDIT_TOL = 1e-9


class InfeasibleError(ValueError):
    """Clients are present but there is no server."""


class CoverInvariantError(AssertionError):
    pass


@dataclass(frozen=True)
class CoverInstance:
    clients: tuple
    servers: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in self.clients)
        s = tuple(float(x) for x in self.servers)
        for name, v in (("clients", c), ("servers", s)):
            if any(not math.isfinite(x) for x in v):
                raise ValueError(f"{name} must be finite")
            if any(b < a for a, b in zip(v, v[1:])):
                raise ValueError(f"{name} must be sorted ascending")
        object.__setattr__(self, "clients", c)
        object.__setattr__(self, "servers", s)

    @property
    def n(self):
        return len(self.clients)

    @property
    def m(self):
        return len(self.servers)


@dataclass
class CoverSolution:
    radii: list
    cost: float

    def uncovered(self, inst: CoverInstance):
        """Ids of clients outside every (closed) disk."""
        if not inst.clients:
            return []
        c = np.asarray(inst.clients)[:, None]
        s = np.asarray(inst.servers)[None, :]
        r = np.asarray(self.radii, dtype=float)[None, :]
        if s.shape[1] == 0:
            return list(range(len(inst.clients)))
        return np.flatnonzero(~(np.abs(c - s) <= r).any(axis=1)).tolist()

    def is_valid(self, inst: CoverInstance):
        return len(self.radii) == inst.m and min(self.radii, default=0) >= 0 and not self.uncovered(inst)


@dataclass
class CoverStats:
    iterations: int = 0
    merges: int = 0
    pushes: int = 0
    cascade_merges: int = 0
    intervals: list = field(default_factory=list)  # (client id, lo, hi), audit mode only


def _solution(radii):
    radii = [float(r) for r in radii]
    return CoverSolution(radii, float(sum(radii)))


def _require_servers(inst):
    if inst.n and not inst.m:
        raise InfeasibleError("clients present but no servers")


# --------------------------------------------------------------------------
# nearest-neighbor chain


class _Clusters:
    """Doubly linked list of clusters stored in flat lists (slot = element rank)."""

    def __init__(self, inst: CoverInstance, audit: bool):
        elems = sorted([(x, CLIENT, i) for i, x in enumerate(inst.clients)]
                       + [(x, SERVER, j) for j, x in enumerate(inst.servers)])
        k = len(elems)
        self.cpos = inst.clients
        self.spos = inst.servers
        self.rad = [0.0] * inst.m
        self.kind = [e[1] for e in elems]
        self.lo = [e[0] for e in elems]
        self.hi = [e[0] for e in elems]
        # client clusters: first/last client id; server clusters: s_l/s_r
        self.a = [e[2] for e in elems]
        self.b = [e[2] for e in elems]
        self.prev = list(range(-1, k - 1))
        self.next = list(range(1, k + 1))
        if k:
            self.next[-1] = -1
        self.count = k
        self.audit = audit
        self.intervals = []

    def _unlink(self, y):
        p, q = self.prev[y], self.next[y]
        if p != -1:
            self.next[p] = q
        if q != -1:
            self.prev[q] = p
        self.count -= 1

    def merge(self, x, y):
        """Merge adjacent clusters x (left) and y (right) into slot x.

        Returns (server, side) when a server disk grew to cover a client
        cluster lying on ``side`` of it (-1 left, +1 right), else None.
        """
        kx, ky = self.kind[x], self.kind[y]
        grown = None
        if kx == CLIENT and ky == CLIENT:
            self.hi[x] = self.hi[y]
            self.b[x] = self.b[y]
        elif kx == SERVER and ky == SERVER:
            if self.lo[y] < self.lo[x]:
                self.lo[x], self.a[x] = self.lo[y], self.a[y]
            if self.hi[y] >= self.hi[x]:
                self.hi[x], self.b[x] = self.hi[y], self.b[y]
        else:
            c, s = (x, y) if kx == CLIENT else (y, x)
            grown = self._cover(c, s)
            self.kind[x] = SERVER
            self.lo[x], self.hi[x] = self.lo[s], self.hi[s]
            self.a[x], self.b[x] = self.a[s], self.b[s]
        self._unlink(y)
        return grown

    def _cover(self, c, s):
        p, q = self.lo[c], self.hi[c]
        spos, rad = self.spos, self.rad
        best = None
        for sid in sorted({self.a[s], self.b[s]}):
            x = spos[sid]
            g = max(0.0, max(abs(x - p), abs(x - q)) - rad[sid])
            if best is None or g < best[0]:
                best = (g, sid)
        g, sid = best
        if g <= 0:
            return None
        x = spos[sid]
        side = 1 if p > x else -1
        old = rad[sid]
        rad[sid] = max(abs(x - p), abs(x - q))
        if self.audit:
            self._record(c, x, old, side)
        left, right = x - rad[sid], x + rad[sid]
        if left < self.lo[s]:
            self.lo[s], self.a[s] = left, sid
        if right > self.hi[s]:
            self.hi[s], self.b[s] = right, sid
        return sid, side

    def _record(self, c, x, old, side):
        ids = range(self.a[c], self.b[c] + 1)
        if side < 0:
            ids = reversed(ids)
        edge = x + side * old
        for i in ids:
            pos = self.cpos[i]
            if (pos - edge) * side > 0:
                lo, hi = sorted((edge, pos))
                self.intervals.append((i, lo, hi))
                edge = pos

    def gap(self, x, y):
        return self.lo[y] - self.hi[x]


def cover_nnc(inst: CoverInstance, check=False, audit=False, stats: CoverStats | None = None) -> CoverSolution:
    """2-approximate server cover by the nearest-neighbor chain.

    ``check`` asserts the chain and disjointness invariants at every loop
    head.  ``audit`` records the coverage interval charged to each client
    and verifies they are disjoint and add up to the cost.
    """
    _require_servers(inst)
    st = stats if stats is not None else CoverStats()
    if not inst.n:
        return _solution([0.0] * inst.m)
    cl = _Clusters(inst, audit or check)
    nxt, prv = cl.next, cl.prev
    chain = [0]
    st.pushes += 1
    while cl.count > 1:
        st.iterations += 1
        if check:
            _check_chain(cl, chain)
        a = chain[-1]
        left, right = prv[a], nxt[a]
        dl = cl.lo[a] - cl.hi[left] if left != -1 else math.inf
        dr = cl.lo[right] - cl.hi[a] if right != -1 else math.inf
        if dr < dl:
            chain.append(right)
            st.pushes += 1
            continue
        chain.pop()
        chain.pop()
        grown = cl.merge(left, a)
        st.merges += 1
        chain.append(left)
        if grown is not None:
            st.cascade_merges += _cascade(cl, chain, grown[1])
    st.merges += st.cascade_merges
    sol = _solution(cl.rad)
    if check and not sol.is_valid(inst):
        raise CoverInvariantError(f"clients {sol.uncovered(inst)[:5]} left uncovered")
    if audit or check:
        st.intervals = cl.intervals
        audit_intervals(cl.intervals, sol.cost)
    return sol


def _cascade(cl, chain, side):
    """Absorb clusters overlapping the top cluster, starting opposite ``side``."""
    merges = 0
    direction = -side
    while True:
        c = chain[-1]
        flipped = False
        while True:
            if direction < 0:
                e = cl.prev[c]
                if e == -1 or cl.hi[e] < cl.lo[c]:
                    break
                if chain[-2] != e:
                    raise CoverInvariantError("left neighbor of the top is not in the chain")
                chain.pop()
                grown = cl.merge(e, c)
                c = e
                chain[-1] = c
            else:
                e = cl.next[c]
                if e == -1 or cl.lo[e] > cl.hi[c]:
                    break
                grown = cl.merge(c, e)
            merges += 1
            if grown is not None:
                direction = -grown[1]
                flipped = True
                break
        if not flipped:
            return merges


def _check_chain(cl, chain):
    if cl.prev[chain[0]] != -1:
        raise CoverInvariantError("chain does not start at the leftmost cluster")
    for x, y in zip(chain, chain[1:]):
        if cl.next[x] != y:
            raise CoverInvariantError("chain is not a prefix of the cluster list")
    gaps = [cl.gap(x, y) for x, y in zip(chain, chain[1:])]
    if any(not g2 < g1 for g1, g2 in zip(gaps, gaps[1:])):
        raise CoverInvariantError(f"chain gaps do not strictly decrease: {gaps}")
    x = chain[0]
    while x != -1:
        if cl.kind[x] == SERVER:
            s_l, s_r = cl.a[x], cl.b[x]
            if not cl.lo[x] <= cl.spos[s_l] <= cl.spos[s_r] <= cl.hi[x]:
                raise CoverInvariantError("server cluster extremes out of order")
        y = cl.next[x]
        if y != -1 and not cl.hi[x] <= cl.lo[y]:
            raise CoverInvariantError("clusters overlap at a loop head")
        x = y


def audit_intervals(intervals, cost, tol=AUDIT_TOL):
    """Coverage intervals must be pairwise disjoint and sum to ``cost``."""
    iv = sorted((lo, hi) for _, lo, hi in intervals)
    for (a0, a1), (b0, b1) in zip(iv, iv[1:]):
        if b0 < a1 - tol:
            raise CoverInvariantError(f"coverage intervals ({a0}, {a1}) and ({b0}, {b1}) overlap")
    total = math.fsum(hi - lo for lo, hi in iv)
    if abs(total - cost) > tol * max(1.0, abs(cost)):
        raise CoverInvariantError(f"coverage intervals sum to {total}, cost is {cost}")
    return total


# --------------------------------------------------------------------------
# exact solutions


def cover_exact(inst: CoverInstance) -> CoverSolution:
    """Optimal cover by a DP over client prefixes and server prefixes where
    each server covers one contiguous block of clients, blocks in order."""
    _require_servers(inst)
    n, m = inst.n, inst.m
    if not n:
        return _solution([0.0] * m)
    c = np.asarray(inst.clients)
    s = np.asarray(inst.servers)
    dp = np.full((n + 1, m + 1), np.inf)
    dp[0, :] = 0.0
    choice = np.full((n + 1, m + 1), -1, dtype=np.int64)  # -1: server j unused
    for j in range(1, m + 1):
        x = s[j - 1]
        for i in range(1, n + 1):
            # block c[i'..i-1] for i' in 0..i-1
            blk = np.maximum(np.abs(x - c[:i]), abs(x - c[i - 1]))
            tot = dp[:i, j - 1] + blk
            k = int(np.argmin(tot))
            if tot[k] < dp[i, j - 1]:
                dp[i, j], choice[i, j] = tot[k], k
            else:
                dp[i, j] = dp[i, j - 1]
    radii = [0.0] * m
    i = n
    for j in range(m, 0, -1):
        k = choice[i, j]
        if k >= 0:
            radii[j - 1] = float(max(abs(s[j - 1] - c[k]), abs(s[j - 1] - c[i - 1])))
            i = k
    return _solution(radii)


def cover_exhaustive(inst: CoverInstance) -> CoverSolution:
    """Minimum over every client-to-server assignment (tiny instances only)."""
    _require_servers(inst)
    n, m = inst.n, inst.m
    if not n:
        return _solution([0.0] * m)
    if m ** n > 2_000_000:
        raise ValueError(f"{m}^{n} assignments is too many for exhaustive search")
    d = np.abs(np.subtract.outer(np.asarray(inst.clients), np.asarray(inst.servers)))
    best = None
    for assign in itertools.product(range(m), repeat=n):
        r = [0.0] * m
        for i, j in enumerate(assign):
            r[j] = max(r[j], d[i, j])
        cost = sum(r)
        if best is None or cost < best[0]:
            best = (cost, r)
    return _solution(best[1])


# --------------------------------------------------------------------------
# greedy baselines


def _growth(inst, radii, covered):
    c = np.asarray(inst.clients)[:, None]
    s = np.asarray(inst.servers)[None, :]
    g = np.maximum(np.abs(c - s) - np.asarray(radii)[None, :], 0.0)
    g[covered] = np.inf
    return g


def _grow(inst, radii, covered, i, j):
    radii[j] = max(radii[j], abs(inst.clients[i] - inst.servers[j]))
    c = np.asarray(inst.clients)
    covered |= np.abs(c - inst.servers[j]) <= radii[j]


def cover_greedy_alt(inst: CoverInstance) -> CoverSolution:
    """Repeatedly make the smallest disk growth that covers a new client.
    Ties go to the smaller client id, then the smaller server id."""
    _require_servers(inst)
    radii = [0.0] * inst.m
    covered = np.zeros(inst.n, dtype=bool)
    while not covered.all():
        g = _growth(inst, radii, covered)
        i, j = np.unravel_index(np.argmin(g), g.shape)
        _grow(inst, radii, covered, int(i), int(j))
    return _solution(radii)


def mutual_pairs(inst: CoverInstance, radii, covered):
    """Uncovered (client, server) pairs whose growth is the smallest among all
    pairs involving that client and all pairs involving that server."""
    g = _growth(inst, radii, covered)
    row = g.min(axis=1, keepdims=True)
    col = g.min(axis=0, keepdims=True)
    hit = np.isfinite(g) & (g == row) & (g == col)
    return [(int(i), int(j)) for i, j in np.argwhere(hit)]


def cover_mnn(inst: CoverInstance, pick="largest", rng=None) -> CoverSolution:
    """Cover by repeatedly growing along some mutually nearest client-server
    pair.  ``pick`` chooses which one: 'largest' growth, 'smallest', or
    'random' (needs ``rng``)."""
    _require_servers(inst)
    radii = [0.0] * inst.m
    covered = np.zeros(inst.n, dtype=bool)
    while not covered.all():
        pairs = mutual_pairs(inst, radii, covered)
        if pick == "random":
            i, j = pairs[int(rng.integers(len(pairs)))]
        else:
            g = _growth(inst, radii, covered)
            sign = -1 if pick == "largest" else 1
            i, j = min(pairs, key=lambda p: (sign * g[p], p))
        _grow(inst, radii, covered, i, j)
    return _solution(radii)


# --------------------------------------------------------------------------
# instance generation and search


def random_cover_instance(n, m, rng, span=100.0, min_gap=1e-6):
    """Sorted clients and servers with pairwise distinct positions."""
    while True:
        pos = rng.uniform(0.0, span, size=n + m)
        srt = np.sort(pos)
        if n + m < 2 or np.min(np.diff(srt)) > min_gap:
            break
    kinds = rng.permutation(n + m) < n
    return CoverInstance(tuple(np.sort(pos[kinds])), tuple(np.sort(pos[~kinds])))


def _ratio(inst, opt_fn=cover_exact, alg=cover_nnc):
    opt = opt_fn(inst).cost
    if opt <= 0:
        return 1.0
    return alg(inst).cost / opt


class SearchResult(NamedTuple):
    instance: CoverInstance
    ratio: float
    trials: int


def _perturb(inst, rng, scale):
    c = np.asarray(inst.clients) + rng.normal(0, scale, inst.n)
    s = np.asarray(inst.servers) + rng.normal(0, scale, inst.m)
    return CoverInstance(tuple(np.sort(c)), tuple(np.sort(s)))


def tightness_search(seed=0, trials=100_000, stop_at=None, max_n=3, max_m=3):
    """Search small instances for a large cover_nnc / optimum ratio.

    Random restarts alternate with hill climbing under Gaussian moves of
    shrinking size.  Stops early once ``stop_at`` is reached.
    """
    rng = np.random.default_rng(seed)
    best = None
    t = 0
    while t < trials:
        inst = random_cover_instance(int(rng.integers(1, max_n + 1)), int(rng.integers(1, max_m + 1)), rng, span=10.0)
        r = _ratio(inst)
        t += 1
        scale = 1.0
        stall = 0
        while t < trials and stall < 60:
            cand = _perturb(inst, rng, scale)
            rc = _ratio(cand)
            t += 1
            if rc > r:
                inst, r, stall = cand, rc, 0
            else:
                stall += 1
                scale = max(scale * 0.9, 1e-6)
        if best is None or r > best.ratio:
            best = SearchResult(inst, r, t)
        if stop_at is not None and best.ratio >= stop_at:
            break
    return best


def tight_instance(delta=1e-3, eps=1e-3):
    """Two clients and two servers where the chain pays almost twice the optimum."""
    return CoverInstance((-1.0 - delta, 1.0), (0.0, 2.0 - eps))


def mnn_gap_search(seed=0, trials=20_000, max_n=4, max_m=3):
    """Find an instance where growing along mutual nearest pairs (largest
    first) costs more than twice the optimum.  Returns (instance, mnn cost,
    nnc cost, optimum) or None."""
    rng = np.random.default_rng(seed)
    best = None
    t = 0
    while t < trials:
        inst = random_cover_instance(int(rng.integers(2, max_n + 1)), int(rng.integers(2, max_m + 1)), rng, span=10.0)
        r = _ratio(inst, alg=cover_mnn)
        t += 1
        scale, stall = 1.0, 0
        while t < trials and stall < 40 and r <= 2:
            cand = _perturb(inst, rng, scale)
            rc = _ratio(cand, alg=cover_mnn)
            t += 1
            if rc > r:
                inst, r, stall = cand, rc, 0
            else:
                stall += 1
                scale = max(scale * 0.9, 1e-6)
        if r > 2 + 1e-9:
            opt = cover_exact(inst).cost
            return inst, cover_mnn(inst).cost, cover_nnc(inst).cost, opt
    return best


# --------------------------------------------------------------------------
# planar greedy lower bound


class Greedy15D(NamedTuple):
    greedy_cost: float
    opt_cost: float
    ratio: float


@dataclass
class PlanarGreedy:
    radii: np.ndarray
    order: list  # (client id, server id) per growth step


def instance_15d(m: int, shrink=1e-9):
    """Servers at (0,0)..(m-1,0), a column of clients above each one from
    height m down in steps of sqrt(m^2+1) - m (shrunk slightly so the
    neighbor column never ties)."""
    if m < 1:
        raise ValueError("m must be positive")
    d = math.sqrt(m * m + 1) - m - shrink
    heights = m - d * np.arange(int(m / d) + 1)
    heights = heights[heights > 0]
    servers = np.column_stack([np.arange(m, dtype=float), np.zeros(m)])
    xs, ys = np.meshgrid(np.arange(m, dtype=float), heights, indexing="ij")
    clients = np.column_stack([xs.ravel(), ys.ravel()])
    return servers, clients


def greedy_2d(servers, clients, tie_tol=1e-12) -> PlanarGreedy:
    """Smallest disk growth covering a new client, in the plane.

    Growths within ``tie_tol`` of the minimum tie; ties go to the lower
    client, then the smaller client id, then the smaller server id.
    """
    servers = np.asarray(servers, dtype=float)
    clients = np.asarray(clients, dtype=float)
    dist = np.hypot(clients[:, None, 0] - servers[None, :, 0], clients[:, None, 1] - servers[None, :, 1])
    radii = np.zeros(len(servers))
    covered = np.zeros(len(clients), dtype=bool)
    order = []
    while not covered.all():
        g = dist - radii[None, :]
        g[covered] = np.inf
        best = g.min(axis=1)
        near = np.flatnonzero(best <= best.min() + tie_tol)
        i = int(near[np.lexsort((near, clients[near, 1]))[0]])
        j = int(np.flatnonzero(g[i] <= best[i] + tie_tol)[0])
        radii[j] = max(radii[j], dist[i, j])
        covered |= dist[:, j] <= radii[j]
        order.append((i, j))
    return PlanarGreedy(radii, order)


def greedy_15d(m: int) -> Greedy15D:
    """Greedy cost on the column instance against the single-center bound."""
    servers, clients = instance_15d(m)
    res = greedy_2d(servers, clients)
    greedy = float(math.fsum(res.radii))
    opt = math.sqrt(5) * m / 2
    return Greedy15D(greedy, opt, greedy / opt)
