"""Motorcycle graphs by the nearest-neighbor chain over a curtain store.

A motorcycle starting at s with velocity v occupies s + t v at time t.  Its
trace is a wall from the time each point is passed.  In space-time, the
trace is a vertical curtain bounded below by the ray; a crashed motorcycle's
curtain is clipped at its crash time.

Undetermined motorcycles keep unclipped curtains.  The nearest neighbor of
an undetermined m is the curtain m would hit first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-9


class DegenerateInputError(ValueError):
    pass


@dataclass(frozen=True)
class Motorcycle:
    id: int
    start: tuple
    dir: tuple  # unit vector
    speed: float

    def __post_init__(self):
        d = np.asarray(self.dir, dtype=float)
        nrm = float(np.hypot(*d))
        if nrm == 0:
            raise ValueError("direction must be nonzero")
        object.__setattr__(self, "start", tuple(float(x) for x in self.start))
        object.__setattr__(self, "dir", tuple(float(x) for x in d / nrm))
        if not self.speed > 0:
            raise ValueError("speed must be positive")

    @property
    def velocity(self):
        return np.asarray(self.dir) * self.speed


@dataclass(frozen=True)
class Escaped:
    pass


@dataclass(frozen=True)
class Crashed:
    into: int
    point: tuple
    time: float


@dataclass(frozen=True)
class Hit:
    id: int
    point: tuple
    time: float  # when the querying motorcycle arrives
    passed: float  # when motorcycle ``id`` passed the same point


def _arrays(mcs):
    ids = [m.id for m in mcs]
    if ids != list(range(len(mcs))):
        raise ValueError("motorcycle ids must be 0..n-1 in order")
    s = np.array([m.start for m in mcs], dtype=float).reshape(-1, 2)
    v = np.array([m.velocity for m in mcs], dtype=float).reshape(-1, 2)
    if len({m.start for m in mcs}) != len(mcs):
        raise ValueError("motorcycles must have distinct starts")
    return s, v


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


class CurtainStore:
    """Linear-scan ray shooting against all curtains."""

    def __init__(self, motorcycles):
        self.start, self.vel = _arrays(motorcycles)
        self.clip_time = np.full(len(motorcycles), np.inf)
        self.queries = 0
        self.clips = 0

    def clip(self, i: int, t: float):
        self.clip_time[i] = t
        self.clips += 1

    def nearest(self, m: int) -> Hit | None:
        """First curtain hit by m's unclipped ray, or None if m escapes."""
        self.queries += 1
        sm, vm = self.start[m], self.vel[m]
        w = self.start - sm
        den = _cross(vm, self.vel)
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = _cross(w, self.vel) / den
            sig = _cross(w, vm) / den
        par = np.abs(den) <= 1e-14 * np.hypot(*vm) * np.hypot(self.vel[:, 0], self.vel[:, 1])
        par[m] = True
        if np.any(par & (np.abs(_cross(w, vm)) <= 1e-12) & (np.arange(len(w)) != m)):
            raise DegenerateInputError(f"motorcycle {m} shares its line with another motorcycle")
        tau[par] = np.inf
        sig[par] = np.inf
        reach = (tau > TOL) & (sig >= -TOL) & (sig <= self.clip_time + TOL)
        hit = reach & (sig < tau - TOL) & (sig <= self.clip_time - TOL)
        with np.errstate(invalid="ignore"):
            border = reach & ((np.abs(sig - tau) <= TOL) | ((np.abs(sig - self.clip_time) <= TOL) & (sig < tau)))
        cand = np.where(hit, tau, np.inf)
        j = int(np.argmin(cand))
        best = cand[j]
        # inputs whose answer hinges on a near-tie are rejected
        if np.any(border & (tau <= best + TOL)):
            raise DegenerateInputError(f"simultaneous arrival involving motorcycle {m}")
        if not hit.any():
            return None
        if np.count_nonzero(hit & (tau <= best + TOL)) > 1:
            raise DegenerateInputError(f"ambiguous crash for motorcycle {m} near time {best:.12g}")
        p = sm + best * vm
        return Hit(j, (float(p[0]), float(p[1])), float(best), float(sig[j]))


@dataclass
class MotorcycleStats:
    iterations: int = 0
    queries: int = 0
    clips: int = 0
    cycles: int = 0


def mc_nearest(store: CurtainStore, m: int) -> Hit | None:
    return store.nearest(m)


def motorcycle_graph(motorcycles, check=False, stats: MotorcycleStats | None = None):
    """Final status of every motorcycle, by the nearest-neighbor chain."""
    n = len(motorcycles)
    st = stats if stats is not None else MotorcycleStats()
    store = CurtainStore(motorcycles)
    status = [None] * n
    chain = []  # motorcycle ids
    hits = []  # hits[i]: nearest of chain[i], set when chain[i+1] was pushed
    in_chain = set()
    pending = list(range(n - 1, -1, -1))
    while True:
        if not chain:
            while pending and status[pending[-1]] is not None:
                pending.pop()
            if not pending:
                break
            chain.append(pending[-1])
            in_chain.add(pending[-1])
        st.iterations += 1
        if check:
            _check_chain(store, chain, hits)
        m = chain[-1]
        h = store.nearest(m)
        if h is None:  # (a)
            status[m] = Escaped()
            chain.pop()
            in_chain.discard(m)
            if hits:
                hits.pop()
        elif status[h.id] is not None:  # (b)
            status[m] = Crashed(h.id, h.point, h.time)
            store.clip(m, h.time)
            _pop(chain, hits, in_chain, 2)
        elif h.id in in_chain:  # (c)
            st.cycles += 1
            hits.append(h)
            at = chain.index(h.id)
            done = _resolve_cycle(chain[at:], hits[at:])
            for i in sorted(done):
                hi = hits[at + i]
                status[chain[at + i]] = Crashed(hi.id, hi.point, hi.time)
                store.clip(chain[at + i], hi.time)
            _pop(chain, hits, in_chain, len(chain) - (at + min(done)) + 1)
        else:  # (d)
            hits.append(h)
            chain.append(h.id)
            in_chain.add(h.id)
    st.queries = store.queries
    st.clips = store.clips
    return status


def _resolve_cycle(members, hits):
    """Positions (within the cycle) of members whose crash is certain.

    The earliest hit in the cycle is certain: the motorcycle it hits cannot
    crash before that time, so it passed the hit point.  Walking backwards,
    a member's hit is certain while the next member, now determined, passes
    the hit point before its own crash.  Usually the whole cycle qualifies.
    """
    k = len(members)
    first = min(range(k), key=lambda i: hits[i].time)
    done = [first]
    i = first
    while len(done) < k:
        prev = (i - 1) % k
        gap = hits[prev].passed - hits[i].time
        if abs(gap) <= TOL:
            raise DegenerateInputError(f"motorcycle {members[prev]} reaches a crash point simultaneously")
        if gap > 0:
            break
        done.append(prev)
        i = prev
    return done


def _pop(chain, hits, in_chain, k):
    for _ in range(min(k, len(chain))):
        in_chain.discard(chain.pop())
    del hits[max(len(chain) - 1, 0):]


def _check_chain(store, chain, hits):
    if len(hits) != max(len(chain) - 1, 0):
        raise AssertionError("chain and stored hits are out of step")
    for i in range(len(chain) - 1):
        h = store.nearest(chain[i])
        store.queries -= 1
        if h is None or h.id != chain[i + 1]:
            raise AssertionError(f"chain link {chain[i]} -> {chain[i + 1]} is stale")


# --------------------------------------------------------------------------
# chronological oracle


def mc_oracle(motorcycles):
    """Commit the globally earliest pending crash, recompute, repeat."""
    n = len(motorcycles)
    start = np.array([m.start for m in motorcycles], dtype=float).reshape(-1, 2)
    vel = np.array([np.asarray(m.dir) * m.speed for m in motorcycles], dtype=float).reshape(-1, 2)
    # arrival of i (row) and j (col) at the crossing of their lines
    ti = np.full((n, n), np.inf)
    tj = np.full((n, n), np.inf)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a = np.column_stack([vel[i], -vel[j]])
            if abs(np.linalg.det(a)) < 1e-14 * np.linalg.norm(vel[i]) * np.linalg.norm(vel[j]):
                continue
            ti[i, j], tj[i, j] = np.linalg.solve(a, start[j] - start[i])
    end = np.full(n, np.inf)
    status = [None] * n
    while True:
        und = [i for i in range(n) if status[i] is None]
        if not und:
            break
        best = None
        for i in und:
            live = (ti[i] > TOL) & (tj[i] >= -TOL) & (tj[i] <= end + TOL)
            ok = live & (tj[i] < ti[i] - TOL) & (tj[i] <= end - TOL)
            first = np.min(np.where(ok, ti[i], np.inf))
            with np.errstate(invalid="ignore"):
                near = live & ((np.abs(tj[i] - ti[i]) <= TOL) | ((np.abs(tj[i] - end) <= TOL) & (tj[i] < ti[i])))
            if np.any(near & (ti[i] <= first + TOL)):
                raise DegenerateInputError(f"simultaneous arrival involving motorcycle {i}")
            if ok.any():
                j = int(np.argmin(np.where(ok, ti[i], np.inf)))
                if best is None or ti[i, j] < best[0]:
                    best = (ti[i, j], i, j)
        if best is None:
            for i in und:
                status[i] = Escaped()
            break
        t, i, j = best
        p = start[i] + t * vel[i]
        status[i] = Crashed(j, (float(p[0]), float(p[1])), float(t))
        end[i] = t
    return status


def verify_graph(motorcycles, status):
    """Check every crash is on a trace passed earlier and nothing is blocked
    before its recorded end.  Returns a list of problems (empty if valid)."""
    store = CurtainStore(motorcycles)
    for i, s in enumerate(status):
        if isinstance(s, Crashed):
            store.clip(i, s.time)
    problems = []
    for i, s in enumerate(status):
        h = store.nearest(i)
        if isinstance(s, Escaped):
            if h is not None:
                problems.append(f"{i} escaped but would hit {h.id}")
        elif h is None or h.id != s.into or abs(h.time - s.time) > 1e-9:
            problems.append(f"{i} recorded crash into {s.into} at {s.time} but first hit is {h}")
    return problems


# --------------------------------------------------------------------------
# generators


def _far_crossing(s0, v0, starts, vels, horizon):
    """True if ray (s0, v0) meets any given ray beyond ``horizon`` time units,
    which makes the crossing numerically fragile."""
    if len(starts) == 0:
        return False
    w = starts - s0
    den = _cross(v0, vels)
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = _cross(w, vels) / den
        t1 = _cross(w, v0) / den
    fwd = (t0 > 0) & (t1 > 0)
    return bool(np.any(fwd & ((t0 > horizon) | (t1 > horizon)) | (np.abs(den) < 1e-12)))


def random_motorcycles(n: int, rng, box=10.0, speed_range=(0.5, 2.0), horizon=1000.0):
    """Uniform starts in a square, uniform directions and speeds.  Directions
    are redrawn until every forward crossing happens before ``horizon``."""
    starts = rng.uniform(-box, box, size=(n, 2))
    speeds = rng.uniform(*speed_range, size=n)
    vels = np.zeros((n, 2))
    for i in range(n):
        while True:
            a = rng.uniform(0, 2 * np.pi)
            v = speeds[i] * np.array([np.cos(a), np.sin(a)])
            if not _far_crossing(starts[i], v, starts[:i], vels[:i], horizon):
                break
        vels[i] = v
    return [Motorcycle(i, starts[i], vels[i] / speeds[i], speeds[i]) for i in range(n)]


def pinwheel(k: int = 3, radius=1.0, behind=0.2, center=(0.0, 0.0), rotation=0.0, speed=1.0, first_id=0):
    """k motorcycles on a regular polygon, each aimed at a point a little
    behind the next one's start; they form a nearest-neighbor cycle."""
    th = 2 * np.pi / k
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    p0 = radius * np.array([np.cos(rotation), np.sin(rotation)])
    p1 = rot @ p0
    d = (p1 - p0) / np.linalg.norm(p1 - p0)
    for _ in range(200):
        tgt = p1 + behind * (rot @ d)
        d = (tgt - p0) / np.linalg.norm(tgt - p0)
    out = []
    p, dd = p0, d
    for i in range(k):
        out.append(Motorcycle(first_id + i, np.asarray(center) + p, dd, speed))
        p, dd = rot @ p, rot @ dd
    return out
