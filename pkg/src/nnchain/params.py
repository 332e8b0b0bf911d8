"""Valid (epsilon, k) parameters for soft nearest-neighbor queries.

A pair (eps, k) is valid for a shell of inner radius 1 and outer radius R
when any k points placed in the shell contain two points (three-way: three
points) at pairwise distance below 1.  Certificates come from one of

* the analytic packing constant for the Euclidean plane (golden ratio shell),
* a Monte Carlo volume bound: every radius-1/2 ball centered in the shell
  covers at least ``v`` of its volume, so ``k * v > V`` forces an overlap,
* a Monte Carlo surface bound on the inner plus outer boundary spheres.

Surface measure on an L_p sphere is taken to be the cone measure, which is
the radial projection of uniform samples from the ball.  It agrees with the
Euclidean surface area up to a constant factor when p = 2, and any positive
measure works for the covering argument.

``falsify_params`` is an independent annealing search that tries to break a
certificate by placing well-separated points in the shell.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path

import numpy as np

from .geom import LpMetric

PHI = (1 + math.sqrt(5)) / 2
EPS_PHI = PHI ** (1 / 10) - 1

DEFAULT_SAMPLES = 1_000_000
SCREEN_SAMPLES = 20_000
SIGMAS = 3.0


class Arity(str, enum.Enum):
    TWO = "two-way"
    THREE = "three-way"

    @property
    def multiplicity(self) -> int:
        # a point covered by 3 balls gives 3 centers pairwise < 1
        return 1 if self is Arity.TWO else 2


@dataclass(frozen=True)
class Certificate:
    method: str  # "analytic-2d", "volume" or "surface"
    samples: int = 0
    seed: int | None = None
    sigmas: float = 0.0
    covered: float = 0.0  # lower bound per ball (volume or surface measure)
    total: float = 0.0  # shell volume or boundary measure
    positions: int = 0


@dataclass(frozen=True)
class ValidParams:
    epsilon: float
    k: int
    arity: Arity = Arity.TWO
    certificate: Certificate = field(default_factory=lambda: Certificate("unverified"))
    outer_exponent: int | None = None  # shell outer radius is (1+eps)**outer_exponent

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        object.__setattr__(self, "arity", Arity(self.arity))
        if self.outer_exponent is None:
            object.__setattr__(self, "outer_exponent", self.k)

    @property
    def outer_radius(self) -> float:
        return (1 + self.epsilon) ** self.outer_exponent

    def index_epsilon(self) -> float:
        """Largest approximation slack whose query shell (plus the one extra
        factor spent on the online soft threshold) fits inside the certified
        shell."""
        return self.outer_radius ** (1.0 / (self.k + 1)) - 1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["arity"] = self.arity.value
        d["outer_radius"] = self.outer_radius
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ValidParams":
        d = {k: v for k, v in d.items() if k != "outer_radius"}
        cert = Certificate(**d.get("certificate", {"method": "unverified"}))
        return cls(
            epsilon=float(d["epsilon"]),
            k=int(d["k"]),
            arity=Arity(d.get("arity", Arity.TWO)),
            certificate=cert,
            outer_exponent=d.get("outer_exponent"),
        )


def analytic_2d_l2() -> ValidParams:
    """Best packing parameters for (R^2, L2): k = 10, eps just below eps_phi."""
    eps = EPS_PHI * (1 - 1e-6)
    return ValidParams(eps, 10, Arity.TWO, Certificate("analytic-2d"), outer_exponent=10)


def decagon_witness(radius: float = PHI) -> np.ndarray:
    """Regular decagon of the given circumradius; side 1 when radius = phi."""
    ang = 2 * np.pi * np.arange(10) / 10
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


# --------------------------------------------------------------------------
# Monte Carlo machinery


def sample_ball(metric: LpMetric, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from the unit L_p ball."""
    d = metric.dim
    if metric.is_inf:
        return rng.uniform(-1.0, 1.0, size=(n, d))
    p = metric.p
    g = rng.gamma(1.0 / p, 1.0, size=(n, d)) ** (1.0 / p)
    g *= rng.choice([-1.0, 1.0], size=(n, d))
    w = rng.exponential(1.0, size=(n, 1))
    return g / (np.sum(np.abs(g) ** p, axis=1, keepdims=True) + w) ** (1.0 / p)


def sample_sphere(metric: LpMetric, n: int, rng: np.random.Generator) -> np.ndarray:
    """Samples from the unit L_p sphere distributed by cone measure."""
    x = sample_ball(metric, n, rng)
    return x / metric.norm(x)[:, None]


def shell_volume(metric: LpMetric, outer: float, inner: float = 1.0) -> float:
    return metric.unit_ball_volume() * (outer**metric.dim - inner**metric.dim)


def _directions(metric: LpMetric, rng: np.random.Generator, extra: int = 4) -> np.ndarray:
    d = metric.dim
    dirs = [np.eye(d)[0], np.ones(d)]
    if d >= 3:
        dirs.append(np.r_[1.0, 1.0, np.zeros(d - 2)])
    for v in rng.normal(size=(extra, d)):
        dirs.append(v)
    dirs = np.array(dirs)
    return dirs / metric.norm(dirs)[:, None]


class ShellEstimator:
    """Lower bounds on how much of a shell any radius-1/2 ball must cover.

    Ball centers are tried on the outer boundary, the inner boundary and the
    middle sphere, along axis, diagonal and a few random directions; the
    minimum over those positions minus ``sigmas`` standard errors is used.
    """

    def __init__(self, metric: LpMetric, samples: int = DEFAULT_SAMPLES, seed: int = 0, sigmas: float = SIGMAS):
        self.metric = metric
        self.samples = int(samples)
        self.seed = seed
        self.sigmas = sigmas
        rng = np.random.default_rng(seed)
        self.ball = 0.5 * sample_ball(metric, self.samples, rng)
        self.sphere = sample_sphere(metric, self.samples, rng)
        self.dirs = _directions(metric, rng)
        self.half_ball_volume = metric.unit_ball_volume() * 0.5**metric.dim
        self.unit_volume = metric.unit_ball_volume()

    def _radii(self, outer):
        return (outer, 1.0, 0.5 * (1.0 + outer))

    def _centers(self, outer):
        return [rho * u for rho in self._radii(outer) for u in self.dirs]

    def _lower(self, hits, n):
        f = hits / n
        return max(0.0, f - self.sigmas * math.sqrt(max(f * (1 - f), 1.0 / n) / n))

    def _volume_at(self, c, outer, n, conservative):
        r = self.metric.norm(self.ball[:n] + c)
        hits = np.count_nonzero((r >= 1.0) & (r <= outer))
        f = self._lower(hits, n) if conservative else hits / n
        return f * self.half_ball_volume

    def _surface_at(self, c, outer, n, conservative):
        sph = self.sphere[:n]
        hi = np.count_nonzero(self.metric.norm(sph - c) < 0.5)
        ho = np.count_nonzero(self.metric.norm(outer * sph - c) < 0.5)
        w_in = self.unit_volume
        w_out = self.unit_volume * outer**self.metric.dim
        if conservative:
            return w_in * self._lower(hi, n) + w_out * self._lower(ho, n)
        return (w_in * hi + w_out * ho) / n

    def profile(self, kind: str, outer: float, n: int | None = None):
        """Per-center covered measure; conservative when all samples are used."""
        n = n or self.samples
        f = self._volume_at if kind == "volume" else self._surface_at
        return np.array([f(c, outer, n, n == self.samples) for c in self._centers(outer)])

    def volume_bound(self, outer: float, n: int | None = None) -> float:
        """Lower bound on vol(B(c, 1/2) ∩ shell) over tried centers c."""
        return float(self.profile("volume", outer, n).min())

    def surface_total(self, outer: float) -> float:
        return self.unit_volume * (1.0 + outer**self.metric.dim)

    def surface_bound(self, outer: float, n: int | None = None) -> float:
        """Lower bound on the boundary (cone) measure inside B(c, 1/2)."""
        return float(self.profile("surface", outer, n).min())

    def exceeds(self, kind: str, outer: float, need: float, order) -> float | None:
        """Full-sample minimum over centers if it exceeds ``need``, else None.

        Centers are visited in ``order`` (worst screened first) so that a
        failing check usually stops after one evaluation.
        """
        f = self._volume_at if kind == "volume" else self._surface_at
        centers = self._centers(outer)
        best = math.inf
        for i in order:
            best = min(best, f(centers[i], outer, self.samples, True))
            if best <= need:
                return None
        return best


def _check(est: ShellEstimator, k: int, outer: float, mult: int, screen_n: int):
    """Certificate if k balls must overlap mult+1 times in the shell, plus the
    screened minima (volume, surface) for the termination test."""
    screened = []
    for kind, total in (("volume", shell_volume(est.metric, outer)), ("surface", est.surface_total(outer))):
        need = mult * total / k
        prof = est.profile(kind, outer, screen_n)
        screened.append(prof.min())
        if prof.min() <= need:
            continue
        got = est.exceeds(kind, outer, need, np.argsort(prof))
        if got is not None:
            return Certificate(kind, est.samples, est.seed, est.sigmas, got, total, len(prof)), None
    return None, screened


def _search_k(est: ShellEstimator, eps: float, arity: Arity, k_max: int):
    mult = arity.multiplicity
    screen_n = min(SCREEN_SAMPLES, est.samples)
    for k in range(2, k_max + 1):
        outer = (1 + eps) ** (k + 1)
        cert, screened = _check(est, k, outer, mult, screen_n)
        if cert is not None:
            return ValidParams(eps, k, arity, cert, outer_exponent=k + 1)
        # the shell grows faster than a new point can cover it
        nxt = (1 + eps) ** (k + 2)
        grow_v = shell_volume(est.metric, nxt) - shell_volume(est.metric, outer)
        grow_s = est.surface_total(nxt) - est.surface_total(outer)
        if (
            k > 4
            and grow_v > screened[0] / mult
            and grow_s > screened[1] / mult
        ):
            return None
    return None


@lru_cache(maxsize=64)
def _find_params_cached(p, dim, arity, samples, seed, eps_lo, eps_hi, resolution, k_max):
    metric = LpMetric(p, dim)
    est = ShellEstimator(metric, samples, seed)
    lo = eps_lo
    best = _search_k(est, lo, arity, k_max)
    while best is None:
        # range floor too coarse for this space; keep halving
        lo /= 2
        if lo < 1e-8:
            raise RuntimeError(f"no valid parameters found for {metric} ({arity.value})")
        best = _search_k(est, lo, arity, k_max)
    hi = eps_hi
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        got = _search_k(est, mid, arity, k_max)
        if got is not None:
            lo, best = mid, got
        else:
            hi = mid
    return best


TABLE_PATH = Path(__file__).with_name("params_table.json")
TABLE_METRICS = [(p, d) for d in (2, 3, 4) for p in (1.0, 2.0, math.inf)]


def _key(p, dim, arity, samples, seed, eps_lo, eps_hi, resolution, k_max):
    p = "inf" if math.isinf(p) else repr(float(p))
    return f"{p}|{dim}|{Arity(arity).value}|{samples}|{seed}|{eps_lo!r}|{eps_hi!r}|{resolution!r}|{k_max}"


@lru_cache(maxsize=1)
def _table() -> dict:
    if not TABLE_PATH.exists():
        return {}
    return json.loads(TABLE_PATH.read_text())


def find_params(
    metric: LpMetric,
    arity: Arity = Arity.TWO,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
    eps_lo: float = 1e-4,
    eps_hi: float = 1.0,
    resolution: float = 1e-4,
    k_max: int = 1000,
    use_table: bool = True,
) -> ValidParams:
    """Binary search on eps; for each eps try k = 2, 3, ... until a certificate
    is found or the shell outgrows what one more point can cover.

    The certified shell has outer radius (1+eps)**(k+1), one factor more than
    the query shell, which pays for the online soft threshold used by
    :class:`nnchain.snn.SnnIndex`.

    The search is deterministic for a fixed seed, so results for common
    metrics are read from a precomputed table when ``use_table`` is set;
    ``python -m nnchain.params`` regenerates it.
    """
    args = (metric.p, metric.dim, Arity(arity), int(samples), seed, eps_lo, eps_hi, resolution, k_max)
    if use_table:
        hit = _table().get(_key(*args))
        if hit is not None:
            return ValidParams.from_dict(hit)
    return _find_params_cached(*args)


def regenerate_table(path: Path = TABLE_PATH) -> dict:
    out = {}
    for arity in Arity:
        for p, d in TABLE_METRICS:
            vp = find_params(LpMetric(p, d), arity, use_table=False)
            out[_key(p, d, arity, DEFAULT_SAMPLES, 0, 1e-4, 1.0, 1e-4, 1000)] = vp.to_dict()
            print(f"L{p} dim {d} {arity.value}: eps={vp.epsilon:.6g} k={vp.k} ({vp.certificate.method})", flush=True)
    path.write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")
    _table.cache_clear()
    return out


# --------------------------------------------------------------------------
# Falsification


@dataclass
class Falsified:
    points: np.ndarray

    def __bool__(self):
        return True


@dataclass
class Unfalsified:
    best_score: float  # largest min-gap (two-way) or least triangle excess seen

    def __bool__(self):
        return False


def _defeats(pts: np.ndarray, metric: LpMetric, arity: Arity) -> bool:
    dm = metric.pairwise(pts)
    np.fill_diagonal(dm, np.inf)
    close = dm < 1.0
    if arity is Arity.TWO:
        return not close.any()
    c = close.astype(np.int64)
    return not np.any((c @ c) * c)


def _project(pts: np.ndarray, metric: LpMetric, outer: float) -> np.ndarray:
    r = metric.norm(pts)
    r = np.where(r == 0, 1.0, r)
    target = np.clip(r, 1.0, outer)
    return pts * (target / r)[..., None]


def _seeds(k: int, metric: LpMetric, outer: float, rng) -> list[np.ndarray]:
    """Structured starting configurations: regular polygons and alternations
    on the boundary spheres (2D), plus points on the unit sphere."""
    starts = []
    d = metric.dim
    ang = 2 * np.pi * np.arange(k) / k
    ring = np.zeros((k, d))
    ring[:, 0], ring[:, 1] = np.cos(ang), np.sin(ang)
    for rad in (1.0, outer, 0.5 * (1 + outer)):
        starts.append(_project(rad * ring, metric, outer))
    alt = ring * np.where(np.arange(k) % 2 == 0, outer, 1.0)[:, None]
    starts.append(_project(alt, metric, outer))
    if d >= 3:
        # spiral on the sphere
        i = np.arange(k) + 0.5
        phi = np.arccos(1 - 2 * i / k)
        th = np.pi * (1 + 5**0.5) * i
        s = np.zeros((k, d))
        s[:, 0], s[:, 1], s[:, 2] = np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)
        starts.append(_project(outer * s, metric, outer))
    return starts


def _hinge(dm, margin):
    h = np.maximum(0.0, margin - dm)
    idx = np.arange(dm.shape[-1])
    h[..., idx, idx] = 0.0
    return h


def _row_energy(h_rows, h_all, i, arity: Arity):
    """Energy of the terms touching point i, per chain.

    Two-way: sum of squared hinge violations on pairs (i, j).
    Three-way: sum over triangles (i, j, l) of the smallest hinge violation,
    which is zero iff no triangle of i is entirely closer than the margin.
    """
    if arity is Arity.TWO:
        return np.sum(h_rows**2, axis=-1)
    t = np.minimum(np.minimum(h_rows[:, :, None], h_rows[:, None, :]), h_all)
    return 0.5 * np.sum(t, axis=(1, 2))


def falsify_params(params: ValidParams, metric: LpMetric, effort: int = 100_000, seed: int = 0, chains: int = 32):
    """Annealing search for k points in the certified shell that defeat it.

    Two-way certificates are defeated by k points at pairwise distance >= 1,
    three-way ones by k points with no triple pairwise closer than 1.
    ``effort`` counts single-point move proposals summed over all chains,
    which run in lockstep.  Returns :class:`Falsified` with the witness or
    :class:`Unfalsified` with the least residual energy seen.
    """
    rng = np.random.default_rng(seed)
    k, outer, arity = params.k, params.outer_radius, params.arity
    margin = 1.0 + 1e-9
    configs = _seeds(k, metric, outer, rng)
    for pts in configs:
        if _defeats(pts, metric, arity):
            return Falsified(pts)
    while len(configs) < chains:
        raw = sample_sphere(metric, k, rng) * rng.uniform(1.0, outer, size=(k, 1))
        configs.append(_project(raw, metric, outer))
    pts = np.array(configs[:chains])
    b = pts.shape[0]
    dm = metric.norm(pts[:, :, None, :] - pts[:, None, :, :])
    h = _hinge(dm, margin)
    if arity is Arity.TWO:
        energy = 0.5 * np.sum(h**2, axis=(1, 2))
    else:
        t = np.minimum(np.minimum(h[:, :, :, None], h[:, :, None, :]), h[:, None, :, :])
        energy = np.sum(t, axis=(1, 2, 3)) / 6.0
    steps = max(1, effort // b)
    t0 = np.maximum(energy, 1e-3) / k
    chain = np.arange(b)
    best = float(energy.min())
    for it in range(steps):
        frac = it / steps
        temp = t0 * 1e-4**frac
        size = 0.3 * 0.02**frac
        i = rng.integers(k, size=b)
        cand = _project(pts[chain, i] + rng.normal(scale=size, size=(b, metric.dim)), metric, outer)
        row = metric.norm(cand[:, None, :] - pts)
        row[chain, i] = 0.0
        new_h = np.maximum(0.0, margin - row)
        new_h[chain, i] = 0.0
        old_h = h[chain, i]
        if arity is Arity.THREE:
            mask = np.ones((b, k), dtype=bool)
            mask[chain, i] = False
            hh = h * mask[:, :, None] * mask[:, None, :]
            delta = _row_energy(new_h, hh, i, arity) - _row_energy(old_h, hh, i, arity)
        else:
            delta = _row_energy(new_h, None, i, arity) - _row_energy(old_h, None, i, arity)
        accept = (delta <= 0) | (rng.random(b) < np.exp(-np.maximum(delta, 0) / temp))
        if accept.any():
            a = chain[accept]
            ia = i[accept]
            pts[a, ia] = cand[accept]
            dm[a, ia, :] = row[accept]
            dm[a, :, ia] = row[accept]
            h[a, ia, :] = new_h[accept]
            h[a, :, ia] = new_h[accept]
            energy[a] += delta[accept]
            done = a[energy[a] <= 1e-15]
            for c in done:
                if _defeats(pts[c], metric, arity):
                    return Falsified(pts[c].copy())
            best = min(best, float(energy.min()))
    return Unfalsified(max(best, 0.0))


if __name__ == "__main__":
    regenerate_table()
