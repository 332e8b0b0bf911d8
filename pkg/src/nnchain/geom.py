"""Points, L_p metrics, shells and the shared tie-breaking rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class LpMetric:
    p: float = 2.0
    dim: int = 2

    def __post_init__(self):
        if not (self.p >= 1):
            raise ValueError(f"L_p exponent must be >= 1, got {self.p}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.p)

    def norm(self, v):
        """Norm along the last axis; works on single vectors and stacks."""
        v = np.asarray(v, dtype=float)
        if v.ndim >= 2 and v.shape[-1] <= 8:
            # reducing over a short trailing axis is slow; combine columns instead
            cols = [np.abs(v[..., i]) for i in range(v.shape[-1])]
            if self.is_inf:
                out = cols[0]
                for c in cols[1:]:
                    out = np.maximum(out, c)
                return out
            if self.p == 1.0:
                return sum(cols[1:], cols[0])
            if self.p == 2.0:
                return np.sqrt(sum((c * c for c in cols[1:]), cols[0] * cols[0]))
            return sum((c**self.p for c in cols[1:]), cols[0] ** self.p) ** (1.0 / self.p)
        v = np.abs(v)
        if self.p == 2.0:
            return np.sqrt(np.sum(v * v, axis=-1))
        if self.p == 1.0:
            return np.sum(v, axis=-1)
        if self.is_inf:
            return np.max(v, axis=-1)
        return np.sum(v**self.p, axis=-1) ** (1.0 / self.p)

    def to_many(self, q, pts):
        """Distances from one point ``q`` to each row of ``pts``."""
        return self.norm(np.asarray(pts, dtype=float) - np.asarray(q, dtype=float))

    def pairwise(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, self.dim)
        # same summation order as norm(), so entries agree bitwise
        if self.is_inf:
            return cdist(pts, pts, "chebyshev")
        if self.p == 1.0:
            return cdist(pts, pts, "cityblock")
        if self.p == 2.0:
            return cdist(pts, pts, "euclidean")
        return self.norm(pts[:, None, :] - pts[None, :, :])

    def unit_ball_volume(self) -> float:
        """Lebesgue volume of the unit L_p ball in ``dim`` dimensions."""
        d = self.dim
        if self.is_inf:
            return 2.0**d
        p = self.p
        return math.exp(d * math.log(2 * math.gamma(1 / p + 1)) - math.lgamma(d / p + 1))

    def __str__(self):
        p = "inf" if self.is_inf else f"{self.p:g}"
        return f"L{p}(R^{self.dim})"


def as_point(coords, dim=None):
    a = np.asarray(coords, dtype=float).reshape(-1)
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"point has {a.shape[0]} coordinates, expected {dim}")
    return a


def as_points(rows, dim=None):
    a = np.asarray(rows, dtype=float)
    if a.size == 0:
        return np.zeros((0, dim or 0))
    if a.ndim != 2:
        raise DimensionError("points must be a 2D array of coordinates")
    if dim is not None and a.shape[1] != dim:
        raise DimensionError(f"points have {a.shape[1]} coordinates, expected {dim}")
    return a


def distance(a, b, m: LpMetric) -> float:
    a = as_point(a)
    b = as_point(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] != m.dim:
        raise DimensionError(f"points are {a.shape[0]}-dimensional, metric is {m.dim}-dimensional")
    return float(m.norm(a - b))


@dataclass(frozen=True)
class Shell:
    """Closed shell: points x with inner <= d(center, x) <= outer."""

    center: tuple
    inner: float
    outer: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))
        if not self.inner > 0:
            raise ValueError("inner radius must be positive")
        if self.outer < self.inner:
            raise ValueError("outer radius must be >= inner radius")


def shell_contains(s: Shell, x, m: LpMetric) -> bool:
    d = distance(s.center, x, m)
    return s.inner <= d <= s.outer


def pair_key(d: float, i: int, j: int) -> tuple:
    """Strict total order on candidate pairs: distance, then the smaller id pair."""
    return (d, min(i, j), max(i, j))


def tie_less(a: tuple, b: tuple) -> bool:
    return pair_key(*a) < pair_key(*b)
