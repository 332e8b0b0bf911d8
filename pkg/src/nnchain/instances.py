"""Instance and report files: versioned JSON schemas, canonical serialization
and seeded generators."""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .cover import CoverInstance, random_cover_instance
from .geom import LpMetric
from .matching import random_instance
from .motorcycle import Motorcycle, pinwheel, random_motorcycles

SCHEMA_VERSION = 1
KINDS = ("points", "paths", "motorcycles", "matching", "cover", "graph")
UNIQUE_GAP = 1e-9
UNIQUE_CHECK_MAX = 1000  # distance-gap check is quadratic; skipped above this


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _finite(rows):
    if not np.all(np.isfinite(np.asarray(rows, dtype=float))):
        raise ValueError("coordinates must be finite")
    return rows


class PointsPayload(Strict):
    p: float | Literal["inf"] = 2.0
    dim: int = Field(ge=1)
    points: list[list[float]]

    @model_validator(mode="after")
    def _shape(self):
        if any(len(r) != self.dim for r in self.points):
            raise ValueError(f"every point needs {self.dim} coordinates")
        if self.p != "inf" and self.p < 1:
            raise ValueError("p must be >= 1 or 'inf'")
        _finite(self.points)
        return self

    def metric(self):
        return LpMetric(math.inf if self.p == "inf" else self.p, self.dim)


class PathsPayload(PointsPayload):
    paths: list[list[int]]

    @model_validator(mode="after")
    def _partition(self):
        ids = sorted(i for p in self.paths for i in p)
        if ids != list(range(len(self.points))) or any(not p for p in self.paths):
            raise ValueError("paths must partition the point ids")
        return self


class MotorcycleSpec(Strict):
    start: list[float] = Field(min_length=2, max_length=2)
    dir: list[float] = Field(min_length=2, max_length=2)
    speed: float = Field(gt=0)

    @field_validator("dir")
    @classmethod
    def _nonzero(cls, v):
        if v[0] == 0 and v[1] == 0:
            raise ValueError("direction must be nonzero")
        return v


class MotorcyclesPayload(Strict):
    motorcycles: list[MotorcycleSpec]

    @model_validator(mode="after")
    def _distinct(self):
        starts = {tuple(m.start) for m in self.motorcycles}
        if len(starts) != len(self.motorcycles):
            raise ValueError("motorcycle starts must be distinct")
        return self

    def build(self):
        return [Motorcycle(i, m.start, m.dir, m.speed) for i, m in enumerate(self.motorcycles)]


class MatchingPayload(Strict):
    k: int | None = Field(default=None, ge=1)
    left: list[list[float]]
    right: list[list[float]]

    @model_validator(mode="after")
    def _positive(self):
        if not self.left or len(self.left) != len(self.right):
            raise ValueError("both sides need the same nonzero number of agents")
        k = len(self.left[0])
        if any(len(v) != k for v in self.left + self.right):
            raise ValueError("all attribute vectors need the same length")
        if self.k is not None and self.k != k:
            raise ValueError(f"k={self.k} but vectors have {k} attributes")
        if any(x <= 0 for v in self.left + self.right for x in v):
            raise ValueError("attribute vectors must be strictly positive")
        _finite(self.left + self.right)
        return self


class CoverPayload(Strict):
    clients: list[float]
    servers: list[float]

    @model_validator(mode="after")
    def _sorted(self):
        for name in ("clients", "servers"):
            v = getattr(self, name)
            if any(b < a for a, b in zip(v, v[1:])):
                raise ValueError(f"{name} must be sorted ascending")
        _finite(self.clients + self.servers)
        return self

    def build(self):
        return CoverInstance(tuple(self.clients), tuple(self.servers))


class GraphPayload(Strict):
    n: int = Field(ge=1)
    edges: list[tuple[int, int, float]]
    sites: list[int] = Field(min_length=1)
    coords: list[list[float]] | None = None  # optional drawing positions

    @model_validator(mode="after")
    def _coords(self):
        if self.coords is not None and len(self.coords) != self.n:
            raise ValueError("coords must give one position per node")
        return self


PAYLOADS = {
    "points": PointsPayload,
    "paths": PathsPayload,
    "motorcycles": MotorcyclesPayload,
    "matching": MatchingPayload,
    "cover": CoverPayload,
    "graph": GraphPayload,
}


class InstanceFile(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    kind: Literal["points", "paths", "motorcycles", "matching", "cover", "graph"]
    seed: int | None = None
    generator: dict[str, Any] = Field(default_factory=dict)
    payload: dict[str, Any]

    @model_validator(mode="after")
    def _payload(self):
        PAYLOADS[self.kind].model_validate(self.payload)
        return self

    def data(self):
        return PAYLOADS[self.kind].model_validate(self.payload)


class RunReport(Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    kind: str
    algorithm: str
    instance_digest: str
    result: dict[str, Any]
    counters: dict[str, Any] = Field(default_factory=dict)
    wall_time: float = 0.0
    verdict: Literal["match", "mismatch"] | None = None
    oracle: dict[str, Any] | None = None


# --------------------------------------------------------------------------
# canonical JSON


def _encode(x):
    if isinstance(x, BaseModel):
        return _encode(x.model_dump(mode="python"))
    if isinstance(x, dict):
        items = sorted((str(k), v) for k, v in x.items())
        return "{" + ",".join(json.dumps(k) + ":" + _encode(v) for k, v in items) + "}"
    if isinstance(x, (list, tuple)):
        return "[" + ",".join(_encode(v) for v in x) + "]"
    if isinstance(x, (bool, np.bool_)) or x is None:
        return json.dumps(bool(x) if x is not None else None)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return json.dumps("inf" if x > 0 else "-inf") if math.isinf(x) else "null"
        return format(x, ".17g")
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    return _encode(obj)


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def load_instance(text: str) -> InstanceFile:
    return InstanceFile.model_validate_json(text)


# --------------------------------------------------------------------------
# generators


def _distances_unique(pts, metric):
    n = len(pts)
    if n > UNIQUE_CHECK_MAX or n < 3:
        return True
    dm = metric.pairwise(pts)
    d = np.sort(dm[np.triu_indices(n, 1)])
    return bool(np.min(np.diff(d)) > UNIQUE_GAP)


def _gen_points(rng, n=50, dim=2, p=2.0):
    metric = LpMetric(p, dim)
    while True:
        pts = rng.uniform(0.0, 1.0, size=(n, dim))
        if _distances_unique(pts, metric):
            break
    return {"p": "inf" if math.isinf(metric.p) else metric.p, "dim": dim, "points": pts.tolist()}


def _gen_paths(rng, n=50, dim=2, p=2.0, fragments=10):
    out = _gen_points(rng, n, dim, p)
    perm = rng.permutation(n)
    cuts = np.sort(rng.choice(np.arange(1, n), size=min(fragments, n) - 1, replace=False)) if n > 1 else []
    out["paths"] = [a.tolist() for a in np.split(perm, cuts)]
    return out


def _gen_motorcycles(rng, n=30, pinwheels=0, box=10.0):
    mcs = random_motorcycles(n, rng, box=box)
    for w in range(pinwheels):
        c = (3 * box + 4 * w, 3 * box)
        mcs += pinwheel(3 + w % 3, center=c, rotation=float(rng.uniform(0, 2 * np.pi)), first_id=len(mcs))
    return {"motorcycles": [{"start": list(m.start), "dir": list(m.dir), "speed": m.speed} for m in mcs]}


def _gen_matching(rng, n=20, k=2):
    left, right = random_instance(n, k, rng)
    return {"k": k, "left": left.tolist(), "right": right.tolist()}


def _gen_cover(rng, n=40, m=10, span=100.0):
    inst = random_cover_instance(n, m, rng, span=span)
    return {"clients": list(inst.clients), "servers": list(inst.servers)}


def _gen_graph(rng, rows=6, cols=6, sites=8):
    n = rows * cols
    edges = []
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            if c + 1 < cols:
                edges.append((u, u + 1, float(rng.uniform(1.0, 2.0))))
            if r + 1 < rows:
                edges.append((u, u + cols, float(rng.uniform(1.0, 2.0))))
    chosen = sorted(int(x) for x in rng.choice(n, size=min(sites, n), replace=False))
    coords = [[float(u % cols), float(u // cols)] for u in range(n)]
    return {"n": n, "edges": edges, "sites": chosen, "coords": coords}


GENERATORS = {
    "points": _gen_points,
    "paths": _gen_paths,
    "motorcycles": _gen_motorcycles,
    "matching": _gen_matching,
    "cover": _gen_cover,
    "graph": _gen_graph,
}


def generate(kind: str, seed: int = 0, **params) -> InstanceFile:
    if kind not in GENERATORS:
        raise ValueError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    rng = np.random.default_rng(seed)
    try:
        payload = GENERATORS[kind](rng, **params)
    except TypeError as e:
        raise ValueError(f"bad generator parameters for {kind}: {e}") from None
    gen = {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in params.items()}
    # round-trip through the canonical text so floats match what a reader sees
    inst = InstanceFile(kind=kind, seed=seed, generator=gen, payload=payload)
    return load_instance(canonical_json(inst))
