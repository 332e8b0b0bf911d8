"""Dispatch from instance kinds to algorithms and oracles, producing reports."""

from __future__ import annotations

import time

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path

from . import cover as cv
from .instances import InstanceFile, RunReport, digest
from .matching import MatchStats, gale_shapley_oracle, narcissistic_match, verify_stability
from .mftsp import ChainStats, mftsp_oracle, mftsp_snnc, mnn_strategy_random
from .motorcycle import Crashed, MotorcycleStats, mc_oracle, motorcycle_graph
from .steiner import DisconnectedError, WeightedGraph, steiner_mftsp


class KindMismatch(ValueError):
    pass


def _tsp(data, paths=None, exact=False):
    st = ChainStats()
    t = mftsp_snnc(data.points, data.metric(), paths=paths, exact=exact, stats=st)
    n = len(paths) if paths is not None else len(data.points)
    counters = {"iterations": st.iterations, "connections": st.connections, "queries": st.queries,
                "bound_iterations": 3 * n - 3}
    return {"order": t.order, "length": t.length, "edges": t.edges}, counters


def _tsp_oracle(data, paths=None):
    t = mftsp_oracle(data.points, data.metric(), paths=paths)
    return {"order": t.order, "length": t.length, "edges": t.edges}, {}


def _tsp_mnn(data, paths=None, seed=0):
    t = mnn_strategy_random(data.points, data.metric(), seed=seed, paths=paths)
    return {"order": t.order, "length": t.length, "edges": t.edges}, {}


def _status_json(status):
    out = []
    for s in status:
        if isinstance(s, Crashed):
            out.append({"status": "crashed", "into": s.into, "point": list(s.point), "time": s.time})
        else:
            out.append({"status": "escaped"})
    return out


def _motorcycle(data):
    st = MotorcycleStats()
    status = motorcycle_graph(data.build(), stats=st)
    n = len(data.motorcycles)
    return {"statuses": _status_json(status)}, {"iterations": st.iterations, "queries": st.queries,
                                                "cycles": st.cycles, "bound_queries": 3 * n}


def _motorcycle_oracle(data):
    return {"statuses": _status_json(mc_oracle(data.build()))}, {}


def _match(data):
    st = MatchStats()
    pairs = narcissistic_match(data.left, data.right, stats=st)
    return {"pairs": [list(p) for p in pairs]}, {"iterations": st.iterations, "queries": st.queries}


def _match_oracle(data):
    return {"pairs": [list(p) for p in gale_shapley_oracle(data.left, data.right)]}, {}


def _cover_result(sol):
    return {"radii": sol.radii, "cost": sol.cost}


def _cover(data):
    inst = data.build()
    st = cv.CoverStats()
    sol = cv.cover_nnc(inst, stats=st)
    return _cover_result(sol), {"iterations": st.iterations, "merges": st.merges,
                                "bound_merges": max(inst.n + inst.m - 1, 0) if inst.n else 0}


def _steiner(data):
    g = WeightedGraph(data.n, data.edges, data.sites)
    t = steiner_mftsp(g)
    return {"order": t.order, "length": t.length, "walk": t.walk, "edges": t.edges}, {
        "iterations": t.iterations, "searches": t.searches}


def _steiner_oracle(data):
    g = WeightedGraph(data.n, data.edges, data.sites)
    if g.edges:
        u, v, w = (np.array(c) for c in zip(*g.edges))
    else:
        u = v = np.zeros(0, dtype=np.int64)
        w = np.zeros(0)
    mat = coo_matrix((w, (u, v)), shape=(g.n, g.n)).tocsr()
    dm = shortest_path(mat, directed=False, indices=g.sites)[:, g.sites]
    if not np.all(np.isfinite(dm)):
        raise DisconnectedError("sites lie in different components")
    t = mftsp_oracle(dist_matrix=dm)
    s = g.sites
    edges = sorted(tuple(sorted((s[i], s[j]))) for i, j in t.edges)
    return {"order": [s[i] for i in t.order], "length": t.length, "edges": edges}, {}


ALGORITHMS = {
    "points": {"tsp": _tsp, "tsp-exact": lambda d: _tsp(d, exact=True), "tsp-oracle": _tsp_oracle,
               "tsp-mnn": _tsp_mnn},
    "paths": {"tsp": lambda d: _tsp(d, d.paths), "tsp-exact": lambda d: _tsp(d, d.paths, exact=True),
              "tsp-oracle": lambda d: _tsp_oracle(d, d.paths), "tsp-mnn": lambda d: _tsp_mnn(d, d.paths)},
    "motorcycles": {"motorcycle": _motorcycle, "motorcycle-oracle": _motorcycle_oracle},
    "matching": {"match": _match, "gale-shapley": _match_oracle},
    "cover": {"cover-nnc": _cover, "cover-exact": lambda d: (_cover_result(cv.cover_exact(d.build())), {}),
              "cover-greedy": lambda d: (_cover_result(cv.cover_greedy_alt(d.build())), {})},
    "graph": {"steiner": _steiner, "steiner-oracle": _steiner_oracle},
}
DEFAULT = {"points": "tsp", "paths": "tsp", "motorcycles": "motorcycle", "matching": "match",
           "cover": "cover-nnc", "graph": "steiner"}
ORACLE = {"points": "tsp-oracle", "paths": "tsp-oracle", "motorcycles": "motorcycle-oracle",
          "matching": "gale-shapley", "cover": "cover-exact", "graph": "steiner-oracle"}


def _agree(kind, res, ref, data):
    if kind in ("points", "paths", "graph"):
        return [list(e) for e in res["edges"]] == [list(e) for e in ref["edges"]]
    if kind == "motorcycles":
        for a, b in zip(res["statuses"], ref["statuses"]):
            if a["status"] != b["status"]:
                return False
            if a["status"] == "crashed" and (a["into"] != b["into"] or abs(a["time"] - b["time"]) > 1e-9
                                             or max(abs(x - y) for x, y in zip(a["point"], b["point"])) > 1e-9):
                return False
        return True
    if kind == "matching":
        return res["pairs"] == ref["pairs"] and bool(verify_stability([tuple(p) for p in res["pairs"]],
                                                                      data.left, data.right))
    if kind == "cover":
        return res["cost"] <= 2 * ref["cost"] + 1e-9 * max(1.0, ref["cost"])
    raise KindMismatch(kind)


def run(inst: InstanceFile, algorithm: str | None = None, oracle=False) -> RunReport:
    kind = inst.kind
    algorithm = algorithm or DEFAULT[kind]
    table = ALGORITHMS[kind]
    if algorithm not in table:
        owner = [k for k, t in ALGORITHMS.items() if algorithm in t]
        if owner:
            raise KindMismatch(f"algorithm {algorithm!r} needs a {'/'.join(owner)} instance, got {kind}")
        raise KindMismatch(f"unknown algorithm {algorithm!r}; for {kind} use one of {', '.join(table)}")
    data = inst.data()
    t0 = time.perf_counter()
    result, counters = table[algorithm](data)
    wall = time.perf_counter() - t0
    report = RunReport(kind=kind, algorithm=algorithm, instance_digest=digest(inst), result=result,
                       counters=counters, wall_time=wall)
    if oracle:
        ref, _ = ALGORITHMS[kind][ORACLE[kind]](data)
        report.oracle = {"algorithm": ORACLE[kind], "result": ref}
        report.verdict = "match" if _agree(kind, result, ref, data) else "mismatch"
    return report
