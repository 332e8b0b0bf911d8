"""End-to-end acceptance checks.  Each test records one PASS/FAIL line that
is repeated in the terminal summary."""

import math
import time

import numpy as np
import pytest
from scipy.sparse.csgraph import shortest_path

from nnchain.cover import (CoverInvariantError, CoverStats, audit_intervals, cover_exact, cover_exhaustive, cover_nnc, greedy_15d,
                           random_cover_instance, tightness_search)
from nnchain.geom import LpMetric
from nnchain.instances import generate
from nnchain.matching import (FirstChoiceHull2D, first_choice_2d, first_choice_scan, gale_shapley_oracle,
                              narcissistic_match, random_instance, verify_stability)
from nnchain.mftsp import ChainStats, mftsp_oracle, mftsp_snnc, mnn_strategy_random
from nnchain.motorcycle import (DegenerateInputError, MotorcycleStats, mc_oracle, motorcycle_graph, pinwheel,
                                random_motorcycles)
from nnchain.params import (EPS_PHI, PHI, Arity, Falsified, ValidParams, analytic_2d_l2, decagon_witness,
                            falsify_params, find_params)
from nnchain.snn import Hard, SnnIndex

from conftest import brute_nn, record_criterion

pytestmark = pytest.mark.acceptance

P_VALUES = (1.0, 2.0, math.inf)


def fit_slope(ns, times):
    return float(np.polyfit(np.log(ns), np.log(times), 1)[0])


# --------------------------------------------------------------------------
# 1 and 2 share the TSP sweep


def _unique_gaps(dm, gap=1e-9):
    d = np.sort(dm[np.triu_indices(len(dm), 1)])
    return d[0] > gap and (len(d) < 2 or np.min(np.diff(d)) > gap)


def _random_matrix(rng, n):
    w = rng.uniform(1.0, 10.0, n * (n - 1) // 2)
    dm = np.zeros((n, n))
    dm[np.triu_indices(n, 1)] = w
    return dm + dm.T


@pytest.fixture(scope="module")
def tsp_sweep():
    t0 = time.perf_counter()
    bad, counters = [], []
    for seed in range(1000):
        rng = np.random.default_rng([1, seed])
        n, dim, p = int(rng.integers(5, 201)), int(rng.integers(2, 5)), P_VALUES[seed % 3]
        inst = generate("points", seed, n=n, dim=dim, p=p).data()
        pts, metric = np.array(inst.points), inst.metric()
        st = ChainStats()
        ref = mftsp_oracle(pts, metric).edges
        ok = mftsp_snnc(pts, metric, stats=st).edges == ref
        ok &= all(mnn_strategy_random(pts, metric, seed=s).edges == ref for s in range(10))
        counters.append((n, st.iterations, st.connections))
        if not ok:
            bad.append(("points", seed))
    # random symmetric matrices (not metric): global-local equivalence of the MNN strategy;
    # their metric closures embedded isometrically in L_inf also run through the chain
    matrices = 0
    seed = 0
    while matrices < 100:
        rng = np.random.default_rng([2, seed])
        seed += 1
        n = int(rng.integers(5, 101))
        dm = _random_matrix(rng, n)
        closure = shortest_path(dm, method="FW", directed=False)
        if not (_unique_gaps(dm) and _unique_gaps(closure)):
            continue
        matrices += 1
        ref = mftsp_oracle(dist_matrix=dm).edges
        ok = all(mnn_strategy_random(dist_matrix=dm, seed=s).edges == ref for s in range(10))
        cref = mftsp_oracle(dist_matrix=closure).edges
        st = ChainStats()
        got = mftsp_snnc(closure, LpMetric(math.inf, n), params=ValidParams(0.0, 8, Arity.THREE), exact=True, stats=st)
        ok &= got.edges == cref
        ok &= all(mnn_strategy_random(dist_matrix=closure, seed=s).edges == cref for s in range(10))
        counters.append((n, st.iterations, st.connections))
        if not ok:
            bad.append(("matrix", seed - 1))
    return bad, counters, time.perf_counter() - t0


def test_global_local_equivalence(tsp_sweep):
    bad, _, elapsed = tsp_sweep
    ok = not bad and elapsed < 300
    record_criterion(1, "multi-fragment tours agree across chain, MNN seeds and sorted-edge oracle", ok,
                     f"1000 point sets + 100 matrices, {len(bad)} disagreements, {elapsed:.0f}s")
    assert not bad, bad[:10]
    assert elapsed < 300


def test_iteration_bounds(tsp_sweep):
    _, counters, _ = tsp_sweep
    tsp_bad = sum(it > 3 * n - 3 or con != n - 1 for n, it, con in counters)
    mc_bad = 0
    mc_runs = 0
    for seed in range(300):
        rng = np.random.default_rng([5, seed])
        mcs = random_motorcycles(int(rng.integers(2, 61)), rng)
        st = MotorcycleStats()
        try:
            status = motorcycle_graph(mcs, stats=st)
        except DegenerateInputError:
            continue
        mc_runs += 1
        mc_bad += st.queries > 3 * len(mcs) or any(s is None for s in status)
    cover_bad = 0
    for seed in range(300):
        rng = np.random.default_rng([6, seed])
        inst = random_cover_instance(int(rng.integers(1, 61)), int(rng.integers(1, 21)), rng)
        st = CoverStats()
        cover_nnc(inst, stats=st)
        cover_bad += st.merges != inst.n + inst.m - 1
    ok = tsp_bad == mc_bad == cover_bad == 0
    record_criterion(2, "iteration, query and merge counters within bounds", ok,
                     f"violations: tsp {tsp_bad}/{len(counters)}, motorcycle {mc_bad}/{mc_runs}, cover {cover_bad}/300")
    assert ok


# --------------------------------------------------------------------------


def test_snn_contract():
    violations = hard = soft = 0
    queries = 0
    configs = [(LpMetric(p, d), a) for d in (2, 3, 4) for p in P_VALUES for a in Arity]
    rng = np.random.default_rng(3)
    while queries < 10_000:
        for metric, arity in configs:
            n = int(rng.integers(50, 1500))
            if rng.random() < 0.5:
                pts = rng.uniform(0, 1, size=(n, metric.dim))
            else:
                centers = rng.uniform(0, 1, size=(max(n // 8, 1), metric.dim))
                pts = centers[rng.integers(len(centers), size=n)] + rng.normal(0, 0.005, size=(n, metric.dim))
            s = SnnIndex(pts, metric, arity=arity)
            alive = set(range(n))
            for i in rng.choice(n, size=n // 5, replace=False):
                s.delete(int(i))
                alive.discard(int(i))
            for _ in range(60):
                q = rng.uniform(0, 1, size=metric.dim)
                ans = s.query(q)
                _, nn_d = brute_nn(pts, q, metric, alive)
                queries += 1
                if isinstance(ans, Hard):
                    hard += 1
                    nn_id, _ = brute_nn(pts, q, metric, alive)
                    violations += ans.id != nn_id or ans.distance != nn_d
                else:
                    soft += 1
                    ids = list(ans.ids)
                    dm = metric.pairwise(pts[ids])
                    violations += not (set(ids) <= alive and np.all(dm[np.triu_indices(len(ids), 1)] < nn_d))
                    violations += len(ids) != (2 if arity is Arity.TWO else 3)
    record_criterion(3, "soft nearest-neighbor answers honor their contract", violations == 0,
                     f"{queries} queries, {hard} hard, {soft} soft, {violations} violations")
    assert violations == 0


def test_parameter_certificates():
    problems = []
    vp = analytic_2d_l2()
    if not (abs(vp.epsilon - 0.0492) <= 1e-4 and (1 + vp.epsilon) ** 10 < PHI and vp.k == 10):
        problems.append("analytic constant")
    deca = decagon_witness()
    l2 = LpMetric(2, 2)
    if np.max(np.abs(l2.norm(deca - np.roll(deca, 1, axis=0)) - 1.0)) > 1e-12:
        problems.append("decagon side")
    for eps in (EPS_PHI, EPS_PHI + 1e-3, EPS_PHI + 0.01, 0.1, 0.5):
        outer = (1 + eps) ** 10
        pts = decagon_witness(PHI)  # inside the shell for every outer radius >= phi
        dm = l2.pairwise(pts)
        np.fill_diagonal(dm, np.inf)
        in_shell = np.all((l2.norm(pts) >= 1) & (l2.norm(pts) <= outer * (1 + 1e-12)))
        if not (in_shell and dm.min() >= 1 - 1e-12):
            problems.append(f"decagon at eps={eps}")
        if eps > EPS_PHI and not isinstance(falsify_params(ValidParams(eps, 10), l2, effort=10_000), Falsified):
            problems.append(f"falsifier missed eps={eps}")
    runs = 0
    for dim in (2, 3):
        for p in P_VALUES:
            for arity in Arity:
                metric = LpMetric(p, dim)
                if arity is Arity.THREE and p != 2.0:
                    continue
                res = falsify_params(find_params(metric, arity), metric, effort=10**6, seed=0)
                runs += 1
                if res:
                    problems.append(f"find_params falsified for {metric} {arity.value}")
    res = falsify_params(vp, l2, effort=10**6, seed=0)
    runs += 1
    if res:
        problems.append("analytic constant falsified")
    record_criterion(4, "parameter certificates", not problems,
                     f"{runs} falsification runs of 1e6 steps; problems: {problems or 'none'}")
    assert not problems


def _same_motorcycles(a, b):
    for x, y in zip(a, b):
        if type(x) is not type(y):
            return False
        if hasattr(x, "into") and (x.into != y.into or abs(x.time - y.time) > 1e-9
                                   or max(abs(u - v) for u, v in zip(x.point, y.point)) > 1e-9):
            return False
    return len(a) == len(b)


def test_motorcycle_correctness():
    t0 = time.perf_counter()
    bad = degenerate = cycles = 0
    done = 0
    seed = 0
    while done < 1000:
        rng = np.random.default_rng([4, seed])
        seed += 1
        n = int(rng.integers(2, 61))
        if seed % 4 == 0:
            # nearest-neighbor cycles embedded among random motorcycles
            k = int(rng.integers(3, 8))
            mcs = random_motorcycles(max(n - k, 0), rng)
            mcs += pinwheel(k, radius=1.0, center=(40.0, 40.0), rotation=float(rng.uniform(0, 2 * np.pi)),
                            first_id=len(mcs))
        else:
            mcs = random_motorcycles(n, rng)
        st = MotorcycleStats()
        try:
            got = motorcycle_graph(mcs, stats=st)
        except DegenerateInputError:
            degenerate += 1
            continue
        done += 1
        cycles += st.cycles
        bad += not _same_motorcycles(got, mc_oracle(mcs))
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and cycles > 0 and elapsed < 300
    record_criterion(5, "motorcycle graph equals chronological simulation", ok,
                     f"1000 instances, {bad} mismatches, {cycles} cycles resolved, "
                     f"{degenerate} degenerate draws skipped, {elapsed:.0f}s")
    assert ok


def test_stable_matching():
    bad = 0
    for seed in range(200):
        rng = np.random.default_rng([7, seed])
        n, k = int(rng.integers(1, 101)), (2, 3, 5)[seed % 3]
        L, R = random_instance(n, k, rng)
        got = narcissistic_match(L, R)
        bad += not (got == gale_shapley_oracle(L, R, "left") == gale_shapley_oracle(L, R, "right")
                    and verify_stability(got, L, R))
    rng = np.random.default_rng(8)
    pts = rng.uniform(0.05, 1, size=(2000, 2))
    h = FirstChoiceHull2D(pts)
    alive = set(range(2000))
    fc_bad = 0
    for i in range(10_000):
        q = rng.uniform(0.01, 1, size=2)
        fc_bad += first_choice_2d(h, q) != first_choice_scan(pts, q, alive)
        if i % 6 == 0 and len(alive) > 1:
            x = int(rng.choice(list(alive)))
            h.delete(x)
            alive.discard(x)
    record_criterion(6, "stable matching and first-choice queries", bad == fc_bad == 0,
                     f"200 instances, {bad} mismatches; 10000 first-choice queries, {fc_bad} mismatches")
    assert bad == fc_bad == 0


def test_server_cover():
    over = audit_bad = 0
    for seed in range(500):
        rng = np.random.default_rng([9, seed])
        inst = random_cover_instance(int(rng.integers(1, 61)), int(rng.integers(1, 21)), rng)
        st = CoverStats()
        try:
            sol = cover_nnc(inst, audit=True, stats=st)
            audit_intervals(st.intervals, sol.cost)
        except CoverInvariantError:
            audit_bad += 1
            continue
        over += not (sol.is_valid(inst) and sol.cost <= 2 * cover_exact(inst).cost + 1e-9)
    exhaustive = ex_bad = 0
    rng = np.random.default_rng(10)
    for n in range(1, 8):
        for m in range(1, 9 - n):
            for _ in range(50):
                inst = random_cover_instance(n, m, rng, span=10.0)
                exhaustive += 1
                ex_bad += abs(cover_exact(inst).cost - cover_exhaustive(inst).cost) > 1e-12
    res = tightness_search(seed=0, trials=100_000, stop_at=1.9)
    ok = over == audit_bad == ex_bad == 0 and 1.9 <= res.ratio <= 2 + 1e-9
    record_criterion(7, "server cover approximation, exact oracle and tightness", ok,
                     f"{over} over 2x and {audit_bad} audit failures in 500; {ex_bad}/{exhaustive} DP mismatches; "
                     f"tightness ratio {res.ratio:.6f} after {res.trials} trials")
    assert ok


def test_planar_greedy_lower_bound():
    rows = []
    ok = True
    for m in (2, 4, 6, 8):
        res = greedy_15d(m)
        ok &= res.greedy_cost == m * m and res.ratio >= 2 * m / math.sqrt(5) - 1e-6
        rows.append(f"m={m}: {res.greedy_cost:g} vs {res.opt_cost:.4f}")
    record_criterion(8, "planar greedy pays m^2 against the sqrt(5) m / 2 bound", ok, "; ".join(rows))
    assert ok


def test_scaling():
    cover_ns = [10**4, 10**5, 10**6]
    cover_t = []
    for n in cover_ns:
        inst = random_cover_instance(n, n // 4, np.random.default_rng(n), span=float(n), min_gap=0.0)
        reps = 3 if n < 10**6 else 1
        best = math.inf
        for _ in range(reps):
            t = time.perf_counter()
            cover_nnc(inst)
            best = min(best, time.perf_counter() - t)
        cover_t.append(best)
    tsp_ns = [10**3, 10**4, 10**5]
    tsp_t = []
    for n in tsp_ns:
        pts = np.random.default_rng(n).uniform(0, 1, size=(n, 2))
        t = time.perf_counter()
        mftsp_snnc(pts, LpMetric(2, 2), exact=True)
        tsp_t.append(time.perf_counter() - t)
    cs, ts = fit_slope(cover_ns, cover_t), fit_slope(tsp_ns, tsp_t)
    ok = 0.8 <= cs <= 1.2 and ts <= 1.3
    record_criterion(9, "log-log wall-time slopes", ok,
                     f"cover slope {cs:.3f} ({', '.join(f'{t:.2f}s' for t in cover_t)}); "
                     f"tour slope {ts:.3f} ({', '.join(f'{t:.1f}s' for t in tsp_t)})")
    assert ok
