"""Benchmark records, CSV output and log-log scaling fits."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

import numpy as np

from .engine import Engine, EngineConfig, QueryStats, answer
from .scenes import SceneSpec, generate, random_rays

SCHEMA_VERSION = 1
S_EXPONENTS = (1.0, 1.25, 1.5)


@dataclass
class BenchRecord:
    schema: int
    kind: str
    n: int
    s: int
    seed: int
    build_ms: float
    stored_ids: int
    query: int
    wall_ms: float
    triangle_tests: int
    plane_tests: int
    cells_visited: int
    primitive_tests: int
    result_hash: str


def worker_count():
    """Worker threads for query batches, capped by ``TRISHOOT_THREADS``."""
    cap = os.environ.get("TRISHOOT_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def result_hash(obj):
    return hashlib.sha1(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def _timed(engine, op, q):
    st = QueryStats()
    t0 = time.perf_counter()
    res = answer(engine, op, q, st)
    return (time.perf_counter() - t0) * 1000.0, st, res


def run_queries(engine, queries, threads=None):
    """``[(wall_ms, stats, result)]`` in query order; each query owns its counters."""
    threads = threads or worker_count()
    if threads == 1:
        return [_timed(engine, op, q) for op, q in queries]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda oq: _timed(engine, *oq), queries))


def bench_point(spec: SceneSpec, s, queries, config=None, threads=None):
    """Build one engine with storage ``s`` and time ``queries`` on it."""
    scene = generate(spec)
    cfg = config or EngineConfig()
    cfg = EngineConfig(partition=cfg.partition, wide=cfg.wide, approx=cfg.approx, storage=s)
    t0 = time.perf_counter()
    eng = Engine.build(scene, cfg)
    build_ms = (time.perf_counter() - t0) * 1000.0
    stored = eng.stored_ids()
    out = []
    for k, (wall, st, res) in enumerate(run_queries(eng, queries, threads)):
        out.append(BenchRecord(SCHEMA_VERSION, spec.kind, spec.n, int(s), spec.seed,
                               round(build_ms, 3), stored, k, round(wall, 4),
                               st.triangle_tests, st.plane_tests, st.cells_visited,
                               st.primitive_tests, result_hash(res)))
    return out


def bench_grid(ns, s_exponents=S_EXPONENTS, m=200, kind="random-uniform", seed=1,
               config=None, threads=None, progress=None):
    """Records for every ``n`` in ``ns`` and ``s = n ** e`` for ``e`` in ``s_exponents``."""
    records = []
    for n in ns:
        spec = SceneSpec(kind, n, seed=seed)
        queries = [("SHOOT", r) for r in random_rays(m, seed + 1000)]
        for e in s_exponents:
            recs = bench_point(spec, round(n ** e), queries, config, threads)
            records.extend(recs)
            if progress:
                progress(n, e, recs)
    return records


def write_csv(records, path_or_file):
    names = [f.name for f in fields(BenchRecord)]
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=names)
        w.writeheader()
        for r in records:
            w.writerow(asdict(r))
    finally:
        if own:
            fh.close()


def read_csv(path):
    conv = {f.name: f.type for f in fields(BenchRecord)}
    casts = {"int": int, "float": float, "str": str}
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        if int(row["schema"]) != SCHEMA_VERSION:
            raise ValueError(f"unsupported bench schema {row['schema']}")
        out.append(BenchRecord(**{k: casts[conv[k]](v) for k, v in row.items()}))
    return out


def fit_exponent(xs, ys):
    """Least-squares slope of ``log y`` against ``log x``."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    if len(xs) < 2:
        raise ValueError("need at least two points to fit")
    slope, _ = np.polyfit(np.log(xs), np.log(np.maximum(ys, 1e-9)), 1)
    return float(slope)


def medians(records, key="primitive_tests"):
    """``{(n, s): (median key, stored_ids, build_ms)}``."""
    groups = {}
    for r in records:
        groups.setdefault((r.n, r.s), []).append(r)
    return {k: (statistics.median(getattr(r, key) for r in v), v[0].stored_ids, v[0].build_ms)
            for k, v in sorted(groups.items())}


def summarize(records, key="primitive_tests"):
    """Scaling fits: cost and storage vs ``n`` at the largest ``s`` exponent,
    and cost vs ``s`` at every ``n``."""
    med = medians(records, key)
    ns = sorted({n for n, _ in med})
    top = {}
    for (n, s), v in med.items():
        if n not in top or s > top[n][0]:
            top[n] = (s, v)
    out = {"n": ns, "median_cost": {}, "stored_ids": {}, "cost_vs_s": {}}
    for n in ns:
        s, (c, st, _) = top[n]
        out["median_cost"][n] = c
        out["stored_ids"][n] = st
        out["cost_vs_s"][n] = [(s2, med[(n2, s2)][0]) for (n2, s2) in med if n2 == n]
    if len(ns) >= 2:
        out["cost_exponent"] = fit_exponent(ns, [out["median_cost"][n] for n in ns])
        out["storage_exponent"] = fit_exponent(ns, [out["stored_ids"][n] for n in ns])
    for n in ns:
        pts = out["cost_vs_s"][n]
        if len(pts) >= 2 and len({s for s, _ in pts}) >= 2:
            out.setdefault("s_exponent", {})[n] = fit_exponent(*zip(*pts))
    return out


def nonincreasing(values, tol=0.10):
    """True when each value is at most ``(1 + tol)`` times the previous."""
    return all(b <= a * (1 + tol) for a, b in zip(values, values[1:]))
