"""Compare engine answers with brute-force oracles, query by query."""
from __future__ import annotations

import math

from .engine import Engine, answer, _num
from .oracle import Scene, brute_report, brute_shoot


def _expected(engine: Engine, scene: Scene, op, q):
    if op == "SHOOT":
        h = brute_shoot(scene, q)
        if h is None:
            return {"hit": None}
        return {"hit": h[0], "point": [_num(c) for c in h[1]]}
    ids = brute_report(scene, q)
    if op == "REPORT":
        return {"ids": ids}
    if op == "EMPTY":
        return {"empty": not ids}
    k = len(ids)
    if k <= math.floor(engine.n * engine.approx.p):
        return {"count": k, "exact": True}
    return {"count": engine.approx.estimate(engine.n, set(ids)), "exact": False}


def _agree(op, got, want):
    if op == "SHOOT":
        if want["hit"] is None:
            return got["hit"] is None
        return got["hit"] == want["hit"] and got["point"] == want["point"]
    if op == "REPORT":
        ids = got["ids"]
        return ids == want["ids"] and len(set(ids)) == len(ids)
    if op == "EMPTY":
        return got["empty"] == want["empty"]
    return got["count"] == want["count"] and got["exact"] == want["exact"]


def _repro(op, q):
    if op == "SHOOT":
        return f"SHOOT {' '.join(str(_num(c)) for c in (*q.origin, *q.dir))}"
    return f"{op} {' '.join(str(_num(c)) for c in (*q.a, *q.b))}"


def verify(engine: Engine, scene: Scene, queries, stop_after=None):
    """Report dict with ``checked``, ``mismatches`` (each carrying the query
    line, engine answer and oracle answer) and ``ok``."""
    bad = []
    checked = 0
    for k, (op, q) in enumerate(queries):
        got = answer(engine, op, q)
        want = _expected(engine, scene, op, q)
        checked += 1
        if not _agree(op, got, want):
            bad.append({"index": k, "query": _repro(op, q), "engine": got, "oracle": want})
            if stop_after is not None and len(bad) >= stop_after:
                break
    return {"checked": checked, "mismatches": bad, "ok": not bad}
