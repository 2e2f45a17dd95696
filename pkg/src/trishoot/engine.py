"""Query engine: ray shooting, segment reporting/emptiness and approximate
counting over a triangle soup."""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .geom import (HitResult, Point3, Probe, Q, Ray3, SegRecord, Segment3, probe_seg,
                   probe_tri)
from .oracle import Scene
from .partition import Item, PartitionConfig, PartitionTree
from .wide import WideConfig, build_wide, clamp_storage
from .wide import _line_extent as line_extent


@dataclass
class QueryStats:
    triangle_tests: int = 0
    plane_tests: int = 0
    cells_visited: int = 0

    @property
    def primitive_tests(self):
        return self.triangle_tests + self.plane_tests

    def merge(self, other):
        self.triangle_tests += other.triangle_tests
        self.plane_tests += other.plane_tests
        self.cells_visited += other.cells_visited


@dataclass
class ApproxConfig:
    delta: object = Q("1/10")
    q: object = Q("1/100")
    eta: int = 13
    c: int = 2
    seed: int = 0


@dataclass
class EngineConfig:
    partition: PartitionConfig = field(default_factory=PartitionConfig)
    wide: WideConfig = field(default_factory=WideConfig)
    approx: ApproxConfig = field(default_factory=ApproxConfig)
    storage: object = None        # None means n ** 1.5

    def __post_init__(self):
        a = self.approx
        if not (0 < a.delta < 1 and 0 < a.q < 1):
            raise ValueError("delta and q must lie in (0, 1)")


class _Abort(Exception):
    pass


@dataclass
class ApproxSample:
    ids: list
    p: float
    delta: object
    q: object
    eta: int
    c: int
    size: int

    @classmethod
    def draw(cls, all_ids, cfg: ApproxConfig, rng):
        n = len(all_ids)
        delta = float(cfg.delta)
        p = min(1.0, 1.0 / (delta * math.sqrt(n))) if n else 1.0
        size = sample_size(n, delta, float(cfg.q), cfg.eta, cfg.c)
        ids = sorted(rng.sample(sorted(all_ids), size))
        return cls(ids, p, cfg.delta, cfg.q, cfg.eta, cfg.c, size)

    def estimate(self, n, hit_ids):
        """``round(n * |Z & hits| / |Z|)`` for a precomputed hit set."""
        if not self.ids:
            return 0
        k = sum(1 for i in self.ids if i in hit_ids)
        return round(n * k / len(self.ids))


def sample_size(n, delta, q, eta=13, c=2):
    """``ceil(c / (delta^2 p) * (eta ln(1/p) + ln(1/q)))`` clamped to ``n``."""
    if n == 0:
        return 0
    p = min(1.0, 1.0 / (delta * math.sqrt(n)))
    raw = c / (delta * delta * p) * (eta * math.log(1 / p) + math.log(1 / q))
    return min(n, max(1, math.ceil(raw)))


class Engine:
    def __init__(self, items, bbox, config: EngineConfig, records, kind="triangle"):
        self.config = config
        self.kind = kind
        self.records = records
        self.test = probe_tri if kind == "triangle" else probe_seg
        self.n = len(items)
        self.tree = PartitionTree(items, bbox, config.partition)
        self.bbox = bbox
        self.box_cell = self.tree.root_cell
        self.s = clamp_storage(config.storage, self.n)
        t = config.partition.branch_target
        for node in self.tree.nodes:
            if node.wide_ids:
                s_j = self.s / (t ** (1.5 * node.depth))
                node.wide_structure = build_wide(node.cell, node.wide_ids, config.wide,
                                                 records, s_j)
        self.approx = ApproxSample.draw(list(records), config.approx,
                                        random.Random(config.approx.seed))
        self._fault = None

    # -- construction

    @classmethod
    def build(cls, scene: Scene, config: EngineConfig = None):
        if not scene.triangles:
            raise ValueError("scene is empty")
        config = config or EngineConfig()
        items = [Item.of(t) for t in scene.triangles]
        eng = cls(items, scene.bbox, config, {r.id: r for r in scene.records})
        eng.scene = scene
        return eng

    @classmethod
    def from_segments(cls, segments, bbox, config: EngineConfig = None):
        """Narrow-only engine over segments (ids are list positions)."""
        config = config or EngineConfig(partition=PartitionConfig(allow_wide=False))
        items = [Item.of(s, i) for i, s in enumerate(segments)]
        recs = {i: SegRecord(i, s.a, s.b) for i, s in enumerate(segments)}
        return cls(items, bbox, config, recs, kind="segment")

    # -- probes

    def clip_ray(self, ray: Ray3):
        """The ray as a probe over its part inside the box, or None."""
        pr = Probe(ray.origin, ray.dir, 0, 0)
        ext = line_extent(self.box_cell, pr)
        if ext is None:
            return None
        lo, hi = max(ext[0], 0), ext[1]
        if lo > hi:
            return None
        return pr.with_range(lo, hi)

    def clip_segment(self, e):
        pr = e if isinstance(e, Probe) else Probe.from_segment(e)
        iv = self.box_cell.clip_probe(pr)
        if iv is None:
            return None
        return pr.with_range(*iv)

    # -- first hit

    def shoot(self, ray: Ray3, stats: QueryStats = None):
        pr = self.clip_ray(ray)
        if pr is None:
            return None
        best = self.first_hit_probe(pr, stats)
        if best is None:
            return None
        t, i = best
        return HitResult(i, pr.normalized(t, pr.lo, pr.hi) if pr.hi != pr.lo else 0, pr.point(t))

    def first_hit(self, e: Segment3, stats: QueryStats = None):
        """First triangle met walking from ``e.a`` to ``e.b``; ``t`` in [0, 1]."""
        base = Probe.from_segment(e)
        pr = self.clip_segment(base)
        if pr is None:
            return None
        best = self.first_hit_probe(pr, stats)
        if best is None:
            return None
        t, i = best
        return HitResult(i, t, pr.point(t))

    def first_hit_probe(self, pr: Probe, stats: QueryStats = None):
        stats = stats if stats is not None else QueryStats()
        return self._shoot(self.tree.root, pr, pr.lo, pr.hi, None, stats)

    def _scan(self, ids, pr, lo, hi, best, stats):
        recs, test = self.records, self.test
        for i in ids:
            stats.triangle_tests += 1
            t = test(pr, recs[i], lo, best[0] if best is not None else hi)
            if t is not None and (best is None or (t, i) < best):
                best = (t, i)
        return best

    def _shoot(self, node, pr, lo, hi, best, stats):
        stats.cells_visited += 1
        if node.wide_structure is not None:
            best = node.wide_structure.first_hit(pr, lo, hi, stats, best)
        if node.boundary_ids:
            best = self._scan(node.boundary_ids, pr, lo, hi, best, stats)
        if node.is_leaf:
            ids = node.narrow_ids if self._fault is not node else node.narrow_ids[1:]
            return self._scan(ids, pr, lo, hi, best, stats)
        lim = best[0] if best is not None else hi
        pieces, cop = self.tree.walk(node, pr, lo, lim)
        for pidx, a, b in cop:
            best = self._coplanar_first(node, pidx, pr, a, b, best, stats)
        for child, a, b in pieces:
            if best is not None:
                if a > best[0]:
                    break
                b = min(b, best[0])
            best = self._shoot(child, pr, a, b, best, stats)
        return best

    # -- reporting

    def report(self, e: Segment3, stats: QueryStats = None):
        pr = self.clip_segment(e)
        if pr is None:
            return []
        return sorted(self.report_probe(pr, stats))

    def report_probe(self, pr, stats=None, limit=None):
        stats = stats if stats is not None else QueryStats()
        out = set()
        self._report(self.tree.root, pr, pr.lo, pr.hi, out, stats, limit)
        return out

    def emptiness(self, e: Segment3, stats: QueryStats = None) -> bool:
        """True when no triangle meets ``e``; stops at the first hit."""
        pr = self.clip_segment(e)
        if pr is None:
            return True
        try:
            self.report_probe(pr, stats, limit=0)
        except _Abort:
            return False
        return True

    def _check(self, out, limit):
        if limit is not None and len(out) > limit:
            raise _Abort()

    def _scan_all(self, ids, pr, lo, hi, out, stats, limit):
        recs, test = self.records, self.test
        for i in ids:
            stats.triangle_tests += 1
            if i not in out and test(pr, recs[i], lo, hi) is not None:
                out.add(i)
                self._check(out, limit)

    def _report(self, node, pr, lo, hi, out, stats, limit):
        stats.cells_visited += 1
        if node.wide_structure is not None:
            node.wide_structure.report(pr, lo, hi, out, stats)
            self._check(out, limit)
        if node.boundary_ids:
            self._scan_all(node.boundary_ids, pr, lo, hi, out, stats, limit)
        if node.is_leaf:
            ids = node.narrow_ids if self._fault is not node else node.narrow_ids[1:]
            self._scan_all(ids, pr, lo, hi, out, stats, limit)
            return
        pieces, cop = self.tree.walk(node, pr, lo, hi)
        for pidx, a, b in cop:
            self._coplanar_report(node, pidx, pr, a, b, out, stats)
            self._check(out, limit)
        for child, a, b in pieces:
            self._report(child, pr, a, b, out, stats, limit)

    # -- counting

    def approx_count(self, e: Segment3, stats: QueryStats = None, sample: ApproxSample = None):
        """``(count, exact)``: exact when at most ``n p`` triangles meet ``e``,
        otherwise the sample estimate."""
        sample = sample or self.approx
        threshold = math.floor(self.n * sample.p)
        pr = self.clip_segment(e)
        if pr is None:
            return 0, True
        try:
            out = self.report_probe(pr, stats, limit=threshold)
        except _Abort:
            pass
        else:
            return len(out), True
        stats = stats if stats is not None else QueryStats()
        hits = set()
        recs, test = self.records, self.test
        for i in sample.ids:
            stats.triangle_tests += 1
            if test(pr, recs[i], pr.lo, pr.hi) is not None:
                hits.add(i)
        return sample.estimate(self.n, hits), False

    def is_heavy(self, e: Segment3) -> bool:
        pr = self.clip_segment(e)
        if pr is None:
            return False
        try:
            self.report_probe(pr, None, limit=math.floor(self.n * self.approx.p))
        except _Abort:
            return True
        return False

    def resample(self, seed) -> ApproxSample:
        """A fresh sample with the engine's parameters; the engine is unchanged."""
        return ApproxSample.draw(list(self.records), self.config.approx, random.Random(seed))

    # -- coplanar pieces

    def _section(self, node, pidx):
        from .coplanar import build_section
        return node.coplanar_structure(pidx, lambda nd, h: build_section(self, nd, h))

    def _coplanar_first(self, node, pidx, pr, lo, hi, best, stats):
        sec = self._section(node, pidx)
        return sec.first_hit(pr, lo, hi, best, stats)

    def _coplanar_report(self, node, pidx, pr, lo, hi, out, stats):
        sec = self._section(node, pidx)
        sec.report(pr, lo, hi, out, stats)

    # -- telemetry

    def stored_ids(self):
        total = 0
        for node in self.tree.nodes:
            total += len(node.narrow_ids) + len(node.wide_ids) + len(node.boundary_ids)
            if node.wide_structure is not None:
                total += node.wide_structure.sh.stored
        return total

    def inject_fault(self):
        """Test hook: drop the first id of the fullest leaf list."""
        leaf = max(self.tree.leaves(), key=lambda n: len(n.narrow_ids))
        self._fault = leaf
        return leaf


# -- batch files ------------------------------------------------------------------

def parse_query(line):
    parts = line.split()
    if not parts or parts[0].startswith("#"):
        return None
    op = parts[0].upper()
    if op not in ("SHOOT", "REPORT", "EMPTY", "ACOUNT") or len(parts) != 7:
        raise ValueError(f"bad query line: {line.strip()}")
    c = [Q(x) for x in parts[1:]]
    a = Point3(*c[:3])
    if op == "SHOOT":
        return op, Ray3(a, tuple(c[3:]))
    return op, Segment3(a, Point3(*c[3:]))


def _num(x):
    if isinstance(x, int):
        return x
    return str(x) if x.denominator != 1 else int(x.numerator)


def answer(engine: Engine, op, q, stats=None):
    if op == "SHOOT":
        h = engine.shoot(q, stats)
        if h is None:
            return {"op": op, "hit": None}
        return {"op": op, "hit": h.triangle_id, "t": _num(h.t), "point": [_num(c) for c in h.point]}
    if op == "REPORT":
        return {"op": op, "ids": engine.report(q, stats)}
    if op == "EMPTY":
        return {"op": op, "empty": engine.emptiness(q, stats)}
    k, exact = engine.approx_count(q, stats)
    return {"op": op, "count": k, "exact": exact}


def run_batch(engine: Engine, lines):
    """Yield one JSON line per query line."""
    for line in lines:
        parsed = parse_query(line)
        if parsed is None:
            continue
        yield json.dumps(answer(engine, *parsed))
