"""Multi-level structure over planar arcs: line, ray and segment detection,
segment reporting and first-hit ray shooting.

Arcs are split into two convex families: segments plus lower circular arcs,
and upper circular arcs reflected through ``y -> -y``.  Leftward queries run
in the x-mirrored frame so every ray seen by a level points right.

A query runs a *chain* of levels.  Each level maps a stored id tuple to
canonical sub-tuples satisfying one condition plus a few undecided ids; the
undecided ids and any tuple at or below the leaf size are settled by the
exact intersection test of the whole query.  ``Or`` nodes branch a chain
into alternatives that share the remaining tail.
"""
from __future__ import annotations

import math
import threading

from .arcs import (Ray2, arc_ray_hit_param, convex_view, dual_class,
                   point_on_arc, primal_class, ray_meets_arc)
from .cutting import BoxCutting, KDHalfplane, SortedTree, SpanTree, dyadic_domain
from .geom import div

DUAL_SLOPE_BOUND = 256
LEAF_SIZE = 8


class ArcStats:
    __slots__ = ("triangle_tests", "plane_tests", "cells_visited")

    def __init__(self):
        self.triangle_tests = 0
        self.plane_tests = 0
        self.cells_visited = 0


class Or:
    __slots__ = ("alts",)

    def __init__(self, alts):
        self.alts = alts


class _Ctx:
    """A rightward query in one frame: apex ``(qx, qy)`` and line ``y = a*x + b``."""

    __slots__ = ("qx", "qy", "a", "b", "f")

    def __init__(self, qx, qy, a):
        self.qx, self.qy, self.a = qx, qy, a
        self.b = qy - a * qx
        fa = float(a)
        self.f = (float(qx), float(qy), fa, float(self.b), fa / math.sqrt(1.0 + fa * fa))


class _Family:
    """Convex arcs of one family seen in frame ``(sx, sy)``."""

    def __init__(self, arcs, sx, sy, leaf_size):
        self.sx, self.sy = sx, sy
        self.arcs = {a.id: a.transformed(sx, sy) for a in arcs}
        self.all = tuple(sorted(self.arcs))
        self.leaf_size = leaf_size
        fl = [a.floats() for a in self.arcs.values()]
        if fl:
            xs = [c for f in fl for c in (f[0], f[2])]
            ys = [c for f in fl for c in (f[1], f[3])] + [f[5] - f[6] for f in fl if f[6]]
            self.mag = max(a.magnitude() for a in self.arcs.values())
        else:
            xs, ys, self.mag = [0.0], [0.0], 1.0
        self.primal = dyadic_domain(min(xs), max(xs), min(ys), max(ys))
        A = DUAL_SLOPE_BOUND
        B = 1 << math.ceil(math.log2(self.mag * (1 + A) + 2))
        self.dual = (-A, A, -B, B)
        self.eps = 1e-6 * (1.0 + self.mag)
        self._cache = {}
        self._lock = threading.Lock()

    def structure(self, level, ids):
        key = (level, id(ids))
        hit = self._cache.get(key)
        if hit is None:
            with self._lock:
                hit = self._cache.get(key)
                if hit is None:
                    hit = (ids, self._build(level, ids))
                    self._cache[key] = hit
        return hit[1]

    def _build(self, level, ids):
        arcs = self.arcs
        if level == "line":
            return BoxCutting(ids, lambda i, box: dual_class(arcs[i], box), self.dual)
        if level in ("ux_ge", "ux_gt"):
            return SortedTree([(arcs[i].ux, i) for i in ids])
        if level == "vx_lt":
            return SortedTree([(arcs[i].vx, i) for i in ids])
        if level == "span":
            return SpanTree([(arcs[i].ux, arcs[i].vx, i) for i in ids])
        if level in ("above", "below", "not_above"):
            eps = self.eps
            return BoxCutting(ids, lambda i, box: primal_class(arcs[i], box, level, eps), self.primal)
        if level == "tangent":
            segs = SortedTree([(arcs[i].slope(), i) for i in ids if arcs[i].kind == "S"])
            circ = KDHalfplane([(arcs[i].floats()[4], arcs[i].floats()[6], i)
                                for i in ids if arcs[i].kind == "C"])
            return segs, circ
        if level == "v_above":
            return KDHalfplane([(arcs[i].floats()[2], arcs[i].floats()[3], i) for i in ids])
        raise ValueError(level)

    def query(self, level, ids, c):
        st = self.structure(level, ids)
        if level == "line":
            return st.query(c.a, c.b, ids)
        if level == "ux_ge":
            return st.greater(c.qx, strict=False), ()
        if level == "ux_gt":
            return st.greater(c.qx, strict=True), ()
        if level == "vx_lt":
            return st.less(c.qx, strict=True), ()
        if level == "span":
            return st.stab(c.qx), ()
        if level in ("above", "below", "not_above"):
            return st.query(c.qx, c.qy, ids)
        fqx, fqy, fa, fb, k = c.f
        if level == "tangent":
            segs, circ = st
            sets = segs.less(c.a, strict=True)
            more, singles = circ.query(-fqx, 1.0, k, 1e-9 * (1.0 + 4 * self.mag))
            return sets + more, singles
        if level == "v_above":
            eps = 1e-9 * (1.0 + self.mag * (2.0 + abs(fa)) + abs(fb))
            return st.query(-fb, -fa, 1.0, eps)
        raise ValueError(level)


class _Run:
    """One query execution: walks a chain over canonical sets."""

    __slots__ = ("final", "report", "out", "stats", "leaf")

    def __init__(self, final, report, stats, leaf):
        self.final = final
        self.report = report
        self.out = set()
        self.stats = stats
        self.leaf = leaf

    def _test(self, i):
        if i in self.out:
            return False
        self.stats.triangle_tests += 1
        if self.final(i):
            self.out.add(i)
            return True
        return False

    def run(self, chain, ids):
        """Returns True when detection can stop."""
        if not ids:
            return False
        if not chain:
            if self.report:
                self.out.update(ids)
                return False
            self.out.update(ids[:1])
            return True
        if len(ids) <= self.leaf:
            found = False
            for i in ids:
                if self._test(i):
                    found = True
                    if not self.report:
                        return True
            return found and not self.report
        head = chain[0]
        if isinstance(head, Or):
            tail = chain[1:]
            for alt in head.alts:
                if self.run(alt + tail, ids):
                    return True
            return False
        fam, level, ctx = head
        self.stats.cells_visited += 1
        sets, singles = fam.query(level, ids, ctx)
        for i in singles:
            if self._test(i) and not self.report:
                return True
        rest = chain[1:]
        for s in sets:
            if self.run(rest, s):
                return True
        return False


class ArcStructure:
    def __init__(self, arcs, leaf_size=LEAF_SIZE):
        self.arcs = list(arcs)
        self.by_id = {a.id: a for a in self.arcs}
        if len(self.by_id) != len(self.arcs):
            raise ValueError("arc ids must be distinct")
        self.leaf_size = leaf_size
        self._lower = [a for a in self.arcs if a.convex]
        self._upper = [a for a in self.arcs if not a.convex]
        self._fams = {}
        self._lock = threading.Lock()
        self._span = SpanTree([(a.ux, a.vx, a.id) for a in self.arcs])
        self._shoot = None

    def __len__(self):
        return len(self.arcs)

    def family(self, sx, sy):
        key = (sx, sy)
        fam = self._fams.get(key)
        if fam is None:
            with self._lock:
                fam = self._fams.get(key)
                if fam is None:
                    src = self._lower if sy == 1 else self._upper
                    fam = self._fams[key] = _Family(src, sx, sy, self.leaf_size)
        return fam

    def _families(self):
        return [sy for sy, src in ((1, self._lower), (-1, self._upper)) if src]

    # -- lines

    def line_hits(self, a, b, stats=None):
        """(hit?, canonical tuples of hit arcs).  Tuples are pairwise disjoint."""
        stats = stats or ArcStats()
        sets = []
        for sy in self._families():
            fam = self.family(1, sy)
            c = _Ctx(0, sy * b, sy * a)
            stats.cells_visited += 1
            got, singles = fam.query("line", fam.all, c)
            sets.extend(got)
            for i in singles:
                stats.triangle_tests += 1
                if _line_meets(self.by_id[i], a, b):
                    sets.append((i,))
        return bool(sets), sets

    # -- rays

    def _ray_chain(self, fam, c, with_line=True):
        line = [(fam, "line", c)] if with_line else []
        return Or([
            line + [(fam, "ux_ge", c)],
            line + [(fam, "span", c), (fam, "below", c), (fam, "tangent", c)],
            [(fam, "span", c), (fam, "above", c), (fam, "v_above", c)],
        ])

    def _vertical(self, rho, final, report, stats):
        run = _Run(final, report, stats, self.leaf_size)
        for s in self._span.stab(rho.ox):
            for i in s:
                if run._test(i) and not report:
                    return run
        return run

    def _ray_run(self, rho, report, stats):
        final = lambda i: ray_meets_arc(self.by_id[i], rho)
        if rho.dx == 0:
            return self._vertical(rho, final, report, stats)
        run = _Run(final, report, stats, self.leaf_size)
        sx = 1 if rho.dx > 0 else -1
        for sy in self._families():
            fam = self.family(sx, sy)
            c = _Ctx(sx * rho.ox, sy * rho.oy, div(sy * rho.dy, sx * rho.dx))
            if run.run([self._ray_chain(fam, c)], fam.all) and not report:
                break
        return run

    def ray_hits(self, rho, stats=None):
        if rho.tmax is not None:
            return self.segment_hits(rho, stats)
        return bool(self._ray_run(rho, False, stats or ArcStats()).out)

    # -- segments

    def _segment_run(self, s, report, stats):
        final = lambda i: ray_meets_arc(self.by_id[i], s)
        p, q = s.origin, s.end()
        if p == q:
            return self._vertical(s, lambda i: point_on_arc(self.by_id[i], *p), report, stats)
        if p[0] == q[0]:
            return self._vertical(s, final, report, stats)
        if p[0] > q[0]:
            p, q = q, p
        slope = div(q[1] - p[1], q[0] - p[0])
        run = _Run(final, report, stats, self.leaf_size)
        for sy in self._families():
            fam, mir = self.family(1, sy), self.family(-1, sy)
            cp = _Ctx(p[0], sy * p[1], sy * slope)
            cq = _Ctx(q[0], sy * q[1], sy * slope)
            cq_m = _Ctx(-q[0], sy * q[1], -sy * slope)
            outside = Or([
                [(fam, "ux_gt", cp)], [(fam, "vx_lt", cp)], [(fam, "span", cp), (fam, "not_above", cp)],
                [(fam, "ux_gt", cq)], [(fam, "vx_lt", cq)], [(fam, "span", cq), (fam, "not_above", cq)],
            ])
            chain = [(fam, "line", cp), outside,
                     self._ray_chain(fam, cp, with_line=False),
                     self._ray_chain(mir, cq_m, with_line=False)]
            if run.run(chain, fam.all) and not report:
                break
        return run

    def segment_hits(self, s, stats=None):
        return bool(self._segment_run(s, False, stats or ArcStats()).out)

    def segment_report(self, s, stats=None):
        return sorted(self._segment_run(s, True, stats or ArcStats()).out)

    # -- first hit

    def _shoot_cutting(self):
        if self._shoot is None:
            with self._lock:
                if self._shoot is None:
                    views = {a.id: convex_view(a) for a in self.arcs}
                    fl = [a.floats() for a in self.arcs]
                    xs = [c for f in fl for c in (f[0], f[2])]
                    ys = [c for f in fl for c in (f[1], f[3])]
                    ys += [f[5] + s * f[6] for a, f in zip(self.arcs, fl) if f[6] for s in (-1, 1)]
                    mag = max((a.magnitude() for a in self.arcs), default=1.0)
                    eps = 1e-6 * (1.0 + mag)

                    def meets(i, box):
                        sy, arc = views[i]
                        if sy == -1:
                            box = (box[0], box[1], -box[3], -box[2])
                        return primal_class(arc, box, "meets", eps)

                    ids = tuple(sorted(self.by_id))
                    self._shoot = BoxCutting(ids, meets, dyadic_domain(min(xs), max(xs), min(ys), max(ys)))
        return self._shoot

    def first_hit(self, rho, stats=None):
        """``(t, arc id)`` of the first arc met by ``rho`` or None."""
        stats = stats or ArcStats()
        if not self.arcs:
            return None
        cut = self._shoot_cutting()
        for leaf, a, b in cut.walk(rho, 0, rho.tmax):
            if not leaf.cross:
                continue
            stats.cells_visited += 1
            start = rho.point(a)
            sub = Ray2(start[0], start[1], rho.dx, rho.dy, b - a)
            if a != b and not self.segment_hits(sub, stats):
                continue
            best = None
            for i in leaf.cross:
                stats.triangle_tests += 1
                t = arc_ray_hit_param(self.by_id[i], sub)
                if t is not None and (best is None or (t, i) < best):
                    best = (t, i)
            if best is not None:
                return best[0] + a, best[1]
            if a != b:
                raise AssertionError("segment detection and leaf scan disagree")
        return None

    def ray_shoot_arcs(self, rho, stats=None):
        """``(arc id, exact hit point)`` or None."""
        hit = self.first_hit(rho, stats)
        if hit is None:
            return None
        t, i = hit
        return i, rho.point(t)


def _line_meets(arc, a, b):
    from .arcs import line_meets_arc
    return line_meets_arc(arc, a, b)
