"""Queries along a cutting plane: the narrow items of a node are cut by the
plane, their cross-sections become planar segments, and the part of a probe
lying in the plane is answered by an :class:`ArcStructure`.

Cross-sections that are single points, and items lying in the plane, are
kept in a side list and tested directly in 3D.
"""
from __future__ import annotations

from .arcs import Arc2, Ray2
from .arcstruct import ArcStructure
from .geom import div


def _drop_axis(normal):
    return max(range(3), key=lambda k: abs(normal[k]))


def plane_section(verts, h):
    """Intersection of a triangle or segment with plane ``h``: ``None``,
    ``("in", None)`` when it lies in the plane, or ``("pts", [points])``."""
    s = [h.side(v) for v in verts]
    if all(x == 0 for x in s):
        return "in", None
    if all(x > 0 for x in s) or all(x < 0 for x in s):
        return None
    pts = [v for v, x in zip(verts, s) if x == 0]
    m = len(verts)
    for k in range(m if m == 3 else 1):
        a, b = verts[k], verts[(k + 1) % m]
        sa, sb = s[k], s[(k + 1) % m]
        if (sa > 0 > sb) or (sa < 0 < sb):
            f = div(sa, sa - sb)
            pts.append(tuple(a[j] + f * (b[j] - a[j]) for j in range(3)))
    uniq = []
    for p in pts:
        if p not in uniq:
            uniq.append(p)
    return "pts", uniq


class PlaneSection:
    def __init__(self, engine, node, h):
        self.engine = engine
        self.h = h
        ax = _drop_axis(h.normal)
        self.keep = tuple(k for k in range(3) if k != ax)
        self.side = []
        segs = []
        items = engine.tree.items
        for i in sorted(node.narrow_ids):
            sec = plane_section(items[i].verts, h)
            if sec is None:
                continue
            kind, pts = sec
            if kind == "in" or len(pts) == 1:
                self.side.append(i)
            else:
                segs.append((i, self._proj(pts[0]), self._proj(pts[1])))
        self.shear = _shear_for([(p, q) for _, p, q in segs])
        self.owner = []
        arcs = []
        for i, p, q in segs:
            p, q = self._sheared(p), self._sheared(q)
            arcs.append(Arc2.segment(len(arcs), p[0], p[1], q[0], q[1]))
            self.owner.append(i)
        self.arcs = ArcStructure(arcs)

    def _proj(self, p):
        return (p[self.keep[0]], p[self.keep[1]])

    def _sheared(self, p):
        return (p[0] + self.shear * p[1], p[1])

    def _planar(self, pr, lo, hi):
        o = self._sheared(self._proj(pr.point(lo)))
        d = self._sheared(self._proj(pr.d))
        return Ray2(o[0], o[1], d[0], d[1], hi - lo)

    def first_hit(self, pr, lo, hi, best, stats):
        if best is not None:
            if best[0] < lo:
                return best
            hi = min(hi, best[0])
        recs, test = self.engine.records, self.engine.test
        for i in self.side:
            stats.triangle_tests += 1
            t = test(pr, recs[i], lo, hi)
            if t is not None and (best is None or (t, i) < best):
                best = (t, i)
        if len(self.arcs):
            hit = self.arcs.first_hit(self._planar(pr, lo, hi), stats)
            if hit is not None:
                t, k = hit
                cand = (lo + t, self.owner[k])
                if best is None or cand < best:
                    best = cand
        return best

    def report(self, pr, lo, hi, out, stats):
        recs, test = self.engine.records, self.engine.test
        for i in self.side:
            if i in out:
                continue
            stats.triangle_tests += 1
            if test(pr, recs[i], lo, hi) is not None:
                out.add(i)
        if len(self.arcs):
            for k in self.arcs.segment_report(self._planar(pr, lo, hi), stats):
                out.add(self.owner[k])


def _shear_for(pairs):
    """Smallest integer ``lam >= 0`` leaving no segment vertical under
    ``x -> x + lam * y``."""
    bad = set()
    for p, q in pairs:
        dx, dy = q[0] - p[0], q[1] - p[1]
        if dy == 0:
            continue
        lam = div(-dx, dy)
        if lam >= 0 and lam == int(lam):
            bad.add(int(lam))
    lam = 0
    while lam in bad:
        lam += 1
    return lam


def build_section(engine, node, h):
    return PlaneSection(engine, node, h)
