"""Brute-force reference answers for every query type.

These scans are the trust anchor for the test-suite: linear (or worse) per
query, no spatial acceleration.  ``BatchOracle`` is the same linear scan
written with numpy integer arrays; its answers are cross-checked against the
pure-Python functions in the tests.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .geom import (HitResult, Point3, Probe, TriRecord, add, cross,
                   div, dot, orient3d, probe_tri, scale, sub)


@dataclass
class Scene:
    triangles: list
    bbox: tuple = None

    def __post_init__(self):
        if self.bbox is None:
            self.bbox = scene_box(self.triangles)
        self._records = None

    @property
    def records(self):
        if self._records is None:
            self._records = [TriRecord(t) for t in self.triangles]
        return self._records

    def __len__(self):
        return len(self.triangles)

    def by_id(self):
        return {t.id: t for t in self.triangles}


def scene_box(triangles, margin=1):
    """Axis-aligned bounding box inflated by ``margin`` on each side."""
    if not triangles:
        return ((-margin,) * 3, (margin,) * 3)
    pts = [v for t in triangles for v in t.vertices]
    lo = tuple(min(p[k] for p in pts) - margin for k in range(3))
    hi = tuple(max(p[k] for p in pts) + margin for k in range(3))
    return lo, hi


def _as_probe(e):
    return e if isinstance(e, Probe) else Probe.from_segment(e)


def brute_first_hit(scene: Scene, e):
    pr = _as_probe(e)
    best = None
    for rec in scene.records:
        t = probe_tri(pr, rec)
        if t is None:
            continue
        if best is None or (t, rec.id) < best:
            best = (t, rec.id)
    if best is None:
        return None
    return HitResult(best[1], best[0], pr.point(best[0]))


def ray_box_probe(ray, box):
    """Probe over the part of ``ray`` inside the closed box, or None."""
    lo, hi = 0, None
    for o, d, m0, m1 in zip(ray.origin, ray.dir, box[0], box[1]):
        if d == 0:
            if not (m0 <= o <= m1):
                return None
            continue
        a, b = div(m0 - o, d), div(m1 - o, d)
        if a > b:
            a, b = b, a
        lo = max(lo, a)
        hi = b if hi is None else min(hi, b)
    if hi is None or lo > hi:
        return None
    return Probe(ray.origin, ray.dir, lo, hi)


def brute_shoot(scene: Scene, ray):
    """First triangle met by a ray: ``(id, exact point)`` or None."""
    pr = ray_box_probe(ray, scene.bbox)
    if pr is None:
        return None
    h = brute_first_hit(scene, pr)
    return None if h is None else (h.triangle_id, h.point)


def brute_hits(scene: Scene, e):
    """All ``(t, id)`` entry parameters, sorted."""
    pr = _as_probe(e)
    out = []
    for rec in scene.records:
        t = probe_tri(pr, rec)
        if t is not None:
            out.append((t, rec.id))
    out.sort()
    return out


def brute_report(scene: Scene, e):
    return sorted(i for _, i in brute_hits(scene, e))


def _line_pts(x):
    return (x.a, x.b) if hasattr(x, "a") else (x[0], x[1])


def lines_intersect(p1, q1, p2, q2) -> bool:
    """Two lines (each through two distinct points) meet in exactly one point."""
    return orient3d(p1, q1, p2, q2) == 0 and any(cross(sub(q1, p1), sub(q2, p2)))


def brute_line_pairs(red, blue):
    """All ``(i, j)`` with red line ``i`` crossing blue line ``j``."""
    pairs = []
    for i, r in enumerate(red):
        p1, q1 = _line_pts(r)
        for j, b in enumerate(blue):
            if lines_intersect(p1, q1, *_line_pts(b)):
                pairs.append((i, j))
    return pairs


def brute_arc_first_hit(arcs, rho):
    """First arc met by the planar ray ``rho``; ``(arc id, point)`` or None."""
    from .arcs import arc_ray_hit_param
    best = None
    for arc in arcs:
        t = arc_ray_hit_param(arc, rho)
        if t is None:
            continue
        if best is None or t < best[0] or (t == best[0] and arc.id < best[1].id):
            best = (t, arc)
    if best is None:
        return None
    t, arc = best
    return arc.id, rho.point(t)


def _edge_tri_points(tris):
    pts = set()
    for t in tris:
        for a, b in t.edges:
            pr = Probe(a, sub(b, a), 0, 1)
            for s in tris:
                if s.id == t.id:
                    continue
                rec = TriRecord(s)
                u = probe_tri(pr, rec)
                if u is None:
                    continue
                pts.add(pr.point(u))
                # a coplanar edge can cross a triangle along an interval
                den = dot(rec.n, pr.d)
                if den == 0:
                    last = _coplanar_exit(pr, rec)
                    pts.add(pr.point(last))
    return pts


def _coplanar_exit(pr, rec):
    lo, hi = 0, 1
    for p, u in zip(rec.v, rec.eu):
        alpha = dot(cross(u, sub(pr.o, p)), rec.n)
        beta = dot(cross(u, pr.d), rec.n)
        if beta == 0:
            continue
        t = div(-alpha, beta)
        if beta > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
    return hi


def three_plane_point(t1, t2, t3):
    """Unique common point of the three supporting planes, or None."""
    n1, n2, n3 = (TriRecord(t) for t in (t1, t2, t3))
    det = dot(n1.n, cross(n2.n, n3.n))
    if det == 0:
        return None
    v = add(add(scale(cross(n2.n, n3.n), n1.nv), scale(cross(n3.n, n1.n), n2.nv)),
            scale(cross(n1.n, n2.n), n3.nv))
    return Point3(div(v[0], det), div(v[1], det), div(v[2], det))


def brute_arrangement_vertices(scene: Scene):
    """Triple-triangle points plus edge-triangle points, deduplicated."""
    from .geom import point_in_triangle
    tris = scene.triangles
    pts = _edge_tri_points(tris)
    for a, b, c in combinations(tris, 3):
        p = three_plane_point(a, b, c)
        if p is None:
            continue
        if point_in_triangle(p, a) and point_in_triangle(p, b) and point_in_triangle(p, c):
            pts.add(p)
    return sorted(pts)


# -- vectorized scan -----------------------------------------------------------

_LIMIT = 1 << 18


class BatchOracle:
    """numpy linear scan over integer scenes; exact for ``|coord| < 2**18``.

    The integer sign tests pick the triangles whose supporting line crossing
    passes through them; the parameter comparison is finished in Python
    rationals.  Falls back to the pure scan for non-integer input.
    """

    def __init__(self, scene: Scene):
        self.scene = scene
        self.ok = all(isinstance(c, int) and abs(c) < _LIMIT
                      for t in scene.triangles for v in t.vertices for c in v)
        if not self.ok or not scene.triangles:
            return
        recs = scene.records
        self.ids = np.array([r.id for r in recs], dtype=np.int64)
        self.n = np.array([r.n for r in recs], dtype=np.int64)
        self.nv = np.array([r.nv for r in recs], dtype=np.int64)
        self.eu = np.array([r.eu for r in recs], dtype=np.int64)   # (n, 3, 3)
        self.ev = np.array([r.ev for r in recs], dtype=np.int64)
        self.recs = recs

    def _usable(self, pr: Probe):
        return self.ok and self.scene.triangles and all(
            isinstance(c, int) and abs(c) < _LIMIT for c in pr.o + pr.d)

    def candidates(self, pr: Probe):
        """Indices of triangles the infinite line passes through, plus
        triangles coplanar with the line (decided later in Python)."""
        d = np.array(pr.d, dtype=np.int64)
        o = np.array(pr.o, dtype=np.int64)
        m = np.array(pr.m, dtype=np.int64)
        den = self.n @ d
        num = self.nv - self.n @ o
        side = self.ev @ d + self.eu @ m           # (n, 3)
        pos = (side > 0).any(axis=1)
        neg = (side < 0).any(axis=1)
        through = (den != 0) & ~(pos & neg)
        coplanar = (den == 0) & (num == 0)
        return np.nonzero(through | coplanar)[0]

    def hits(self, e):
        pr = _as_probe(e)
        if not self._usable(pr):
            return brute_hits(self.scene, pr)
        out = []
        for k in self.candidates(pr):
            rec = self.recs[k]
            t = probe_tri(pr, rec)
            if t is not None:
                out.append((t, rec.id))
        out.sort()
        return out

    def first_hit(self, e):
        pr = _as_probe(e)
        h = self.hits(pr)
        if not h:
            return None
        t, i = h[0]
        return HitResult(i, t, pr.point(t))

    def report(self, e):
        return sorted(i for _, i in self.hits(e))

    def hit_mask(self, e):
        """Boolean array over scene order: triangle meets ``e``."""
        mask = np.zeros(len(self.scene.triangles), dtype=bool)
        ids = set(self.report(e))
        for k, t in enumerate(self.scene.triangles):
            if t.id in ids:
                mask[k] = True
        return mask
