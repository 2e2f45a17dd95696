"""Convex polytope cells given as intersections of closed halfspaces.

A halfspace is a ``Plane3`` ``h``; the inside is ``h.side(x) <= 0``.
"""
from __future__ import annotations

import math

from .geom import Plane3, Point3, Probe, cross, div, dot, sub


def box_planes(lo, hi):
    """Six halfspaces of the axis-aligned box ``[lo, hi]``."""
    planes = []
    for k in range(3):
        n = [0, 0, 0]
        n[k] = 1
        planes.append(Plane3(tuple(n), hi[k]))
        n = [0, 0, 0]
        n[k] = -1
        planes.append(Plane3(tuple(n), -lo[k]))
    return planes


def flip(h: Plane3) -> Plane3:
    return Plane3(tuple(-c for c in h.normal), -h.offset)


def clip_polygon(poly, h: Plane3):
    """Sutherland-Hodgman against the closed halfspace ``h.side <= 0``."""
    if not poly:
        return poly
    out = []
    sides = [h.side(p) for p in poly]
    n = len(poly)
    for i in range(n):
        p, sp = poly[i], sides[i]
        q, sq = poly[(i + 1) % n], sides[(i + 1) % n]
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            t = div(sp, sp - sq)
            out.append(Point3(p[0] + t * (q[0] - p[0]),
                              p[1] + t * (q[1] - p[1]),
                              p[2] + t * (q[2] - p[2])))
    # drop consecutive duplicates
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def centroid(points):
    n = len(points)
    return Point3(div(sum(p[0] for p in points), n),
                  div(sum(p[1] for p in points), n),
                  div(sum(p[2] for p in points), n))


def plane_square(h: Plane3, radius):
    """A square in plane ``h`` containing every point of the plane within
    ``radius`` of the origin's projection."""
    n = h.normal
    k = min(range(3), key=lambda i: abs(n[i]))
    e = [0, 0, 0]
    e[k] = 1
    u = cross(n, e)
    v = cross(n, u)
    nn = dot(n, n)
    p0 = tuple(div(c * h.offset, nn) for c in n)
    nu = math.sqrt(float(dot(u, u)))
    nv = math.sqrt(float(dot(v, v)))
    m = int(4 * radius / min(nu, nv)) + 2
    return [Point3(*(p0[i] + sa * m * u[i] + sb * m * v[i] for i in range(3)))
            for sa, sb in ((-1, -1), (1, -1), (1, 1), (-1, 1))]


class Cell:
    """Closed convex polytope; the root cell of a scene is its box B0."""

    def __init__(self, planes, depth=0, radius=None):
        self.planes = tuple(planes)
        self.depth = depth
        self._radius = radius
        self._faces = None
        self._bbox = None

    def split(self, h: Plane3):
        """Children on the ``side <= 0`` and ``side >= 0`` sides of ``h``."""
        return (Cell(self.planes + (h,), self.depth, self._radius),
                Cell(self.planes + (flip(h),), self.depth, self._radius))

    # -- point / segment tests

    def contains(self, p, strict=False) -> bool:
        if strict:
            return all(h.side(p) < 0 for h in self.planes)
        return all(h.side(p) <= 0 for h in self.planes)

    def clip_probe(self, pr: Probe, lo=None, hi=None):
        """Closed parameter interval of the probe inside the cell, or None."""
        if lo is None:
            lo, hi = pr.lo, pr.hi
        o, d = pr.o, pr.d
        for h in self.planes:
            n = h.normal
            a = n[0] * o[0] + n[1] * o[1] + n[2] * o[2] - h.offset
            b = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
            if b == 0:
                if a > 0:
                    return None
                continue
            t = div(-a, b)
            if b > 0:
                if t < hi:
                    hi = t
            elif t > lo:
                lo = t
            if lo > hi:
                return None
        return lo, hi

    def probe_meets_open(self, pr: Probe, lo=None, hi=None) -> bool:
        iv = self.clip_probe(pr, lo, hi)
        if iv is None:
            return False
        mid = pr.point(div(iv[0] + iv[1], 2))
        return self.contains(mid, strict=True)

    def segment_meets_open(self, a, b) -> bool:
        return self.probe_meets_open(Probe(a, sub(b, a), 0, 1))

    def segment_meets(self, a, b) -> bool:
        return self.clip_probe(Probe(a, sub(b, a), 0, 1)) is not None

    def clip(self, poly):
        for h in self.planes:
            poly = clip_polygon(poly, h)
            if not poly:
                return poly
        return poly

    def polygon_meets_open(self, poly) -> bool:
        """``poly`` is a convex polygon already clipped to the closed cell."""
        if not poly:
            return False
        return self.contains(centroid(poly), strict=True)

    # -- boundary

    @classmethod
    def box(cls, lo, hi):
        r = max(abs(float(c)) for c in tuple(lo) + tuple(hi))
        return cls(box_planes(lo, hi), 0, 2 * r + 2)

    def radius(self):
        if self._radius is None:
            raise ValueError("cell has no bounding radius; build it from Cell.box")
        return self._radius

    @property
    def faces(self):
        """List of ``(plane index, polygon)`` for each 2-dimensional face."""
        if self._faces is None:
            faces = []
            seen = set()
            for i, h in enumerate(self.planes):
                key = _plane_key(h)
                if key in seen:
                    continue
                poly = plane_square(h, self.radius())
                for j, g in enumerate(self.planes):
                    if j != i:
                        poly = clip_polygon(poly, g)
                        if not poly:
                            break
                if len(poly) >= 3 and _is_2d(poly):
                    faces.append((i, poly))
                    seen.add(key)
            self._faces = faces
        return self._faces

    @property
    def vertices(self):
        pts = set()
        for _, poly in self.faces:
            pts.update(poly)
        return pts

    @property
    def bbox(self):
        if self._bbox is None:
            vs = self.vertices
            self._bbox = (tuple(min(p[k] for p in vs) for k in range(3)),
                          tuple(max(p[k] for p in vs) for k in range(3)))
        return self._bbox

    def is_empty_interior(self) -> bool:
        vs = list(self.vertices)
        if len(vs) < 4:
            return True
        return not self.contains(centroid(vs), strict=True)


def _plane_key(h: Plane3):
    """Normalized representation so duplicate halfspaces share a key."""
    n = h.normal
    k = next(i for i in range(3) if n[i] != 0)
    s = abs(n[k])
    return tuple(div(c, s) for c in n) + (div(h.offset, s),)


def _is_2d(poly) -> bool:
    a = poly[0]
    for i in range(1, len(poly) - 1):
        if any(cross(sub(poly[i], a), sub(poly[i + 1], a))):
            return True
    return False
