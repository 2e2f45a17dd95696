"""Exact geometric primitives and predicates.

Coordinates are Python ints or rationals (``gmpy2.mpq`` when available,
``fractions.Fraction`` otherwise).  Nothing in here ever touches a float.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

try:
    from gmpy2 import mpq as _rational
except ImportError:  # pragma: no cover
    _rational = Fraction


def Q(value):
    """Convert ``value`` (int, rational, exact decimal text) to an exact scalar.

    Integers stay Python ints; everything else becomes a rational.
    """
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        value = Fraction(value.strip())
        if value.denominator == 1:
            return int(value.numerator)
    if isinstance(value, float):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return _rational(value.numerator, value.denominator)
    return _rational(value)


def div(a, b):
    """Exact quotient; never falls back to float division."""
    if isinstance(a, int) and isinstance(b, int):
        return _rational(a, b)
    return a / b


def is_rational_type(x) -> bool:
    return isinstance(x, (int, Fraction, type(_rational(1, 2))))


def sign(x) -> int:
    return (x > 0) - (x < 0)


class Point3(NamedTuple):
    x: object
    y: object
    z: object


def P(x, y, z) -> Point3:
    return Point3(Q(x), Q(y), Q(z))


def sub(p, q):
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def add(p, q):
    return (p[0] + q[0], p[1] + q[1], p[2] + q[2])


def scale(p, s):
    return (p[0] * s, p[1] * s, p[2] * s)


def dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def cross(u, v):
    return (u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0])


def orient3d(p, q, r, s) -> int:
    """Sign of det(q - p, r - p, s - p)."""
    return sign(dot(cross(sub(q, p), sub(r, p)), sub(s, p)))


# -- value types -------------------------------------------------------------

@dataclass(frozen=True)
class Segment3:
    a: Point3
    b: Point3

    def __post_init__(self):
        if tuple(self.a) == tuple(self.b):
            raise ValueError("degenerate segment")

    def point(self, t) -> Point3:
        d = sub(self.b, self.a)
        return Point3(*add(self.a, scale(d, t)))

    def reversed(self) -> "Segment3":
        return Segment3(self.b, self.a)


@dataclass(frozen=True)
class Ray3:
    origin: Point3
    dir: tuple

    def __post_init__(self):
        if not any(self.dir):
            raise ValueError("zero ray direction")


@dataclass(frozen=True)
class Triangle3:
    id: int
    v0: Point3
    v1: Point3
    v2: Point3

    def __post_init__(self):
        if not any(cross(sub(self.v1, self.v0), sub(self.v2, self.v0))):
            raise ValueError(f"triangle {self.id} is degenerate")

    @property
    def vertices(self):
        return (self.v0, self.v1, self.v2)

    @property
    def edges(self):
        return ((self.v0, self.v1), (self.v1, self.v2), (self.v2, self.v0))

    def plane(self) -> "Plane3":
        n = cross(sub(self.v1, self.v0), sub(self.v2, self.v0))
        return Plane3(n, dot(n, self.v0))


@dataclass(frozen=True)
class Plane3:
    """Points x with ``normal . x == offset``; ``side(x) = normal . x - offset``."""
    normal: tuple
    offset: object

    def __post_init__(self):
        if not any(self.normal):
            raise ValueError("zero plane normal")

    def side(self, p):
        n = self.normal
        return n[0] * p[0] + n[1] * p[1] + n[2] * p[2] - self.offset

    def contains(self, p) -> bool:
        return self.side(p) == 0


@dataclass(frozen=True)
class HitResult:
    triangle_id: int
    t: object
    point: Point3

    def key(self):
        return (self.t, self.triangle_id)


class _Coplanar:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "COPLANAR"


COPLANAR = _Coplanar()


# -- parametric probes -------------------------------------------------------

class Probe:
    """A segment written as ``origin + t * direction`` for ``t`` in ``[lo, hi]``.

    Sub-segments produced by the cell walk share the probe's base line, so the
    Plucker moment ``origin x direction`` is computed once per query.
    """
    __slots__ = ("o", "d", "m", "lo", "hi")

    def __init__(self, o, d, lo=0, hi=1, m=None):
        self.o = tuple(o)
        self.d = tuple(d)
        self.m = m if m is not None else cross(self.o, self.d)
        self.lo = lo
        self.hi = hi

    @classmethod
    def from_segment(cls, e: Segment3) -> "Probe":
        return cls(e.a, sub(e.b, e.a), 0, 1)

    def with_range(self, lo, hi) -> "Probe":
        return Probe(self.o, self.d, lo, hi, self.m)

    def point(self, t) -> Point3:
        o, d = self.o, self.d
        return Point3(o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2])

    def normalized(self, t, base_lo, base_hi):
        """Map a probe parameter back to ``[0, 1]`` over ``[base_lo, base_hi]``."""
        if base_lo == 0 and base_hi == 1:
            return t
        return div(t - base_lo, base_hi - base_lo)

    def __repr__(self):
        return f"Probe(o={self.o}, d={self.d}, [{self.lo}, {self.hi}])"


class TriRecord:
    """Precomputed data for repeated exact line/triangle tests."""
    __slots__ = ("id", "v", "n", "nv", "eu", "ev", "lo", "hi")

    def __init__(self, tri: Triangle3):
        self.id = tri.id
        v0, v1, v2 = tri.v0, tri.v1, tri.v2
        self.v = (v0, v1, v2)
        self.n = cross(sub(v1, v0), sub(v2, v0))
        self.nv = dot(self.n, v0)
        eu, ev = [], []
        for p, q in ((v0, v1), (v1, v2), (v2, v0)):
            eu.append(sub(q, p))
            ev.append(cross(p, q))
        self.eu = tuple(eu)
        self.ev = tuple(ev)
        self.lo = tuple(min(c) for c in zip(v0, v1, v2))
        self.hi = tuple(max(c) for c in zip(v0, v1, v2))


def probe_tri(pr: Probe, rec: TriRecord, lo=None, hi=None):
    """Smallest parameter in ``[lo, hi]`` at which the probe meets the closed
    triangle, or ``None``."""
    if lo is None:
        lo, hi = pr.lo, pr.hi
    d, m = pr.d, pr.m
    n = rec.n
    den = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
    o = pr.o
    num = rec.nv - (n[0] * o[0] + n[1] * o[1] + n[2] * o[2])
    if den != 0:
        # parameter range check before the edge-side tests
        if den > 0:
            if num < lo * den or num > hi * den:
                return None
        else:
            if num > lo * den or num < hi * den:
                return None
        pos = neg = False
        for u, v in zip(rec.eu, rec.ev):
            s = d[0] * v[0] + d[1] * v[1] + d[2] * v[2] + u[0] * m[0] + u[1] * m[1] + u[2] * m[2]
            if s > 0:
                pos = True
            elif s < 0:
                neg = True
            if pos and neg:
                return None
        return div(num, den)
    if num != 0:
        return None
    return _coplanar_entry(pr, rec, lo, hi)


def _coplanar_entry(pr: Probe, rec: TriRecord, lo, hi):
    n = rec.n
    o, d = pr.o, pr.d
    for p, u in zip(rec.v, rec.eu):
        # inside iff (u x (X - p)) . n >= 0, linear in t
        alpha = dot(cross(u, sub(o, p)), n)
        beta = dot(cross(u, d), n)
        if beta == 0:
            if alpha < 0:
                return None
            continue
        t = div(-alpha, beta)
        if beta > 0:
            if t > lo:
                lo = t
        else:
            if t < hi:
                hi = t
        if lo > hi:
            return None
    return lo


def probe_plane(pr: Probe, plane: Plane3, lo=None, hi=None):
    """Parameter where the probe crosses ``plane`` inside ``[lo, hi]``;
    ``COPLANAR`` if the probe lies in it; ``None`` otherwise."""
    if lo is None:
        lo, hi = pr.lo, pr.hi
    n = plane.normal
    den = dot(n, pr.d)
    num = plane.offset - dot(n, pr.o)
    if den == 0:
        return COPLANAR if num == 0 else None
    t = div(num, den)
    if lo <= t <= hi:
        return t
    return None


# -- public predicates -------------------------------------------------------

def seg_plane_intersect(e: Segment3, h: Plane3):
    fa = h.side(e.a)
    fb = h.side(e.b)
    if fa == 0 and fb == 0:
        return COPLANAR
    if (fa > 0 and fb > 0) or (fa < 0 and fb < 0):
        return None
    return div(fa, fa - fb)


def seg_tri_intersect(e: Segment3, tri: Triangle3):
    """Smallest ``t`` in [0, 1] with ``e(t)`` in the closed triangle, else None."""
    return probe_tri(Probe.from_segment(e), TriRecord(tri))


def point_in_triangle(p, tri: Triangle3) -> bool:
    rec = TriRecord(tri)
    if dot(rec.n, p) != rec.nv:
        return False
    for (a, b) in tri.edges:
        if dot(cross(sub(b, a), sub(p, a)), rec.n) < 0:
            return False
    return True


def segments_intersect3(a, b, c, d) -> bool:
    """Closed 3D segments ab and cd share a point (exact)."""
    if orient3d(a, b, c, d) != 0:
        return False
    u, v = sub(b, a), sub(d, c)
    n = cross(u, v)
    if any(n):
        # coplanar, not parallel: straddle tests in the common plane
        s1 = sign(dot(cross(u, sub(c, a)), n))
        s2 = sign(dot(cross(u, sub(d, a)), n))
        if s1 * s2 > 0:
            return False
        s3 = sign(dot(cross(v, sub(a, c)), n))
        s4 = sign(dot(cross(v, sub(b, c)), n))
        return s3 * s4 <= 0
    # parallel: collinear overlap only
    if any(cross(u, sub(c, a))):
        return False
    uu = dot(u, u)
    tc, td = dot(sub(c, a), u), dot(sub(d, a), u)
    return max(min(tc, td), 0) <= min(max(tc, td), uu)


def segment_intersection_point3(a, b, c, d):
    """Unique intersection point of two crossing (non-parallel) segments."""
    u, v = sub(b, a), sub(d, c)
    n = cross(u, v)
    nn = dot(n, n)
    if nn == 0:
        return None
    s = div(dot(cross(sub(c, a), v), n), nn)
    return Point3(*add(a, scale(u, s)))


class SegRecord:
    """Precomputed data for probe/segment tests (lines as degenerate triangles)."""
    __slots__ = ("id", "p", "u", "lo", "hi")

    def __init__(self, id, a, b):
        self.id = id
        self.p = tuple(a)
        self.u = sub(b, a)
        self.lo = tuple(min(x, y) for x, y in zip(a, b))
        self.hi = tuple(max(x, y) for x, y in zip(a, b))


def probe_seg(pr: Probe, rec: SegRecord, lo=None, hi=None):
    """Smallest parameter in ``[lo, hi]`` at which the probe meets the closed
    segment, or ``None``."""
    if lo is None:
        lo, hi = pr.lo, pr.hi
    d, u = pr.d, rec.u
    w = sub(rec.p, pr.o)
    n = cross(d, u)
    if any(n):
        if dot(w, n) != 0:
            return None
        nn = dot(n, n)
        s = dot(cross(w, d), n)
        if s < 0 or s > nn:
            return None
        t = div(dot(cross(w, u), n), nn)
        return t if lo <= t <= hi else None
    if any(cross(w, d)):
        return None
    dd = dot(d, d)
    tp = div(dot(w, d), dd)
    tq = tp + div(dot(u, d), dd)
    a, b = max(min(tp, tq), lo), min(max(tp, tq), hi)
    return a if a <= b else None
