"""Reference computations written independently of the package, using
``fractions.Fraction`` and textbook formulas.  Tests compare the package
against these."""
from fractions import Fraction as F


def sub(a, b):
    return tuple(F(x) - F(y) for x, y in zip(a, b))


def dot(a, b):
    return sum(F(x) * F(y) for x, y in zip(a, b))


def cross(a, b):
    return (F(a[1]) * b[2] - F(a[2]) * b[1], F(a[2]) * b[0] - F(a[0]) * b[2],
            F(a[0]) * b[1] - F(a[1]) * b[0])


def det3(a, b, c):
    return dot(a, cross(b, c))


def orient(p, q, r, s):
    d = det3(sub(q, p), sub(r, p), sub(s, p))
    return (d > 0) - (d < 0)


def in_triangle(p, a, b, c):
    """Closed containment of a point lying in the triangle's plane."""
    n = cross(sub(b, a), sub(c, a))
    if dot(n, sub(p, a)) != 0:
        return False
    for u, v in ((a, b), (b, c), (c, a)):
        if dot(cross(sub(v, u), sub(p, u)), n) < 0:
            return False
    return True


def _seg_seg_params(a, b, c, d):
    """Parameters ``s`` on ab of its common points with cd (coplanar)."""
    u, v = sub(b, a), sub(d, c)
    n = cross(u, v)
    if any(n):
        nn = dot(n, n)
        s = dot(cross(sub(c, a), v), n) / nn
        t = dot(cross(sub(c, a), u), n) / nn
        if 0 <= s <= 1 and 0 <= t <= 1:
            return [s]
        return []
    if any(cross(u, sub(c, a))):
        return []
    uu = dot(u, u)
    out = []
    for p in (c, d):
        s = dot(sub(p, a), u) / uu
        if 0 <= s <= 1:
            out.append(s)
    return out


def seg_tri_t(a, b, tri):
    """Smallest ``t`` in [0, 1] with ``a + t (b - a)`` in the closed triangle."""
    v0, v1, v2 = tri
    n = cross(sub(v1, v0), sub(v2, v0))
    d = sub(b, a)
    den = dot(n, d)
    if den != 0:
        t = dot(n, sub(v0, a)) / den
        if not 0 <= t <= 1:
            return None
        p = tuple(F(a[k]) + t * d[k] for k in range(3))
        return t if in_triangle(p, v0, v1, v2) else None
    if dot(n, sub(a, v0)) != 0:
        return None
    cands = []
    if in_triangle(a, v0, v1, v2):
        cands.append(F(0))
    if in_triangle(b, v0, v1, v2):
        cands.append(F(1))
    for p, q in ((v0, v1), (v1, v2), (v2, v0)):
        cands.extend(_seg_seg_params(a, b, p, q))
    return min(cands) if cands else None


def first_hit(tris, a, b):
    """``(t, id)`` of the first triangle met along ab."""
    best = None
    for tid, tri in tris:
        t = seg_tri_t(a, b, tri)
        if t is not None and (best is None or (t, tid) < best):
            best = (t, tid)
    return best
