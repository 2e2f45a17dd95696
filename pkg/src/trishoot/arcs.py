"""Planar x-monotone arcs (line segments and circular arcs) and exact tests.

An arc is stored with its left endpoint ``u`` and right endpoint ``v``.
Circular arcs carry ``side``: ``lower`` arcs are convex, ``upper`` arcs are
concave and get reflected through ``y -> -y`` whenever a convex view is
needed.  A *frame* ``(sx, sy)`` maps ``(x, y)`` to ``(sx*x, sy*y)``; the same
map applied to an arc and a query preserves incidence and ray parameters.

Query parameters (ray origins, directions, line coefficients) are rational.
Endpoint ordinates of circular arcs are usually irrational and are carried as
:class:`~trishoot.algebraic.AlgNum`.
"""
from __future__ import annotations

import math
import random

from .algebraic import AlgNum, alg_sign, sqrt
from .geom import Q, div


class Arc2:
    __slots__ = ("id", "kind", "ux", "uy", "vx", "vy", "cx", "cy", "r", "side", "_f")

    def __init__(self, id, kind, ux, uy, vx, vy, cx=None, cy=None, r=None, side=None):
        self.id = id
        self.kind = kind
        self.ux, self.uy, self.vx, self.vy = ux, uy, vx, vy
        self.cx, self.cy, self.r, self.side = cx, cy, r, side
        self._f = None

    @classmethod
    def segment(cls, id, x1, y1, x2, y2):
        x1, y1, x2, y2 = Q(x1), Q(y1), Q(x2), Q(y2)
        if x1 == x2:
            raise ValueError("vertical segments are not x-monotone")
        if x1 > x2:
            x1, y1, x2, y2 = x2, y2, x1, y1
        return cls(id, "S", x1, y1, x2, y2)

    @classmethod
    def circular(cls, id, cx, cy, r, xlo, xhi, side="lower"):
        cx, cy, r, xlo, xhi = Q(cx), Q(cy), Q(r), Q(xlo), Q(xhi)
        if r <= 0:
            raise ValueError("radius must be positive")
        if side not in ("lower", "upper"):
            raise ValueError(f"bad side {side!r}")
        if not (cx - r <= xlo < xhi <= cx + r):
            raise ValueError("x-range must lie inside the circle's extent and be nondegenerate")
        arc = cls(id, "C", xlo, None, xhi, None, cx, cy, r, side)
        arc.uy = arc.y_at(xlo)
        arc.vy = arc.y_at(xhi)
        return arc

    # -- geometry

    @property
    def u(self):
        return (self.ux, self.uy)

    @property
    def v(self):
        return (self.vx, self.vy)

    @property
    def convex(self):
        return self.kind == "S" or self.side == "lower"

    def slope(self):
        return div(self.vy - self.uy, self.vx - self.ux)

    def y_at(self, x):
        """Exact ordinate at abscissa ``x`` (assumed inside the x-range)."""
        if self.kind == "S":
            return self.uy + (x - self.ux) * self.slope()
        root = sqrt(self.r * self.r - (x - self.cx) ** 2)
        return self.cy - root if self.side == "lower" else self.cy + root

    def transformed(self, sx, sy):
        if sx == 1 and sy == 1:
            return self
        if self.kind == "S":
            return Arc2.segment(self.id, sx * self.ux, sy * self.uy, sx * self.vx, sy * self.vy)
        side = self.side if sy == 1 else ("upper" if self.side == "lower" else "lower")
        xlo, xhi = (self.ux, self.vx) if sx == 1 else (-self.vx, -self.ux)
        arc = Arc2(self.id, "C", xlo, None, xhi, None, sx * self.cx, sy * self.cy, self.r, side)
        if sx == 1:
            arc.uy, arc.vy = sy * self.uy, sy * self.vy
        else:
            arc.uy, arc.vy = sy * self.vy, sy * self.uy
        return arc

    def floats(self):
        """(ux, uy, vx, vy, cx, cy, r, su, sv) as floats; slopes at the ends."""
        if self._f is None:
            if self.kind == "S":
                s = float(self.slope())
                self._f = (float(self.ux), float(self.uy), float(self.vx), float(self.vy),
                           0.0, 0.0, 0.0, s, s)
            else:
                self._f = (float(self.ux), float(self.uy), float(self.vx), float(self.vy),
                           float(self.cx), float(self.cy), float(self.r),
                           self._end_slope(self.ux), self._end_slope(self.vx))
        return self._f

    def _end_slope(self, x):
        w = x - self.cx
        d = self.r * self.r - w * w
        sgn = 1 if self.side == "lower" else -1
        if d == 0:
            return -math.inf * sgn if w < 0 else math.inf * sgn
        return sgn * float(w) / math.sqrt(float(d))

    def magnitude(self):
        f = self.floats()
        return max(abs(f[0]), abs(f[1]), abs(f[2]), abs(f[3]), abs(f[4]) + f[6], abs(f[5]) + f[6])

    def to_line(self):
        if self.kind == "S":
            return f"S {_fmt(self.ux)} {_fmt(self.uy)} {_fmt(self.vx)} {_fmt(self.vy)}"
        return (f"C {_fmt(self.cx)} {_fmt(self.cy)} {_fmt(self.r)} "
                f"{_fmt(self.ux)} {_fmt(self.vx)} {self.side}")

    def __repr__(self):
        return f"Arc2({self.id}: {self.to_line()})"


def _fmt(c):
    if isinstance(c, int):
        return str(c)
    num, den = int(c.numerator), int(c.denominator)
    return str(num) if den == 1 else f"{num}/{den}"


class Ray2:
    """Planar ray ``o + t*d`` for ``t >= 0``; a segment when ``tmax`` is set."""

    __slots__ = ("ox", "oy", "dx", "dy", "tmax")

    def __init__(self, ox, oy, dx, dy, tmax=None):
        self.ox, self.oy, self.dx, self.dy = Q(ox), Q(oy), Q(dx), Q(dy)
        self.tmax = tmax

    @classmethod
    def through(cls, p, q):
        return cls(p[0], p[1], q[0] - p[0], q[1] - p[1], 1)

    @property
    def origin(self):
        return (self.ox, self.oy)

    def point(self, t):
        return (self.ox + t * self.dx, self.oy + t * self.dy)

    def end(self):
        return self.point(self.tmax)

    def transformed(self, sx, sy):
        return Ray2(sx * self.ox, sy * self.oy, sx * self.dx, sy * self.dy, self.tmax)

    def __repr__(self):
        return f"Ray2(o=({self.ox}, {self.oy}), d=({self.dx}, {self.dy}), tmax={self.tmax})"


# -- parsing -------------------------------------------------------------------

def parse_arcs(text):
    arcs = []
    for ln in text.splitlines():
        row = ln.split()
        if not row or row[0].startswith("#"):
            continue
        if row[0] == "S" and len(row) == 5:
            arcs.append(Arc2.segment(len(arcs), *row[1:]))
        elif row[0] == "C" and len(row) == 7:
            arcs.append(Arc2.circular(len(arcs), *row[1:6], side=row[6]))
        else:
            raise ValueError(f"bad arc line: {ln.strip()}")
    return arcs


def dump_arcs(arcs):
    return "".join(a.to_line() + "\n" for a in arcs)


def random_arcs(n, seed=0, size=64, seg_frac=0.4):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        if rng.random() < seg_frac:
            x1, x2 = rng.randint(-size, size), rng.randint(-size, size)
            if x1 == x2:
                continue
            out.append(Arc2.segment(len(out), x1, rng.randint(-size, size), x2, rng.randint(-size, size)))
        else:
            r = rng.randint(1, max(1, size // 2))
            cx, cy = rng.randint(-size, size), rng.randint(-size, size)
            xlo, xhi = sorted(rng.randint(cx - r, cx + r) for _ in range(2))
            if xlo == xhi:
                continue
            out.append(Arc2.circular(len(out), cx, cy, r, xlo, xhi, rng.choice(("lower", "upper"))))
    return out


def random_rays2(n, seed=0, size=64, seg=False):
    rng = random.Random(seed)
    out = []
    while len(out) < n:
        ox, oy = rng.randint(-size, size), rng.randint(-size, size)
        if seg:
            qx, qy = rng.randint(-size, size), rng.randint(-size, size)
            if (qx, qy) == (ox, oy):
                continue
            out.append(Ray2(ox, oy, qx - ox, qy - oy, 1))
        else:
            dx, dy = rng.randint(-16, 16), rng.randint(-16, 16)
            if dx == 0 and dy == 0:
                continue
            out.append(Ray2(ox, oy, dx, dy))
    return out


# -- direct exact tests (any arc) ---------------------------------------------

def point_side(arc, x, y):
    """Sign of ``y - arc(x)`` for ``x`` inside the arc's x-range."""
    if arc.kind == "S":
        return alg_sign((y - arc.uy) * (arc.vx - arc.ux) - (x - arc.ux) * (arc.vy - arc.uy))
    d = y - arc.cy
    dd = arc.r * arc.r - (x - arc.cx) ** 2
    if arc.side == "lower":
        # y - (cy - sqrt(dd)) = d + sqrt(dd)
        if d >= 0:
            return 0 if (d == 0 and dd == 0) else 1
        return alg_sign(dd - d * d)
    if d <= 0:
        return 0 if (d == 0 and dd == 0) else -1
    return alg_sign(d * d - dd)


def in_range(arc, x):
    return arc.ux <= x <= arc.vx


def point_on_arc(arc, x, y):
    return in_range(arc, x) and point_side(arc, x, y) == 0


def _on_side(arc, y):
    return y <= arc.cy if arc.side == "lower" else y >= arc.cy


def _roots(qa, qb, disc):
    """Both roots of ``qa*z^2 + qb*z + c`` (``qa > 0``) in increasing order."""
    root = sqrt(disc)
    if isinstance(root, AlgNum):
        return ((-qb - root) / (2 * qa), (-qb + root) / (2 * qa))
    return (div(-qb - root, 2 * qa), div(-qb + root, 2 * qa))


def line_meets_arc(arc, a, b):
    """Does the line ``y = a*x + b`` meet the closed arc?  Root-based test."""
    if arc.kind == "S":
        gu = alg_sign(arc.uy - a * arc.ux - b)
        gv = alg_sign(arc.vy - a * arc.vx - b)
        return gu * gv <= 0
    qa = 1 + a * a
    qb = 2 * (a * (b - arc.cy) - arc.cx)
    qc = arc.cx ** 2 + (b - arc.cy) ** 2 - arc.r ** 2
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return False
    for x in _roots(qa, qb, disc):
        if arc.ux <= x <= arc.vx and _on_side(arc, a * x + b):
            return True
    return False


def arc_ray_hit_param(arc, rho):
    """Smallest ``t`` in ``[0, tmax]`` with ``rho.point(t)`` on the arc, else None."""
    if rho.dx == 0 and rho.dy == 0:
        return 0 if point_on_arc(arc, rho.ox, rho.oy) else None
    if arc.kind == "S":
        return _seg_hit(arc, rho)
    wx, wy = rho.ox - arc.cx, rho.oy - arc.cy
    qa = rho.dx * rho.dx + rho.dy * rho.dy
    qb = 2 * (rho.dx * wx + rho.dy * wy)
    qc = wx * wx + wy * wy - arc.r * arc.r
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return None
    for t in _roots(qa, qb, disc):
        if t < 0 or (rho.tmax is not None and t > rho.tmax):
            continue
        x, y = rho.point(t)
        if arc.ux <= x <= arc.vx and _on_side(arc, y):
            return t if not isinstance(t, AlgNum) or not t.is_rational else t.rational()
    return None


def _seg_hit(arc, rho):
    ex, ey = arc.vx - arc.ux, arc.vy - arc.uy
    wx, wy = arc.ux - rho.ox, arc.uy - rho.oy
    den = rho.dx * ey - rho.dy * ex
    tmax = rho.tmax
    if den != 0:
        t = div(wx * ey - wy * ex, den)
        s = div(wx * rho.dy - wy * rho.dx, den)
        if t >= 0 and (tmax is None or t <= tmax) and 0 <= s <= 1:
            return t
        return None
    if wx * rho.dy - wy * rho.dx != 0:
        return None
    dd = rho.dx * rho.dx + rho.dy * rho.dy
    t1 = div(wx * rho.dx + wy * rho.dy, dd)
    t2 = div((arc.vx - rho.ox) * rho.dx + (arc.vy - rho.oy) * rho.dy, dd)
    lo, hi = min(t1, t2), max(t1, t2)
    lo = max(lo, 0)
    if tmax is not None:
        hi = min(hi, tmax)
    return lo if lo <= hi else None


def ray_meets_arc(arc, rho):
    return arc_ray_hit_param(arc, rho) is not None


# -- convex-arc predicates used by the structure -------------------------------
# All functions below assume ``arc.convex``.

def dual_contains(arc, a, b):
    """``(a, b)`` lies in the dual region of the arc: the line ``y = a*x + b``
    meets it.  Built from the endpoint duals and the tangent curve."""
    gu = alg_sign(arc.uy - a * arc.ux - b)
    gv = alg_sign(arc.vy - a * arc.vx - b)
    if max(gu, gv) < 0:
        return False
    if min(gu, gv) <= 0:
        return True
    if arc.kind == "S":
        return False
    # Both endpoints strictly above the line: the line must reach the arc's
    # interior minimum, i.e. the tangent of slope a touches inside the range
    # and lies on or below the line.
    if not tangent_in_range(arc, a):
        return False
    k = 1 + a * a
    return alg_sign(b - (arc.cy - a * arc.cx - arc.r * sqrt(k))) >= 0


def tangent_abscissa(arc, a):
    k = 1 + a * a
    root = sqrt(k)
    if isinstance(root, AlgNum):
        return arc.cx + arc.r * a * root / k
    return arc.cx + div(arc.r * a * root, k)


def tangent_in_range(arc, a):
    xt = tangent_abscissa(arc, a)
    return arc.ux <= xt <= arc.vx


def slope_below(arc, x, a):
    """Tangent slope of the arc at ``x`` is strictly smaller than ``a``."""
    if arc.kind == "S":
        return arc.slope() < a
    return x < tangent_abscissa(arc, a)


def in_kappa(arc, x, y):
    """Strictly above the arc and inside its vertical slab."""
    return arc.ux <= x <= arc.vx and point_side(arc, x, y) > 0


def v_on_or_above(arc, a, b):
    return alg_sign(arc.vy - a * arc.vx - b) >= 0


def ray_cases(arc, qx, qy, a):
    """Case analysis for the rightward ray from ``(qx, qy)`` with slope ``a``."""
    b = qy - a * qx
    line = dual_contains(arc, a, b)
    if line and qx <= arc.ux:
        return True
    if not (arc.ux <= qx <= arc.vx):
        return False
    s = point_side(arc, qx, qy)
    if s == 0:
        return True
    if s < 0:
        return line and slope_below(arc, qx, a)
    return v_on_or_above(arc, a, b)


def segment_cases(arc, p, q):
    """Case analysis for the segment ``pq`` with ``p`` strictly left of ``q``."""
    a = div(q[1] - p[1], q[0] - p[0])
    b = p[1] - a * p[0]
    if not dual_contains(arc, a, b):
        return False
    if in_kappa(arc, *p) and in_kappa(arc, *q):
        return False
    if not ray_cases(arc, p[0], p[1], a):
        return False
    return ray_cases(arc.transformed(-1, 1), -q[0], q[1], -a)


def convex_view(arc):
    """(sy, arc in the frame where it is convex)."""
    return (1, arc) if arc.convex else (-1, arc.transformed(1, -1))


def ray_verdict(arc, rho):
    """Case-analysis answer for a nonvertical ray or segment against any arc."""
    sy, carc = convex_view(arc)
    r = rho.transformed(1, sy)
    if r.tmax is not None:
        p, q = r.origin, r.end()
        if p[0] == q[0]:
            raise ValueError("vertical query")
        if p[0] > q[0]:
            p, q = q, p
        return segment_cases(carc, p, q)
    if r.dx == 0:
        raise ValueError("vertical query")
    a = div(r.dy, r.dx)
    if r.dx > 0:
        return ray_cases(carc, r.ox, r.oy, a)
    return ray_cases(carc.transformed(-1, 1), -r.ox, r.oy, -a)


# -- float range helpers for cutting classification ----------------------------

IN, OUT, CROSS = 1, 0, 2


def _gamma_f(f, x):
    if f[6] == 0.0:  # segment
        ux, uy, vx, vy = f[0], f[1], f[2], f[3]
        return uy + (x - ux) * (vy - uy) / (vx - ux)
    w = x - f[4]
    return f[5] - math.sqrt(max(0.0, f[6] * f[6] - w * w))


def gamma_range(arc, x0, x1, eps):
    """Float bounds ``(lo, hi)`` on a convex arc over ``[x0, x1]`` clipped to
    its x-range, or None if the clip is empty (beyond the margin)."""
    f = arc.floats()
    lo, hi = max(x0, f[0]), min(x1, f[2])
    if lo > hi + eps:
        return None
    if lo > hi:
        lo = hi = 0.5 * (lo + hi)
    ya, yb = _gamma_f(f, lo), _gamma_f(f, hi)
    gmax = max(ya, yb)
    gmin = min(ya, yb)
    if f[6] != 0.0 and lo < f[4] < hi:
        gmin = f[5] - f[6]
    return gmin - eps, gmax + eps


def primal_class(arc, box, mode, eps):
    """Classify a primal box against a convex arc for predicate ``mode``."""
    x0, x1, y0, y1 = box
    g = gamma_range(arc, x0, x1, eps)
    if g is None:
        return OUT
    gmin, gmax = g
    if mode == "meets":
        return OUT if (y1 < gmin or y0 > gmax) else CROSS
    above = IN if y0 > gmax else (OUT if y1 < gmin else CROSS)
    if mode == "above":
        return above
    if mode == "not_above":
        return CROSS if above == CROSS else (OUT if above == IN else IN)
    if mode == "below":
        return IN if y1 < gmin else (OUT if y0 > gmax else CROSS)
    raise ValueError(mode)


def _lin_range(y, x, a0, a1, b0, b1):
    """Range of ``y - a*x - b`` over the box."""
    p, q = a0 * x, a1 * x
    return y - max(p, q) - b1, y - min(p, q) - b0


def _tangent_intercept(f, a):
    return f[5] - a * f[4] - f[6] * math.sqrt(1.0 + a * a)


def dual_class(arc, box, eps_rel=1e-9):
    """Classify a dual box ``(a0, a1, b0, b1)`` against the arc's dual region."""
    a0, a1, b0, b1 = box
    f = arc.floats()
    mag = 1.0 + arc.magnitude() * (1.0 + max(abs(a0), abs(a1))) + max(abs(b0), abs(b1))
    eps = eps_rel * mag
    gu0, gu1 = _lin_range(f[1], f[0], a0, a1, b0, b1)
    gv0, gv1 = _lin_range(f[3], f[2], a0, a1, b0, b1)
    p_true = gu0 > eps or gv0 > eps
    p_false = gu1 < -eps and gv1 < -eps
    if p_false:
        return OUT
    m_true = gu1 < -eps or gv1 < -eps
    m_false = gu0 > eps and gv0 > eps
    if f[6] == 0.0:
        c_true, c_false = False, True
    else:
        su, sv = f[7], f[8]
        se = 1e-9
        a_true = a0 > su + se * (1 + abs(su)) and a1 < sv - se * (1 + abs(sv))
        a_false = a1 < su - se * (1 + abs(su)) or a0 > sv + se * (1 + abs(sv))
        t0, t1 = _tangent_intercept(f, a0), _tangent_intercept(f, a1)
        tmin = min(t0, t1)
        cx, r = f[4], f[6]
        if abs(cx) < r:
            astar = -cx / math.sqrt(r * r - cx * cx)
            tmax = _tangent_intercept(f, min(a1, max(a0, astar)))
        else:
            tmax = max(t0, t1)
        b_true = b0 > tmax + eps
        b_false = b1 < tmin - eps
        c_true = a_true and b_true
        c_false = a_false or b_false
    mc_true = m_true or c_true
    mc_false = m_false and c_false
    if mc_false:
        return OUT
    if p_true and mc_true:
        return IN
    return CROSS
