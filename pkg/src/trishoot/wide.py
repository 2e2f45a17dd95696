"""Segment shooting amid triangles that cross a convex cell with no edge
inside it.

Inside such a cell a wide triangle coincides with its supporting plane, so
queries reduce to shooting among planes once the relevant set is known.
The structure samples ``r0`` triangles, cuts every cell face by the traces of
their planes, decomposes the resulting convex regions into vertical slabs,
and uses the open pieces (trapezoids, their open edges and their corners) as
boundary patches.  For a pair of patches the wide triangles crossed by every
segment joining them, minus those touching either patch, form a canonical
set; the remaining candidates live in the patches' conflict lists, which are
handled recursively.

Conflict lists, canonical sets and child structures are materialized on
first use and memoized.
"""
from __future__ import annotations

import math
import random
import threading
from dataclasses import dataclass

from .geom import Point3, Probe, div, probe_tri
from .polytope import centroid

# -- 2D helpers on a face ------------------------------------------------------


def _clip2(poly, a, b, c):
    """Clip a convex 2D polygon to ``a*u + b*v - c <= 0``."""
    out = []
    n = len(poly)
    vals = [a * p[0] + b * p[1] - c for p in poly]
    for i in range(n):
        p, sp = poly[i], vals[i]
        q, sq = poly[(i + 1) % n], vals[(i + 1) % n]
        if sp <= 0:
            out.append(p)
        if (sp < 0 < sq) or (sq < 0 < sp):
            t = div(sp, sp - sq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    dedup = []
    for p in out:
        if not dedup or dedup[-1] != p:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def _inside2(poly, p):
    """Closed containment in a convex polygon of any orientation."""
    pos = neg = False
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        c = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
        if c > 0:
            pos = True
        elif c < 0:
            neg = True
        if pos and neg:
            return False
    return True


def _vertical_extent(poly, x):
    ys = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        if p[0] == x:
            ys.append(p[1])
        if (p[0] < x < q[0]) or (q[0] < x < p[0]):
            t = div(x - p[0], q[0] - p[0])
            ys.append(p[1] + t * (q[1] - p[1]))
    return min(ys), max(ys)


class Face:
    """One 2-dimensional face of the cell, cut into convex regions by the
    traces of the sample planes."""

    def __init__(self, index, plane, poly3):
        self.index = index
        self.plane = plane
        n = plane.normal
        self.k = max(range(3), key=lambda i: abs(n[i]))
        self.axes = [i for i in range(3) if i != self.k]
        self.poly2 = [self.proj(p) for p in poly3]
        self.regions = [self.poly2]
        self.xs = None

    def proj(self, p):
        return (p[self.axes[0]], p[self.axes[1]])

    def lift(self, q):
        n, off = self.plane.normal, self.plane.offset
        u, v = self.axes
        xk = div(off - n[u] * q[0] - n[v] * q[1], n[self.k])
        c = [None, None, None]
        c[u], c[v], c[self.k] = q[0], q[1], xk
        return Point3(*c)

    def trace(self, h):
        """Trace of plane ``h`` on this face as ``(a, b, c)`` with
        ``a*u + b*v = c``; None when parallel."""
        g, gk = self.plane.normal, self.plane.normal[self.k]
        hn, k = h.normal, self.k
        u, v = self.axes
        a = hn[u] * gk - hn[k] * g[u]
        b = hn[v] * gk - hn[k] * g[v]
        if a == 0 and b == 0:
            return None
        c = h.offset * gk - hn[k] * self.plane.offset
        return a, b, c

    def cut(self, lines):
        regions = [self.poly2]
        for a, b, c in lines:
            nxt = []
            for r in regions:
                vals = [a * p[0] + b * p[1] - c for p in r]
                if any(x < 0 for x in vals) and any(x > 0 for x in vals):
                    nxt.append(_clip2(r, a, b, c))
                    nxt.append(_clip2(r, -a, -b, -c))
                else:
                    nxt.append(r)
            regions = nxt
        self.regions = regions
        self.xs = [sorted({p[0] for p in r}) for r in regions]

    # -- patches

    def locate(self, q):
        """Key of the patch containing the 2D point ``q`` of this face."""
        f = self.index
        for r, poly in enumerate(self.regions):
            if not _inside2(poly, q):
                continue
            xs = self.xs[r]
            x = q[0]
            lo, hi = 0, len(xs) - 1
            while lo <= hi:
                mid = (lo + hi) // 2
                if xs[mid] == x:
                    ylo, yhi = _vertical_extent(poly, x)
                    if q[1] == ylo or q[1] == yhi:
                        return ("P", f, q)
                    return ("W", f, r, mid)
                if xs[mid] < x:
                    lo = mid + 1
                else:
                    hi = mid - 1
            i = hi
            ylo, yhi = _vertical_extent(poly, x)
            if q[1] == ylo:
                return ("E", f, r, i, 0)
            if q[1] == yhi:
                return ("E", f, r, i, 1)
            return ("T", f, r, i)
        raise ValueError("point is not on this face")

    def geometry(self, key):
        """3D vertices of the closure of the patch with ``key``."""
        kind = key[0]
        if kind == "P":
            return [self.lift(key[2])]
        r, i = key[2], key[3]
        poly, xs = self.regions[r], self.xs[r]
        if kind == "W":
            x = xs[i]
            ylo, yhi = _vertical_extent(poly, x)
            return [self.lift((x, ylo)), self.lift((x, yhi))]
        if kind == "E":
            side = key[4]
            pts = []
            for x in (xs[i], xs[i + 1]):
                y = _vertical_extent(poly, x)[side]
                pts.append(self.lift((x, y)))
            return pts
        trap = _clip2(_clip2(poly, -1, 0, -xs[i]), 1, 0, xs[i + 1])
        return [self.lift(p) for p in trap]

    def patch_keys(self):
        """Every 2D and 1D patch key of this face (vertices omitted)."""
        out = []
        for r, xs in enumerate(self.xs):
            for i in range(len(xs) - 1):
                out.append(("T", self.index, r, i))
                out.append(("E", self.index, r, i, 0))
                out.append(("E", self.index, r, i, 1))
            for i in range(len(xs)):
                ylo, yhi = _vertical_extent(self.regions[r], xs[i])
                if ylo != yhi:
                    out.append(("W", self.index, r, i))
        return out


# -- plane sets -----------------------------------------------------------------

class PlaneSet:
    """Shooting among the supporting planes of a fixed triangle set.

    ``strategy='brute'`` scans; ``strategy='kd'`` runs branch-and-bound over a
    kd-tree of dual points ``(alpha, beta, gamma)`` of planes
    ``z = alpha*x + beta*y + gamma``.  Vertical planes are always scanned.
    Both strategies return identical answers.
    """

    LEAF = 8

    def __init__(self, ids, records, strategy="brute"):
        self.ids = list(ids)
        self.strategy = strategy
        self.recs = [records[i] for i in self.ids]
        self.tree = None
        self.vertical = self.recs
        if strategy == "kd":
            dual, vert = [], []
            for r in self.recs:
                nz = r.n[2]
                if nz == 0:
                    vert.append(r)
                else:
                    dual.append(((div(-r.n[0], nz), div(-r.n[1], nz), div(r.nv, nz)), r))
            self.vertical = vert
            self.tree = _kd_build(dual, 0) if dual else None
        elif strategy != "brute":
            raise ValueError(f"unknown strategy {strategy!r}")

    def __len__(self):
        return len(self.ids)

    def first_hit(self, pr, lo, hi, stats=None):
        best = None
        for r in self.vertical:
            best = _plane_hit(pr, r, lo, hi, best, stats)
        if self.tree is not None:
            best = _kd_first(self.tree, pr, lo, hi, best, stats)
        return best

    def all_hits(self, pr, lo, hi, stats=None):
        out = []
        for r in self.vertical:
            t = _plane_param(pr, r, lo, hi, stats)
            if t is not None:
                out.append((t, r.id))
        if self.tree is not None:
            _kd_all(self.tree, pr, lo, hi, out, stats)
        return out


def _plane_param(pr, r, lo, hi, stats):
    if stats is not None:
        stats.plane_tests += 1
    n = r.n
    d, o = pr.d, pr.o
    den = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
    num = r.nv - (n[0] * o[0] + n[1] * o[1] + n[2] * o[2])
    if den == 0:
        # the line lies in the plane: its first point counts
        return lo if num == 0 else None
    t = div(num, den)
    return t if lo <= t <= hi else None


def _plane_hit(pr, r, lo, hi, best, stats):
    t = _plane_param(pr, r, lo, hi, stats)
    if t is not None and (best is None or (t, r.id) < best):
        return (t, r.id)
    return best


class _KD:
    __slots__ = ("lo", "hi", "left", "right", "items")


def _kd_build(items, axis):
    node = _KD()
    pts = [p for p, _ in items]
    node.lo = tuple(min(p[k] for p in pts) for k in range(3))
    node.hi = tuple(max(p[k] for p in pts) for k in range(3))
    if len(items) <= PlaneSet.LEAF:
        node.items, node.left, node.right = items, None, None
        return node
    items = sorted(items, key=lambda it: it[0][axis])
    mid = len(items) // 2
    node.items = None
    node.left = _kd_build(items[:mid], (axis + 1) % 3)
    node.right = _kd_build(items[mid:], (axis + 1) % 3)
    return node


def _f_range(node, p):
    """Range of ``p_z - alpha*p_x - beta*p_y - gamma`` over the node box."""
    lo = hi = p[2]
    for k, coef in ((0, -p[0]), (1, -p[1]), (2, -1)):
        a, b = coef * node.lo[k], coef * node.hi[k]
        if a <= b:
            lo += a
            hi += b
        else:
            lo += b
            hi += a
    return lo, hi


def _separable(node, p, q):
    a0, a1 = _f_range(node, p)
    b0, b1 = _f_range(node, q)
    return (a0 > 0 and b0 > 0) or (a1 < 0 and b1 < 0)


def _kd_first(root, pr, lo, hi, best, stats):
    p_lo = pr.point(lo)
    stack = [root]
    while stack:
        node = stack.pop()
        lim = best[0] if best is not None else hi
        if stats is not None:
            stats.plane_tests += 1
        if _separable(node, p_lo, pr.point(lim)):
            continue
        if node.items is not None:
            for _, r in node.items:
                best = _plane_hit(pr, r, lo, best[0] if best is not None else hi, best, stats)
        else:
            stack.append(node.right)
            stack.append(node.left)
    return best


def _kd_all(root, pr, lo, hi, out, stats):
    p_lo, p_hi = pr.point(lo), pr.point(hi)
    stack = [root]
    while stack:
        node = stack.pop()
        if stats is not None:
            stats.plane_tests += 1
        if _separable(node, p_lo, p_hi):
            continue
        if node.items is not None:
            for _, r in node.items:
                t = _plane_param(pr, r, lo, hi, stats)
                if t is not None:
                    out.append((t, r.id))
        else:
            stack.append(node.right)
            stack.append(node.left)


def first_hit_planes(planes, e, frm=None, strategy="brute"):
    """First plane crossed by segment ``e`` walking away from ``frm``.

    ``planes`` is a list of ``Plane3``; returns ``(index, t)`` with ``t``
    measured along ``e`` from its ``a`` endpoint, or None.
    """
    a, b = e.a, e.b
    if frm is not None and tuple(frm) == tuple(b):
        a, b = b, a
    pr = Probe(a, (b[0] - a[0], b[1] - a[1], b[2] - a[2]), 0, 1)
    recs = {i: _PlaneRec(i, h) for i, h in enumerate(planes)}
    ps = PlaneSet(range(len(planes)), recs, strategy)
    hit = ps.first_hit(pr, 0, 1)
    if hit is None:
        return None
    t, i = hit
    if (a, b) != (e.a, e.b):
        t = 1 - t
    return i, t


class _PlaneRec:
    __slots__ = ("id", "n", "nv")

    def __init__(self, id, plane):
        self.id, self.n, self.nv = id, tuple(plane.normal), plane.offset


# -- the structure ----------------------------------------------------------------

@dataclass
class WideConfig:
    r0: int = 8
    storage: object = None        # None means |W| ** 1.5
    rng_seed: int = 0
    strategy: str = "brute"       # plane shooting inside canonical sets
    rep_seed: object = None       # random representative segments instead of centroids
    max_level: int = 12

    def __post_init__(self):
        if self.r0 < 2:
            raise ValueError("r0 must be >= 2")


def clamp_storage(s, n):
    if s is None:
        s = n ** 1.5
    return min(max(s, n), max(n * n, 1))


class Patch:
    __slots__ = ("key", "dim", "verts", "rep", "planes", "conflict", "child")

    def __init__(self, key, verts, planes):
        self.key = key
        self.verts = verts
        self.dim = {"P": 0, "E": 1, "W": 1, "T": 2}[key[0]]
        self.rep = centroid(verts)
        self.planes = planes
        self.conflict = None
        self.child = None


class CanonicalSet:
    __slots__ = ("pair", "rep", "tri_ids", "planes")

    def __init__(self, pair, rep, tri_ids, planes):
        self.pair, self.rep, self.tri_ids, self.planes = pair, rep, tri_ids, planes


class _Shared:
    """State shared by a structure and all of its recursive children."""

    def __init__(self, cell, records, config, n_top, s_top):
        self.cell = cell
        self.records = records
        self.config = config
        self.n_top = n_top
        self.leaf_size_bound = max(1, math.ceil(n_top * n_top / s_top)) if n_top else 1
        self.lock = threading.RLock()
        self.stored = 0
        self.structures = 0


class WideStructure:
    """Shooting/reporting structure over triangles that are wide in ``cell``."""

    def __init__(self, ids, shared: _Shared, storage, level=0):
        self.ids = sorted(ids)
        self.sh = shared
        self.level = level
        n = len(self.ids)
        self.storage = clamp_storage(storage, n)
        cfg = shared.config
        shared.structures += 1
        self.bare = (n <= max(shared.leaf_size_bound, cfg.r0)
                     or level >= cfg.max_level)
        self.faces = []
        self.sample = []
        self.patches = {}
        self.canonical = {}
        if self.bare:
            shared.stored += n
            return
        seed = hash((cfg.rng_seed, level, n, self.ids[0], self.ids[-1]))
        self.sample = sorted(random.Random(seed).sample(self.ids, cfg.r0))
        planes = [_plane_of(shared.records[i]) for i in self.sample]
        for fi, (pidx, poly) in enumerate(shared.cell.faces):
            face = Face(fi, shared.cell.planes[pidx], poly)
            lines = []
            seen = set()
            for h in planes:
                tr = face.trace(h)
                if tr is None:
                    continue
                key = _line_key(tr)
                if key not in seen:
                    seen.add(key)
                    lines.append(tr)
            face.cut(lines)
            self.faces.append(face)

    # -- lazy pieces

    def locate(self, p):
        cell = self.sh.cell
        for face in self.faces:
            if face.plane.side(p) == 0:
                return face.locate(face.proj(p))
        raise ValueError("point is not on the cell boundary")

    def patch(self, key):
        pt = self.patches.get(key)
        if pt is not None:
            return pt
        with self.sh.lock:
            pt = self.patches.get(key)
            if pt is None:
                verts = self.faces[key[1]].geometry(key)
                rep = centroid(verts)
                planes = frozenset(f.index for f in self.faces if f.plane.side(rep) == 0)
                pt = Patch(key, verts, planes)
                self.patches[key] = pt
        return pt

    def conflict(self, pt: Patch):
        if pt.conflict is None:
            with self.sh.lock:
                if pt.conflict is None:
                    recs = self.sh.records
                    pt.conflict = [i for i in self.ids if _crosses(recs[i], pt)]
                    self.sh.stored += len(pt.conflict)
        return pt.conflict

    def child(self, pt: Patch):
        if pt.child is None:
            ids = self.conflict(pt)
            with self.sh.lock:
                if pt.child is None:
                    s = self.storage / (self.sh.config.r0 ** 2)
                    if len(ids) >= len(self.ids):
                        pt.child = _bare(ids, self.sh, self.level + 1)
                    else:
                        pt.child = WideStructure(ids, self.sh, s, self.level + 1)
        return pt.child

    def canonical_set(self, k1, k2):
        cs = self.canonical.get((k1, k2))
        if cs is not None:
            return cs
        p1, p2 = self.patch(k1), self.patch(k2)
        if p1.planes & p2.planes:
            cs = CanonicalSet((k1, k2), None, [], None)
        else:
            a, b = self._representative(p1), self._representative(p2)
            drop = set(self.conflict(p1)) | set(self.conflict(p2))
            recs = self.sh.records
            ids = [i for i in self.ids if i not in drop and _plane_crosses(recs[i], a, b)]
            cs = CanonicalSet((k1, k2), (a, b), ids, PlaneSet(ids, recs, self.sh.config.strategy))
        with self.sh.lock:
            if (k1, k2) not in self.canonical:
                self.canonical[(k1, k2)] = cs
                self.sh.stored += len(cs.tri_ids)
            cs = self.canonical[(k1, k2)]
        return cs

    def _representative(self, pt):
        seed = self.sh.config.rep_seed
        if seed is None or len(pt.verts) == 1:
            return pt.rep
        rng = random.Random(hash((seed, pt.key)))
        w = [rng.randint(1, 1000) for _ in pt.verts]
        tot = sum(w)
        return Point3(*(div(sum(wi * v[k] for wi, v in zip(w, pt.verts)), tot) for k in range(3)))

    # -- queries

    def _scan(self, ids, pr, lo, hi, best, out, stats):
        recs = self.sh.records
        for i in ids:
            if stats is not None:
                stats.triangle_tests += 1
            t = probe_tri(pr, recs[i], lo, best[0] if (best is not None and out is None) else hi)
            if t is None:
                continue
            if out is not None:
                out.add(i)
            elif best is None or (t, i) < best:
                best = (t, i)
        return best

    def _split(self, pr):
        ext = _line_extent(self.sh.cell, pr)
        if ext is None or ext[0] == ext[1]:
            return None
        k1 = self.locate(pr.point(ext[0]))
        k2 = self.locate(pr.point(ext[1]))
        p1, p2 = self.patch(k1), self.patch(k2)
        if p1.planes & p2.planes:
            return None
        return p1, p2, self.canonical_set(k1, k2)

    def first_hit(self, pr, lo, hi, stats=None, best=None):
        """Smallest ``(t, id)`` with ``t`` in ``[lo, hi]``; ``best`` is a
        known candidate that results must beat."""
        if self.bare:
            return self._scan(self.ids, pr, lo, hi, best, None, stats)
        parts = self._split(pr)
        if parts is None:
            return self._scan(self.ids, pr, lo, hi, best, None, stats)
        p1, p2, cs = parts
        lim = best[0] if best is not None else hi
        if lim >= lo:
            hit = cs.planes.first_hit(pr, lo, lim, stats)
            if hit is not None and (best is None or hit < best):
                best = hit
        for pt in (p1, p2):
            lim = best[0] if best is not None else hi
            if pt.dim == 0:
                best = self._scan(self.conflict(pt), pr, lo, lim, best, None, stats)
            else:
                best = self.child(pt).first_hit(pr, lo, lim, stats, best)
        return best

    def report(self, pr, lo, hi, out, stats=None):
        if self.bare:
            self._scan(self.ids, pr, lo, hi, None, out, stats)
            return out
        parts = self._split(pr)
        if parts is None:
            self._scan(self.ids, pr, lo, hi, None, out, stats)
            return out
        p1, p2, cs = parts
        for _, i in cs.planes.all_hits(pr, lo, hi, stats):
            out.add(i)
        for pt in (p1, p2):
            if pt.dim == 0:
                self._scan(self.conflict(pt), pr, lo, hi, None, out, stats)
            else:
                self.child(pt).report(pr, lo, hi, out, stats)
        return out

    # -- introspection

    def all_patch_keys(self):
        keys = []
        for f in self.faces:
            keys.extend(f.patch_keys())
        return keys

    def telemetry(self):
        return {"stored_ids": self.sh.stored, "structures": self.sh.structures,
                "leaf_size_bound": self.sh.leaf_size_bound, "n": len(self.ids),
                "storage": float(self.storage)}


def _bare(ids, shared, level):
    ws = WideStructure.__new__(WideStructure)
    ws.ids = sorted(ids)
    ws.sh = shared
    ws.level = level
    ws.storage = len(ids)
    ws.bare = True
    ws.faces, ws.sample, ws.patches, ws.canonical = [], [], {}, {}
    shared.structures += 1
    shared.stored += len(ids)
    return ws


def build_wide(cell, ids, config: WideConfig = None, records=None, storage=None):
    """Wide structure over ``ids`` (all wide in ``cell``); ``records`` maps
    id to ``TriRecord``."""
    config = config or WideConfig()
    n = len(ids)
    s = clamp_storage(storage if storage is not None else config.storage, n)
    shared = _Shared(cell, records, config, n, s)
    return WideStructure(ids, shared, s, 0)


def _plane_of(rec):
    from .geom import Plane3
    return Plane3(rec.n, rec.nv)


def _line_key(tr):
    a, b, c = tr
    s = a if a != 0 else b
    return (div(a, s), div(b, s), div(c, s))


def _side(rec, p):
    n = rec.n
    return n[0] * p[0] + n[1] * p[1] + n[2] * p[2] - rec.nv


def _crosses(rec, pt: Patch):
    vals = [_side(rec, v) for v in pt.verts]
    if pt.dim == 0:
        return vals[0] == 0
    if pt.dim == 1:
        return vals[0] * vals[1] < 0 or (vals[0] == 0 and vals[1] == 0)
    if all(v == 0 for v in vals):
        return True
    return any(v < 0 for v in vals) and any(v > 0 for v in vals)


def _plane_crosses(rec, a, b):
    sa, sb = _side(rec, a), _side(rec, b)
    return (sa <= 0 <= sb) or (sb <= 0 <= sa)


def _line_extent(cell, pr):
    """Parameter interval of the whole line of ``pr`` inside the cell."""
    lo = hi = None
    o, d = pr.o, pr.d
    for h in cell.planes:
        n = h.normal
        a = n[0] * o[0] + n[1] * o[1] + n[2] * o[2] - h.offset
        b = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
        if b == 0:
            if a > 0:
                return None
            continue
        t = div(-a, b)
        if b > 0:
            if hi is None or t < hi:
                hi = t
        elif lo is None or t > lo:
            lo = t
        if lo is not None and hi is not None and lo > hi:
            return None
    return lo, hi


def connected_components(ws: WideStructure, k1, k2):
    """Representative segments of the families of segments joining patches
    ``k1`` and ``k2``: one per family, none when both patches lie on a
    common face plane."""
    cs = ws.canonical_set(k1, k2)
    return [] if cs.rep is None else [cs.rep]
