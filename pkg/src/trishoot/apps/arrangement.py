"""Per-triangle pieces of the arrangement of a triangle soup.

Report queries with each triangle edge find the intersecting pairs; each
pair contributes one segment (or point) to both triangles.  Inside a
triangle the segments and the triangle boundary form a planar graph whose
vertices, edges and faces are computed exactly, then audited with Euler's
relation per connected component.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

from ..engine import Engine, EngineConfig
from ..geom import Point3, Probe, Segment3, TriRecord, cross, div, dot, probe_tri, sub
from ..oracle import Scene


class GeneralPositionViolation(ValueError):
    pass


@dataclass
class TriangleSubdivision:
    triangle_id: int
    vertices: list
    edges: list
    segments: list
    faces: int                # bounded faces
    components: int
    euler_ok: bool
    component_checks: list = field(default_factory=list)

    @property
    def v(self):
        return len(self.vertices)

    @property
    def e(self):
        return len(self.edges)


@dataclass
class ArrangementFeatures:
    triangles: dict
    vertices: list
    pieces: dict

    @property
    def euler_ok(self):
        return all(s.euler_ok for s in self.triangles.values())


def _edge_points(a, b, rec):
    pr = Probe(a, sub(b, a), 0, 1)
    t = probe_tri(pr, rec)
    if t is None:
        return []
    out = [pr.point(t)]
    if dot(rec.n, pr.d) == 0:
        hi = 1
        for p, u in zip(rec.v, rec.eu):
            beta = dot(cross(u, pr.d), rec.n)
            if beta < 0:
                hi = min(hi, div(-dot(cross(u, sub(pr.o, p)), rec.n), beta))
        out.append(pr.point(hi))
    return out


def pair_piece(t1, t2, r1, r2):
    """``Δ1 ∩ Δ2`` as a tuple of one or two points, or None."""
    direction = cross(r1.n, r2.n)
    if not any(direction):
        if r1.nv * _scale(r2.n, r1.n) == r2.nv:
            raise GeneralPositionViolation(f"triangles {t1.id} and {t2.id} are coplanar")
        return None
    pts = set()
    for tri, rec in ((t1, r2), (t2, r1)):
        for a, b in tri.edges:
            pts.update(_edge_points(a, b, rec))
    if not pts:
        return None
    pts = sorted(pts, key=lambda p: (dot(p, direction), p))
    return (pts[0],) if pts[0] == pts[-1] else (pts[0], pts[-1])


def _scale(n2, n1):
    """Rational ``s`` with ``n2 = s * n1`` for parallel nonzero normals."""
    k = next(i for i in range(3) if n1[i] != 0)
    return div(n2[k], n1[k])


# -- planar graph inside one triangle ----------------------------------------------

def _proj_axes(n):
    drop = max(range(3), key=lambda k: abs(n[k]))
    return tuple(k for k in range(3) if k != drop)


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _on_seg2(p, a, b):
    if _cross2(a, b, p) != 0:
        return False
    return min(a[0], b[0]) <= p[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])


def _seg_cross2(a, b, c, d):
    """Intersection of 2D segments: None, a point, or 'overlap'."""
    d1, d2 = _cross2(a, b, c), _cross2(a, b, d)
    d3, d4 = _cross2(c, d, a), _cross2(c, d, b)
    if d1 == 0 and d2 == 0:
        hits = [p for p in (a, b) if _on_seg2(p, c, d)] + [p for p in (c, d) if _on_seg2(p, a, b)]
        hits = sorted(set(hits))
        if not hits:
            return None
        return hits[0] if len(hits) == 1 else "overlap"
    if (d1 > 0 and d2 > 0) or (d1 < 0 and d2 < 0) or (d3 > 0 and d4 > 0) or (d3 < 0 and d4 < 0):
        return None
    den = d1 - d2
    s = div(d1, den)
    return (c[0] + s * (d[0] - c[0]), c[1] + s * (d[1] - c[1]))


def _half_plane(v):
    return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1


def _angle_cmp(u, v):
    hu, hv = _half_plane(u), _half_plane(v)
    if hu != hv:
        return hu - hv
    c = u[0] * v[1] - u[1] * v[0]
    return -1 if c > 0 else (1 if c < 0 else 0)


def subdivide(tri, rec, pieces):
    """Planar subdivision of ``tri`` by ``pieces`` = [(other id, points)]."""
    ax = _proj_axes(rec.n)
    P = lambda p: (p[ax[0]], p[ax[1]])
    corners = list(tri.vertices)
    segs3 = [(o, pts) for o, pts in pieces]
    pts3 = {P(p): p for p in corners}
    for _, pts in segs3:
        for p in pts:
            pts3.setdefault(P(p), p)
    lines2 = [(P(a), P(b)) for a, b in tri.edges]
    segs2 = [(P(pts[0]), P(pts[1])) for _, pts in segs3 if len(pts) == 2]
    inner_pts = {P(p) for _, pts in segs3 for p in pts}
    for i in range(len(segs2)):
        for j in range(i + 1, len(segs2)):
            x = _seg_cross2(*segs2[i], *segs2[j])
            if x == "overlap":
                raise GeneralPositionViolation(f"collinear overlapping pieces in triangle {tri.id}")
            if x is not None:
                inner_pts.add(x)
                if x not in pts3:
                    pts3[x] = _lift(x, ax, rec)
    verts2 = sorted(pts3)
    for x in verts2:
        on = [s for s in segs2 if _on_seg2(x, *s)]
        if len(on) >= 3 and any(x not in s for s in on):
            raise GeneralPositionViolation(f"three pieces concurrent at {x} in triangle {tri.id}")
    index = {x: k for k, x in enumerate(verts2)}
    edges = set()
    for a, b in lines2 + segs2:
        d = (b[0] - a[0], b[1] - a[1])
        on = sorted((x for x in verts2 if _on_seg2(x, a, b)),
                    key=lambda x: (x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1])
        for u, w in zip(on, on[1:]):
            i, j = index[u], index[w]
            edges.add((min(i, j), max(i, j)))
    edges = sorted(edges)
    faces, comps, checks = _faces(verts2, edges)
    ok = all(c["v"] - c["e"] + c["cycles"] == 2 for c in checks)
    ok = ok and len(verts2) - len(edges) + (faces + 1) == 1 + comps
    vertices = [pts3[x] for x in verts2]
    inner = sorted(pts3[x] for x in inner_pts)
    return TriangleSubdivision(tri.id, vertices, edges, segs3, faces, comps, ok, checks), inner


def _lift(x, ax, rec):
    """3D point of the triangle's plane above the 2D point ``x``."""
    n = rec.n
    drop = 3 - ax[0] - ax[1]
    p = [0, 0, 0]
    p[ax[0]], p[ax[1]] = x
    p[drop] = div(rec.nv - n[ax[0]] * x[0] - n[ax[1]] * x[1], n[drop])
    return Point3(*p)


def _faces(verts, edges):
    """(bounded faces, components, per-component counts)."""
    nbr = {k: [] for k in range(len(verts))}
    for i, j in edges:
        nbr[i].append(j)
        nbr[j].append(i)
    for k, lst in nbr.items():
        o = verts[k]
        lst.sort(key=functools.cmp_to_key(
            lambda a, b: _angle_cmp((verts[a][0] - o[0], verts[a][1] - o[1]),
                                    (verts[b][0] - o[0], verts[b][1] - o[1]))))
    parent = list(range(len(verts)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        parent[find(i)] = find(j)
    seen = set()
    cycles_of = {}
    for i, j in edges:
        for u, v in ((i, j), (j, i)):
            if (u, v) in seen:
                continue
            a, b = u, v
            while (a, b) not in seen:
                seen.add((a, b))
                lst = nbr[b]
                k = lst.index(a)
                a, b = b, lst[(k - 1) % len(lst)]
            r = find(u)
            cycles_of[r] = cycles_of.get(r, 0) + 1
    comps = {}
    for k in range(len(verts)):
        r = find(k)
        c = comps.setdefault(r, {"v": 0, "e": 0, "cycles": cycles_of.get(r, 0)})
        c["v"] += 1
    for i, j in edges:
        comps[find(i)]["e"] += 1
    for c in comps.values():
        if c["e"] == 0:
            c["cycles"] = 1
    checks = list(comps.values())
    total_cycles = sum(c["cycles"] for c in checks)
    f = total_cycles - len(checks) + 1
    return f - 1, len(checks), checks


def arrangement_features(scene: Scene, config: EngineConfig = None, stats=None):
    """Per-triangle subdivisions and the global vertex list of the arrangement."""
    eng = Engine.build(scene, config or EngineConfig())
    recs = {t.id: TriRecord(t) for t in scene.triangles}
    by_id = {t.id: t for t in scene.triangles}
    pairs = set()
    for t in scene.triangles:
        for a, b in t.edges:
            for j in eng.report(Segment3(a, b), stats):
                if j != t.id:
                    pairs.add((min(t.id, j), max(t.id, j)))
    pieces = {}
    per_tri = {t.id: [] for t in scene.triangles}
    for i, j in sorted(pairs):
        pc = pair_piece(by_id[i], by_id[j], recs[i], recs[j])
        if pc is None:
            continue
        pieces[(i, j)] = pc
        per_tri[i].append((j, pc))
        per_tri[j].append((i, pc))
    subs, allv = {}, set()
    for t in scene.triangles:
        sd, inner = subdivide(t, recs[t.id], per_tri[t.id])
        subs[t.id] = sd
        allv.update(inner)
    return ArrangementFeatures(subs, sorted(allv), pieces)
