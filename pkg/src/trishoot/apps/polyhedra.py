"""Closed triangulated polyhedra and the vertex/edge sketch of K1 & K2.

Edge-face vertices come from segment report queries: every original edge of
one polyhedron is shot against an engine built over the other's triangles.
Intersection edges pair up vertices lying on the same (face of K1, face of
K2) line.  Original vertices are classified cluster by cluster: a cluster is
a connected set of vertices joined by uncrossed edges, so one decision (from
a crossed incident edge, or one containment test) settles all of it.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field

from ..engine import Engine, EngineConfig
from ..geom import (Point3, Probe, Q, Segment3, Triangle3, TriRecord, cross, div, dot,
                    probe_tri, sub)
from ..oracle import Scene


class NonManifoldInput(ValueError):
    pass


class Polyhedron:
    """Triangulated closed orientable 2-manifold with outward orientation.

    ``labels[k]`` is the original (pre-triangulation) face of triangle ``k``.
    """

    def __init__(self, vertices, faces, name="K"):
        self.name = name
        self.vertices = [Point3(*(Q(c) for c in v)) for v in vertices]
        self.tris, self.labels = [], []
        for f, poly in enumerate(faces):
            poly = list(poly)
            if len(poly) < 3:
                raise NonManifoldInput(f"face {f} has fewer than 3 vertices")
            for k in range(1, len(poly) - 1):
                self.tris.append((poly[0], poly[k], poly[k + 1]))
                self.labels.append(f)
        if not self.tris:
            raise NonManifoldInput("no faces")
        for a, b, c in self.tris:
            if not any(cross(sub(self.vertices[b], self.vertices[a]),
                             sub(self.vertices[c], self.vertices[a]))):
                raise NonManifoldInput(f"degenerate triangle {(a, b, c)}")
        self._check_manifold()
        if self.signed_volume6() < 0:
            self.tris = [(a, c, b) for a, b, c in self.tris]
        self._index_edges()

    # -- validation

    def _check_manifold(self):
        directed = {}
        for k, (a, b, c) in enumerate(self.tris):
            for u, v in ((a, b), (b, c), (c, a)):
                if (u, v) in directed:
                    raise NonManifoldInput(f"edge {(u, v)} used twice in the same direction")
                directed[(u, v)] = k
        for (u, v) in directed:
            if (v, u) not in directed:
                raise NonManifoldInput(f"edge {(u, v)} is a boundary edge")
        link = {}
        for a, b, c in self.tris:
            for v, p, q in ((a, b, c), (b, c, a), (c, a, b)):
                link.setdefault(v, {})[p] = q
        for v, nxt in link.items():
            start = next(iter(nxt))
            cur, steps = start, 0
            while True:
                cur = nxt[cur]
                steps += 1
                if cur == start or steps > len(nxt):
                    break
            if cur != start or steps != len(nxt):
                raise NonManifoldInput(f"vertex {v} is not a manifold vertex")

    def signed_volume6(self):
        vs = self.vertices
        return sum(dot(vs[a], cross(vs[b], vs[c])) for a, b, c in self.tris)

    def _index_edges(self):
        ef = {}
        for k, (a, b, c) in enumerate(self.tris):
            for u, v in ((a, b), (b, c), (c, a)):
                ef.setdefault((min(u, v), max(u, v)), []).append(k)
        self.edge_faces = ef
        self.edges = sorted(ef)
        self.original_edges = [e for e in self.edges
                               if self.labels[ef[e][0]] != self.labels[ef[e][1]]]
        self.adjacency = {}
        for u, v in self.edges:
            self.adjacency.setdefault(u, set()).add(v)
            self.adjacency.setdefault(v, set()).add(u)

    # -- views

    def triangles(self, start_id=0):
        vs = self.vertices
        return [Triangle3(start_id + k, vs[a], vs[b], vs[c]) for k, (a, b, c) in enumerate(self.tris)]

    def face_normal(self, label):
        k = self.labels.index(label)
        a, b, c = (self.vertices[i] for i in self.tris[k])
        return cross(sub(b, a), sub(c, a))

    def edge_labels(self, e):
        return {self.labels[k] for k in self.edge_faces[e]}

    @classmethod
    def box(cls, lo, hi, name="K"):
        x0, y0, z0 = lo
        x1, y1, z1 = hi
        vs = [(x, y, z) for x in (x0, x1) for y in (y0, y1) for z in (z0, z1)]
        faces = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
        return cls(vs, faces, name)

    def contains(self, p, seed=0):
        """True inside, False outside, None on the boundary (exact ray parity)."""
        rng = random.Random(seed)
        recs = [TriRecord(t) for t in self.triangles()]
        for _ in range(64):
            d = (rng.randint(-97, 97), rng.randint(-97, 97), rng.randint(1, 97))
            verdict = _parity(p, d, recs)
            if verdict != "retry":
                return verdict
        raise RuntimeError("no generic ray direction found")


def _parity(p, d, recs):
    pr = Probe(p, d, 0, 1)
    count = 0
    for rec in recs:
        n = rec.n
        den = dot(n, d)
        num = rec.nv - dot(n, p)
        if den == 0:
            if num == 0 and _coplanar_hit(pr, rec):
                return "retry"
            continue
        t = div(num, den)
        if t < 0:
            continue
        signs = set()
        for u, v in zip(rec.eu, rec.ev):
            s = dot(d, v) + dot(u, pr.m)
            signs.add((s > 0) - (s < 0))
        if 1 in signs and -1 in signs:
            continue
        if t == 0:
            return None
        if 0 in signs:
            return "retry"
        count += 1
    return count % 2 == 1


def _coplanar_hit(pr, rec):
    wide = Probe(pr.o, pr.d, 0, 1 << 62)
    return probe_tri(wide, rec, 0, 1 << 62) is not None


# -- IO ----------------------------------------------------------------------------

def _parse_off(text):
    rows = [ln.split("#")[0].split() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    head = rows[0]
    if head[0] != "OFF":
        raise ValueError("not an OFF file")
    rest = head[1:] if len(head) > 1 else None
    k = 1
    if not rest:
        rest = rows[1]
        k = 2
    nv, nf = int(rest[0]), int(rest[1])
    verts = [tuple(Q(c) for c in rows[k + i][:3]) for i in range(nv)]
    faces = []
    for i in range(nf):
        r = rows[k + nv + i]
        m = int(r[0])
        faces.append([int(x) for x in r[1:1 + m]])
    return verts, faces


def _parse_obj(text):
    verts, faces = [], []
    for ln in text.splitlines():
        r = ln.split("#")[0].split()
        if not r:
            continue
        if r[0] == "v":
            verts.append(tuple(Q(c) for c in r[1:4]))
        elif r[0] == "f":
            idx = []
            for tok in r[1:]:
                i = int(tok.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            faces.append(idx)
    return verts, faces


def load_mesh(path, name=None):
    """Read an OFF or ASCII OBJ file into a :class:`Polyhedron`."""
    with open(path) as f:
        text = f.read()
    name = name or os.path.splitext(os.path.basename(path))[0]
    if path.lower().endswith(".obj") or not text.lstrip().startswith("OFF"):
        verts, faces = _parse_obj(text)
    else:
        verts, faces = _parse_off(text)
    return Polyhedron(verts, faces, name)


def _fmt(c):
    if isinstance(c, int):
        return str(c)
    return str(int(c.numerator)) if c.denominator == 1 else f"{int(c.numerator)}/{int(c.denominator)}"


def dump_off(poly: Polyhedron):
    lines = ["OFF", f"{len(poly.vertices)} {len(poly.tris)} 0"]
    lines += [" ".join(_fmt(c) for c in v) for v in poly.vertices]
    lines += [f"3 {a} {b} {c}" for a, b, c in poly.tris]
    return "\n".join(lines) + "\n"


# -- intersection sketch ---------------------------------------------------------------

EDGE_FACE, ORIGINAL_K1, ORIGINAL_K2 = "edge-face", "original-K1", "original-K2"


@dataclass
class SketchVertex:
    point: Point3
    tag: str
    incidence: set = field(default_factory=set)


@dataclass
class IntersectionSketch:
    vertices: list
    edges: list

    def points(self, tag=None):
        return sorted(v.point for v in self.vertices if tag is None or v.tag == tag)

    def tags(self):
        return {v.point: v.tag for v in self.vertices}

    @property
    def is_empty(self):
        return not self.vertices

    def to_dict(self):
        return {
            "vertices": [{"point": [_fmt(c) for c in v.point], "tag": v.tag,
                          "incidence": sorted(_inc_str(i) for i in v.incidence)}
                         for v in self.vertices],
            "edges": [list(e) for e in self.edges],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1)


def _inc_str(inc):
    return ":".join(str(x) for x in inc)


def _edge_hits(seg, rec):
    """Points where a closed segment meets a closed triangle."""
    pr = Probe.from_segment(seg)
    t = probe_tri(pr, rec)
    if t is None:
        return []
    pts = [pr.point(t)]
    if dot(rec.n, pr.d) == 0:
        hi = 1
        for p, u in zip(rec.v, rec.eu):
            alpha = dot(cross(u, sub(pr.o, p)), rec.n)
            beta = dot(cross(u, pr.d), rec.n)
            if beta < 0:
                hi = min(hi, div(-alpha, beta))
        q = pr.point(hi)
        if q != pts[0]:
            pts.append(q)
    return pts


def _engine_for(poly):
    return Engine.build(Scene(poly.triangles()), EngineConfig())


def _crossings(A, B, eng_B, who, verts, crossed):
    """Edge-face vertices for edges of A against faces of B."""
    recs = eng_B.records
    for e in A.original_edges:
        i, j = e
        seg = Segment3(A.vertices[i], A.vertices[j])
        fa = A.edge_labels(e)
        for tid in eng_B.report(seg):
            g = B.labels[tid]
            for p in _edge_hits(seg, recs[tid]):
                v = verts.setdefault(p, SketchVertex(p, EDGE_FACE))
                v.incidence.add((who, "edge", i, j))
                v.incidence.add((_other(who), "face", g))
                for f in fa:
                    v.incidence.add(("pair",) + ((f, g) if who == "K1" else (g, f)))
                crossed.setdefault(e, []).append((p, tid))


def _other(who):
    return "K2" if who == "K1" else "K1"


def _classify_originals(A, B, crossed, recs_B):
    """Ids of A's vertices strictly inside B, decided per uncrossed cluster."""
    parent = list(range(len(A.vertices)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in A.original_edges:
        if e not in crossed:
            parent[find(e[0])] = find(e[1])
    clusters = {}
    for v in range(len(A.vertices)):
        clusters.setdefault(find(v), []).append(v)
    on_surface = {p for hits in crossed.values() for p, _ in hits}
    inside = set()
    for members in clusters.values():
        verdict = _cluster_verdict(A, members, crossed, recs_B)
        if verdict is None:
            verdict = B.contains(A.vertices[members[0]])
        if verdict:
            inside.update(v for v in members if A.vertices[v] not in on_surface)
    return inside


def _cluster_verdict(A, members, crossed, recs_B):
    mset = set(members)
    for e, hits in crossed.items():
        for u, w in (e, e[::-1]):
            if u not in mset:
                continue
            pu, pw = A.vertices[u], A.vertices[w]
            d = sub(pw, pu)
            dd = dot(d, d)
            best = None
            for p, tid in hits:
                s = div(dot(sub(p, pu), d), dd)
                if best is None or s < best[0]:
                    best = (s, [tid])
                elif s == best[0]:
                    best[1].append(tid)
            if best is None or best[0] == 0:
                continue
            sides = {(recs_B[t].nv < dot(recs_B[t].n, pu)) - (recs_B[t].nv > dot(recs_B[t].n, pu))
                     for t in best[1]}
            if len(sides) == 1 and 0 not in sides:
                return sides.pop() < 0
    return None


def _trace_edges(A, B, verts):
    groups = {}
    for v in verts.values():
        for inc in v.incidence:
            if inc[0] == "pair":
                groups.setdefault(inc[1:], []).append(v.point)
    index = {v.point: k for k, v in enumerate(sorted(verts.values(), key=lambda v: v.point))}
    edges = set()
    for (f, g), pts in groups.items():
        direction = cross(A.face_normal(f), B.face_normal(g))
        if not any(direction):
            continue
        pts = sorted(set(pts), key=lambda p: dot(p, direction))
        for k in range(0, len(pts) - 1, 2):
            a, b = index[pts[k]], index[pts[k + 1]]
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def polyhedra_intersect(K1: Polyhedron, K2: Polyhedron):
    """Vertices (tagged), face-face edges and incidences of ``K1 & K2``."""
    e1, e2 = _engine_for(K1), _engine_for(K2)
    verts = {}
    crossed1, crossed2 = {}, {}
    _crossings(K1, K2, e2, "K1", verts, crossed1)
    _crossings(K2, K1, e1, "K2", verts, crossed2)
    for v in _classify_originals(K1, K2, crossed1, e2.records):
        p = K1.vertices[v]
        verts.setdefault(p, SketchVertex(p, ORIGINAL_K1)).incidence.add(("K1", "vertex", v))
    for v in _classify_originals(K2, K1, crossed2, e1.records):
        p = K2.vertices[v]
        verts.setdefault(p, SketchVertex(p, ORIGINAL_K2)).incidence.add(("K2", "vertex", v))
    edges = _trace_edges(K1, K2, verts)
    ordered = sorted(verts.values(), key=lambda v: v.point)
    return IntersectionSketch(ordered, edges)
