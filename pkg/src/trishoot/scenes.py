"""Deterministic scene and query generators, plus triangle-soup text IO.

The soup format is OFF-like::

    TRISOUP
    <n>
    <id> x0 y0 z0 x1 y1 z1 x2 y2 z2
    ...

Coordinates are written as integers or exact ``p/q`` rationals.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .geom import Point3, Q, Ray3, Segment3, Triangle3, add, cross, scale
from .oracle import Scene

SIDE = 4096


@dataclass(frozen=True)
class SceneSpec:
    kind: str = "random-uniform"
    n: int = 100
    size: int = SIDE
    seed: int = 0
    path: str = None          # for mesh-file


def _tri(rng, tid, c, s, lo, hi):
    while True:
        vs = []
        for _ in range(3):
            vs.append(Point3(*(min(hi, max(lo, c[k] + rng.randint(-s, s))) for k in range(3))))
        try:
            return Triangle3(tid, *vs)
        except ValueError:
            continue


def random_uniform(n, seed=0, size=SIDE):
    """Triangles of extent about ``size / sqrt(n)`` scattered uniformly, so a
    random line meets a roughly constant number of them as ``n`` grows.
    Vertices are clamped to the box, which flattens some triangles onto its
    faces."""
    rng = random.Random(seed)
    s = max(2, int(2 * size / math.sqrt(n)))
    tris = []
    for i in range(n):
        c = [rng.randint(1, size - 1) for _ in range(3)]
        tris.append(_tri(rng, i, c, s, 1, size - 1))
    return tris


def general_position(n, seed=0, size=SIDE):
    """Like :func:`random_uniform` but with centers far enough from the box
    faces that no vertex is clamped; coplanar or collinear coincidences then
    need exact integer accidents."""
    rng = random.Random(seed)
    s = max(2, int(2 * size / math.sqrt(n)))
    tris = []
    for i in range(n):
        c = [rng.randint(s + 1, size - s - 1) for _ in range(3)]
        tris.append(_tri(rng, i, c, s, 1, size - 1))
    return tris


def stacked_sheets(n, seed=0, size=SIDE):
    """``n`` parallel horizontal triangles covering the same footprint."""
    tris = []
    step = max(1, (size - 2) // (n + 1))
    for i in range(n):
        z = 1 + step * (i + 1)
        tris.append(Triangle3(i, Point3(1, 1, z), Point3(size - 1, 1, z), Point3(1, size - 1, z)))
    return tris


def clustered(n, seed=0, size=SIDE, clusters=5):
    """Small triangles in a few tight blobs plus a handful of large ones."""
    rng = random.Random(seed)
    centers = [[rng.randint(size // 8, size - size // 8) for _ in range(3)] for _ in range(clusters)]
    big = max(1, n // 50)
    tris = []
    for i in range(n):
        if i < big:
            c = [rng.randint(size // 4, 3 * size // 4) for _ in range(3)]
            tris.append(_tri(rng, i, c, size // 2, 1, size - 1))
        else:
            cc = centers[rng.randrange(clusters)]
            c = [cc[k] + rng.randint(-size // 16, size // 16) for k in range(3)]
            tris.append(_tri(rng, i, c, max(2, size // 64), 1, size - 1))
    return tris


def generate(spec: SceneSpec) -> Scene:
    if spec.kind == "random-uniform":
        return Scene(random_uniform(spec.n, spec.seed, spec.size))
    if spec.kind == "stacked-sheets":
        return Scene(stacked_sheets(spec.n, spec.seed, spec.size))
    if spec.kind == "clustered":
        return Scene(clustered(spec.n, spec.seed, spec.size))
    if spec.kind == "mesh-file":
        from .apps.polyhedra import load_mesh
        poly = load_mesh(spec.path)
        return Scene(poly.triangles())
    raise ValueError(f"unknown scene kind {spec.kind!r}")


# -- queries -------------------------------------------------------------------

def random_rays(n, seed=0, size=SIDE, spread=None):
    """Rays from points inside the scene box toward random integer directions."""
    rng = random.Random(seed)
    out = []
    for _ in range(n):
        o = Point3(*(rng.randint(0, size) for _ in range(3)))
        while True:
            d = tuple(rng.randint(-64, 64) for _ in range(3))
            if any(d):
                break
        out.append(Ray3(o, d))
    return out


def random_segments(n, seed=0, size=SIDE, max_len=None):
    rng = random.Random(seed)
    max_len = max_len or size
    out = []
    while len(out) < n:
        a = [rng.randint(0, size) for _ in range(3)]
        b = [min(size, max(0, a[k] + rng.randint(-max_len, max_len))) for k in range(3)]
        if a != b:
            out.append(Segment3(Point3(*a), Point3(*b)))
    return out


# -- IO ------------------------------------------------------------------------

def _fmt(c):
    if isinstance(c, int):
        return str(c)
    num, den = c.numerator, c.denominator
    return str(int(num)) if den == 1 else f"{int(num)}/{int(den)}"


def dump_soup(triangles) -> str:
    lines = ["TRISOUP", str(len(triangles))]
    for t in triangles:
        lines.append(" ".join([str(t.id)] + [_fmt(c) for v in t.vertices for c in v]))
    return "\n".join(lines) + "\n"


def parse_soup(text: str):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0] != ["TRISOUP"]:
        raise ValueError("not a TRISOUP file")
    n = int(rows[1][0])
    tris = []
    for row in rows[2:2 + n]:
        if len(row) != 10:
            raise ValueError(f"bad triangle line: {' '.join(row)}")
        c = [Q(x) for x in row[1:]]
        tris.append(Triangle3(int(row[0]), Point3(*c[0:3]), Point3(*c[3:6]), Point3(*c[6:9])))
    if len(tris) != n:
        raise ValueError(f"expected {n} triangles, found {len(tris)}")
    return tris


def write_scene(path, triangles):
    with open(path, "w") as f:
        f.write(dump_soup(triangles))


def read_scene(path) -> Scene:
    with open(path) as f:
        return Scene(parse_soup(f.read()))


def wide_through_box(n, seed=0, side=64, reach=1000):
    """Large triangles whose planes pass through the cube ``[0, side]^3``
    and whose corners lie far outside it, so they are wide in that cube."""
    rng = random.Random(seed)
    tris = []
    while len(tris) < n:
        c = [rng.randint(side // 8, side - side // 8) for _ in range(3)]
        nrm = [rng.randint(-5, 5) for _ in range(3)]
        if not any(nrm):
            continue
        u = cross(nrm, (1, 0, 0))
        if not any(u):
            u = cross(nrm, (0, 1, 0))
        v = cross(nrm, u)
        pts = [Point3(*add(c, add(scale(u, reach * a), scale(v, reach * b))))
               for a, b in ((-3, -3), (3, -1), (-1, 3))]
        tris.append(Triangle3(len(tris), *pts))
    return tris


def overlapping_sheets(n, seed=0, size=SIDE):
    """Tilted triangles each covering the whole square ``[0, size]^2`` in
    projection, at random heights: vertical segments meet many of them."""
    rng = random.Random(seed)
    tris = []
    for i in range(n):
        z = [rng.randint(0, size) for _ in range(3)]
        tris.append(Triangle3(i, Point3(-size, -size, z[0]), Point3(3 * size, -size, z[1]),
                              Point3(-size, 3 * size, z[2])))
    return tris


def vertical_segments(n, seed=0, size=SIDE, min_len=0, max_len=None):
    rng = random.Random(seed)
    max_len = max_len or size
    out = []
    for _ in range(n):
        x, y = rng.randint(0, size), rng.randint(0, size)
        length = rng.randint(max(1, min_len), max_len)
        z0 = rng.randint(-size, size - length)
        out.append(Segment3(Point3(x, y, z0), Point3(x, y, z0 + length)))
    return out
