"""Red/blue line pairs through a narrow-only segment engine.

Each line is represented by its portion inside a shared box.  The box is
grown to contain every pairwise crossing point (an exact preliminary pass),
so two lines cross iff their representatives do and the lines are not
parallel.
"""
from __future__ import annotations

import random

from ..engine import Engine, EngineConfig
from ..geom import Point3, Segment3, cross, div, orient3d, sub
from ..partition import PartitionConfig


class LineSet:
    """Lines given by two distinct points each; ``color`` is informational."""

    def __init__(self, lines, color="red"):
        self.lines = []
        for a, b in lines:
            a, b = Point3(*a), Point3(*b)
            if a == b:
                raise ValueError("a line needs two distinct points")
            self.lines.append((a, b))
        self.color = color

    def __len__(self):
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    def __getitem__(self, k):
        return self.lines[k]

    @classmethod
    def random_through_ball(cls, n, seed=0, radius=6, color="red"):
        """Lines through two random lattice points of a small ball; small
        radii make coplanar crossings common."""
        rng = random.Random(seed)
        pts = [(x, y, z) for x in range(-radius, radius + 1) for y in range(-radius, radius + 1)
               for z in range(-radius, radius + 1) if x * x + y * y + z * z <= radius * radius]
        out = []
        while len(out) < n:
            a, b = rng.sample(pts, 2)
            out.append((a, b))
        return cls(out, color)

    def representatives(self, box):
        return [clip_line(a, b, box) for a, b in self.lines]


def clip_line(a, b, box):
    """The segment of line ``ab`` inside the closed box (which must contain a and b)."""
    d = sub(b, a)
    lo = hi = None
    for k in range(3):
        if d[k] == 0:
            continue
        t0, t1 = div(box[0][k] - a[k], d[k]), div(box[1][k] - a[k], d[k])
        if t0 > t1:
            t0, t1 = t1, t0
        lo = t0 if lo is None else max(lo, t0)
        hi = t1 if hi is None else min(hi, t1)
    return Segment3(Point3(*(a[k] + lo * d[k] for k in range(3))),
                    Point3(*(a[k] + hi * d[k] for k in range(3))))


def crossing_point(a1, b1, a2, b2):
    """Common point of two crossing lines."""
    u, v = sub(b1, a1), sub(b2, a2)
    n = cross(u, v)
    nn = sum(c * c for c in n)
    w = sub(a2, a1)
    s = div(sum(c * m for c, m in zip(cross(w, v), n)), nn)
    return Point3(*(a1[k] + s * u[k] for k in range(3)))


def _parallel(a1, b1, a2, b2):
    return not any(cross(sub(b1, a1), sub(b2, a2)))


def candidate_box(red, blue, margin=1):
    """Box around all defining points and all red/blue crossing points."""
    pts = [p for ls in (red, blue) for line in ls for p in line]
    for a1, b1 in red:
        for a2, b2 in blue:
            if orient3d(a1, b1, a2, b2) == 0 and not _parallel(a1, b1, a2, b2):
                pts.append(crossing_point(a1, b1, a2, b2))
    lo = tuple(min(p[k] for p in pts) - margin for k in range(3))
    hi = tuple(max(p[k] for p in pts) + margin for k in range(3))
    return lo, hi


def line_pairs(red: LineSet, blue: LineSet, mode="count", config=None, stats=None):
    """``detect`` -> bool, ``count`` -> int, ``report`` -> sorted (red, blue) index pairs."""
    if mode not in ("detect", "count", "report"):
        raise ValueError(f"unknown mode {mode!r}")
    if not len(red) or not len(blue):
        return {"detect": False, "count": 0, "report": []}[mode]
    box = candidate_box(red, blue)
    reps = red.representatives(box)
    config = config or EngineConfig(partition=PartitionConfig(allow_wide=False))
    outer = (tuple(c - 1 for c in box[0]), tuple(c + 1 for c in box[1]))
    eng = Engine.from_segments(reps, outer, config)
    pairs = []
    for j, (a2, b2) in enumerate(blue):
        seg = clip_line(a2, b2, box)
        for i in eng.report(seg, stats):
            a1, b1 = red[i]
            if not _parallel(a1, b1, a2, b2):
                if mode == "detect":
                    return True
                pairs.append((i, j))
    if mode == "detect":
        return False
    if mode == "count":
        return len(pairs)
    return sorted(pairs)
