"""Search structures producing canonical subsets of a fixed id tuple.

Every query returns ``(sets, singles)``: ``sets`` are stored tuples whose
members certainly satisfy the level's condition, ``singles`` are ids the
structure could not decide and that the caller must test exactly.  Within
one query the returned sets are pairwise disjoint.
"""
from __future__ import annotations

import bisect
import math
import threading

from .arcs import CROSS, IN
from .geom import Q, div


def dyadic_domain(lo_x, hi_x, lo_y, hi_y):
    """Square box with integer center and power-of-two half side covering the input."""
    cx = math.floor((lo_x + hi_x) / 2)
    cy = math.floor((lo_y + hi_y) / 2)
    need = max(hi_x - cx, cx - lo_x, hi_y - cy, cy - lo_y, 1.0) + 1
    h = 1 << max(0, math.ceil(math.log2(need)))
    return (cx - h, cx + h, cy - h, cy + h)


class _BoxNode:
    __slots__ = ("box", "fbox", "inside", "cross", "children", "depth")

    def __init__(self, box, depth):
        self.box = box
        self.fbox = tuple(float(c) for c in box)
        self.inside = ()
        self.cross = ()
        self.children = None
        self.depth = depth


class BoxCutting:
    """Quadtree cutting of a box domain.

    Each node keeps the ids whose region contains the node's closed box but
    not its parent's (a delta along the root path) and, at leaves, the ids
    whose boundary crosses it.  Children are built on first use.
    """

    def __init__(self, ids, classify, domain, leaf_size=None, max_depth=20):
        self.n = len(ids)
        self.leaf_size = leaf_size or max(8, math.isqrt(max(self.n - 1, 0)) + 1)
        self.max_depth = max_depth
        self.classify = classify
        self.domain = tuple(Q(c) for c in domain)
        self._lock = threading.Lock()
        self.root = _BoxNode(self.domain, 0)
        self._fill(self.root, ids)

    @property
    def r(self):
        return max(1, self.n / self.leaf_size)

    def _fill(self, node, ids):
        ins, cross = [], []
        for i in ids:
            c = self.classify(i, node.fbox)
            if c == IN:
                ins.append(i)
            elif c == CROSS:
                cross.append(i)
        node.inside = tuple(ins)
        node.cross = tuple(cross)

    def _is_leaf(self, node):
        return len(node.cross) <= self.leaf_size or node.depth >= self.max_depth

    def _children(self, node):
        if node.children is None:
            with self._lock:
                if node.children is None:
                    x0, x1, y0, y1 = node.box
                    xm, ym = div(x0 + x1, 2), div(y0 + y1, 2)
                    kids = []
                    for bx in ((x0, xm), (xm, x1)):
                        for by in ((y0, ym), (ym, y1)):
                            k = _BoxNode((bx[0], bx[1], by[0], by[1]), node.depth + 1)
                            self._fill(k, node.cross)
                            kids.append(k)
                    node.children = kids
        return node.children

    def contains(self, x, y):
        x0, x1, y0, y1 = self.domain
        return x0 <= x <= x1 and y0 <= y <= y1

    def leaf_path(self, x, y):
        node = self.root
        path = [node]
        while not self._is_leaf(node):
            x0, x1, y0, y1 = node.box
            xm, ym = div(x0 + x1, 2), div(y0 + y1, 2)
            k = (2 if x >= xm else 0) + (1 if y >= ym else 0)
            node = self._children(node)[k]
            path.append(node)
        return path

    def query(self, x, y, all_ids=None):
        if not self.contains(x, y):
            return [], list(all_ids if all_ids is not None else ())
        path = self.leaf_path(x, y)
        sets = [nd.inside for nd in path if nd.inside]
        return sets, list(path[-1].cross)

    # -- whole-structure inspection

    def build_all(self):
        stack = [self.root]
        while stack:
            nd = stack.pop()
            if not self._is_leaf(nd):
                stack.extend(self._children(nd))
        return self

    def leaves(self):
        out, stack = [], [self.root]
        while stack:
            nd = stack.pop()
            if self._is_leaf(nd):
                out.append(nd)
            elif nd.children is not None:
                stack.extend(nd.children)
        return out

    def max_conflict(self):
        return max((len(nd.cross) for nd in self.build_all().leaves()), default=0)

    # -- ordered walk along a planar ray

    def walk(self, rho, t0, t1):
        """Yield ``(leaf, a, b)`` for the leaves met by ``rho`` on ``[t0, t1]``,
        in order; ``t1=None`` means unbounded."""
        span = _clip_box(rho, self.root.box, t0, t1)
        if span is None:
            return
        yield from self._walk(self.root, rho, *span)

    def _walk(self, node, rho, a, b):
        if self._is_leaf(node):
            yield node, a, b
            return
        parts = []
        for k in self._children(node):
            s = _clip_box(rho, k.box, a, b)
            if s is not None:
                parts.append((s[0], s[1], k))
        parts.sort(key=lambda p: (p[0], p[1]))
        for lo, hi, k in parts:
            yield from self._walk(k, rho, lo, hi)


def _clip_box(rho, box, t0, t1):
    x0, x1, y0, y1 = box
    lo, hi = t0, t1
    for o, d, m0, m1 in ((rho.ox, rho.dx, x0, x1), (rho.oy, rho.dy, y0, y1)):
        if d == 0:
            if not (m0 <= o <= m1):
                return None
            continue
        ta, tb = div(m0 - o, d), div(m1 - o, d)
        if ta > tb:
            ta, tb = tb, ta
        lo = max(lo, ta)
        hi = tb if hi is None else min(hi, tb)
        if lo > hi:
            return None
    return lo, hi


class SortedTree:
    """Ids sorted by an exact key; prefix and suffix queries return O(log n)
    stored tuples."""

    def __init__(self, keyed):
        keyed = sorted(keyed, key=lambda kv: (kv[0], kv[1]))
        self.keys = [k for k, _ in keyed]
        self.ids = tuple(i for _, i in keyed)
        self._nodes = {}
        self._lock = threading.Lock()

    def _node(self, lo, hi):
        t = self._nodes.get((lo, hi))
        if t is None:
            with self._lock:
                t = self._nodes.setdefault((lo, hi), self.ids[lo:hi])
        return t

    def _range(self, lo, hi):
        out = []
        self._collect(0, len(self.ids), lo, hi, out)
        return out

    def _collect(self, a, b, lo, hi, out):
        if hi <= a or b <= lo or a >= b:
            return
        if lo <= a and b <= hi:
            out.append(self._node(a, b))
            return
        m = (a + b) // 2
        self._collect(a, m, lo, hi, out)
        self._collect(m, b, lo, hi, out)

    def less(self, x, strict=True):
        k = bisect.bisect_left(self.keys, x) if strict else bisect.bisect_right(self.keys, x)
        return self._range(0, k)

    def greater(self, x, strict=True):
        k = bisect.bisect_right(self.keys, x) if strict else bisect.bisect_left(self.keys, x)
        return self._range(k, len(self.ids))


class SpanTree:
    """Segment tree over closed x-intervals; a stab returns the disjoint
    stored tuples on the root-to-leaf path."""

    def __init__(self, intervals):
        xs = sorted({lo for lo, _, _ in intervals} | {hi for _, hi, _ in intervals})
        self.xs = xs
        m = 2 * len(xs) + 1          # open gaps and points alternate
        self.size = m
        lists = {}
        for lo, hi, i in intervals:
            a = 2 * bisect.bisect_left(xs, lo) + 1
            b = 2 * bisect.bisect_left(xs, hi) + 1
            self._insert(1, 0, m, a, b + 1, i, lists)
        self.lists = {k: tuple(v) for k, v in lists.items()}

    def _insert(self, node, a, b, lo, hi, i, lists):
        if hi <= a or b <= lo:
            return
        if lo <= a and b <= hi:
            lists.setdefault(node, []).append(i)
            return
        m = (a + b) // 2
        self._insert(2 * node, a, m, lo, hi, i, lists)
        self._insert(2 * node + 1, m, b, lo, hi, i, lists)

    def _slot(self, x):
        k = bisect.bisect_left(self.xs, x)
        if k < len(self.xs) and self.xs[k] == x:
            return 2 * k + 1
        return 2 * k

    def stab(self, x):
        s = self._slot(x)
        out = []
        node, a, b = 1, 0, self.size
        while True:
            lst = self.lists.get(node)
            if lst:
                out.append(lst)
            if b - a <= 1:
                return out
            m = (a + b) // 2
            if s < m:
                node, b = 2 * node, m
            else:
                node, a = 2 * node + 1, m


class _KDNode:
    __slots__ = ("ids", "bbox", "kids")


class KDHalfplane:
    """2D kd-tree over float points answering ``c0 + c1*x + c2*y > 0``
    conservatively: nodes decided within the margin become canonical sets,
    undecided leaves become singles."""

    def __init__(self, points, leaf_size=8):
        self.leaf_size = leaf_size
        self.root = self._build(list(points), 0)

    def _build(self, pts, depth):
        nd = _KDNode()
        nd.ids = tuple(i for _, _, i in pts)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        nd.bbox = (min(xs), max(xs), min(ys), max(ys)) if pts else (0.0, 0.0, 0.0, 0.0)
        nd.kids = None
        if len(pts) > self.leaf_size:
            pts.sort(key=lambda p: p[depth % 2])
            m = len(pts) // 2
            nd.kids = (self._build(pts[:m], depth + 1), self._build(pts[m:], depth + 1))
        return nd

    def query(self, c0, c1, c2, eps):
        sets, singles = [], []
        stack = [self.root]
        while stack:
            nd = stack.pop()
            if not nd.ids:
                continue
            x0, x1, y0, y1 = nd.bbox
            px, qx = c1 * x0, c1 * x1
            py, qy = c2 * y0, c2 * y1
            lo = c0 + min(px, qx) + min(py, qy)
            hi = c0 + max(px, qx) + max(py, qy)
            if lo > eps:
                sets.append(nd.ids)
            elif hi < -eps:
                continue
            elif nd.kids is None:
                singles.extend(nd.ids)
            else:
                stack.extend(nd.kids)
        return sets, singles
