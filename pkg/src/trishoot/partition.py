"""Recursive convex-cell partition of a triangle soup.

Each node of the tree owns a convex cell.  The triangles handed to a node are
split three ways against it:

* narrow: some edge meets the open cell (passed on to the children),
* wide: no edge in the open cell but the triangle meets the open cell,
* boundary: meets the closed cell only along its boundary.

A node is split by a small local binary space partition (BSP) of plane cuts.
The BSP keeps cutting its heaviest region until every region is crossed by at
most ``E / t`` narrow edges (``E`` = edges crossing the node), a region cap is
hit, or no acceptable plane exists.  The BSP leaves become the children.
"""
from __future__ import annotations

import json
import math
import random
import threading
from collections import Counter
from dataclasses import dataclass

from .geom import Plane3, Probe, Segment3, Triangle3, div, dot, sub
from .polytope import Cell, clip_polygon, flip


class DegenerateSplit(Exception):
    """No candidate plane gives an acceptable split of a region."""


class OutOfBounds(ValueError):
    pass


@dataclass
class PartitionConfig:
    branch_target: int = 8
    leaf_threshold: int = 32
    max_depth: int = 10
    cut_candidates: int = 8
    rng_seed: int = 0
    region_cap: int = 0          # 0 means 4 * branch_target
    allow_wide: bool = True      # False for items without interior (segments)
    score_sample: int = 384

    def __post_init__(self):
        if self.branch_target < 2:
            raise ValueError("branch_target must be >= 2")
        if self.leaf_threshold < 1:
            raise ValueError("leaf_threshold must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.cut_candidates < 1:
            raise ValueError("cut_candidates must be >= 1")

    @property
    def cap(self):
        return self.region_cap or 4 * self.branch_target


class Item:
    """A partitioned object: a triangle or a segment (degenerate triangle)."""
    __slots__ = ("id", "verts", "edges")

    def __init__(self, id, verts):
        self.id = id
        self.verts = tuple(verts)
        if len(self.verts) == 2:
            pairs = [(self.verts[0], self.verts[1])]
        else:
            pairs = [(self.verts[i], self.verts[(i + 1) % 3]) for i in range(3)]
        self.edges = tuple((a, sub(b, a)) for a, b in pairs)

    @classmethod
    def of(cls, obj, id=None):
        if isinstance(obj, Triangle3):
            return cls(obj.id if id is None else id, obj.vertices)
        if isinstance(obj, Segment3):
            return cls(id, (obj.a, obj.b))
        raise TypeError(f"cannot partition {type(obj).__name__}")


# -- BSP -----------------------------------------------------------------------

class BSPNode:
    __slots__ = ("plane", "index", "neg", "pos", "leaf")

    def __init__(self):
        self.plane = self.index = self.neg = self.pos = self.leaf = None


class _Region:
    """Working state for one BSP region during construction."""
    __slots__ = ("cell", "edges", "polys", "bsp", "final")

    def __init__(self, cell, edges, polys, bsp):
        self.cell = cell
        self.edges = edges        # list of (item id, edge index, t0, t1)
        self.polys = polys        # item id -> item clipped to the closed region
        self.bsp = bsp
        self.final = False


def _plane_values(h: Plane3, items, edges):
    n, off = h.normal, h.offset
    out = []
    for iid, k, t0, t1 in edges:
        a, d = items[iid].edges[k]
        base = n[0] * a[0] + n[1] * a[1] + n[2] * a[2] - off
        slope = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
        out.append((base, slope, base + t0 * slope, base + t1 * slope))
    return out


def _count(vals):
    sn = sp = cut = 0
    for _, _, v0, v1 in vals:
        neg = v0 < 0 or v1 < 0
        pos = v0 > 0 or v1 > 0
        if neg and pos:
            cut += 1
        elif neg:
            sn += 1
        elif pos:
            sp += 1
    return sn, sp, cut


def _acceptable(E, sn, sp, cut):
    return 2 * max(sn, sp) <= E and max(sn, sp) + cut < E


def split_edges(h: Plane3, items, edges):
    """Distribute edge intervals to the closed halfspaces of ``h``."""
    neg, pos = [], []
    for (iid, k, t0, t1), (base, slope, v0, v1) in zip(edges, _plane_values(h, items, edges)):
        if v0 < 0 or v1 < 0:
            if slope == 0:
                neg.append((iid, k, t0, t1))
            else:
                tc = div(-base, slope)
                neg.append((iid, k, t0, min(t1, tc)) if slope > 0 else (iid, k, max(t0, tc), t1))
        if v0 > 0 or v1 > 0:
            if slope == 0:
                pos.append((iid, k, t0, t1))
            else:
                tc = div(-base, slope)
                pos.append((iid, k, max(t0, tc), t1) if slope > 0 else (iid, k, t0, min(t1, tc)))
    return neg, pos


def _median(vals):
    vals = sorted(vals)
    return vals[(len(vals) - 1) // 2]


def _offsets(m):
    if isinstance(m, int):
        return [m]
    f = math.floor(m)
    return [int(f), int(f) + 1, m]


def candidate_planes(items, edges, rng, count):
    """Axis-aligned medians of clipped edge endpoints plus random planes."""
    pts = []
    for iid, k, t0, t1 in edges:
        a, d = items[iid].edges[k]
        for t in (t0, t1):
            pts.append((a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]))
    cands = []
    for k in range(3):
        m = _median([p[k] for p in pts])
        n = [0, 0, 0]
        n[k] = 1
        for off in _offsets(m):
            cands.append(Plane3(tuple(n), off))
    for _ in range(max(0, count - 3)):
        while True:
            n = tuple(rng.randint(-2, 2) for _ in range(3))
            if any(n):
                break
        m = _median([dot(n, p) for p in pts])
        for off in _offsets(m):
            cands.append(Plane3(n, off))
    return cands


def choose_split(items, edges, rng, config: PartitionConfig):
    """Best acceptable cut for a region; raises ``DegenerateSplit``."""
    E = len(edges)
    if E == 0:
        raise DegenerateSplit("no edges to separate")
    if E > config.score_sample:
        probe = rng.sample(edges, config.score_sample)
    else:
        probe = edges
    cands = candidate_planes(items, probe, rng, config.cut_candidates)
    scored = []
    for i, h in enumerate(cands):
        sn, sp, cut = _count(_plane_values(h, items, probe))
        scored.append((max(sn, sp) + cut, i, h))
    scored.sort(key=lambda x: (x[0], x[1]))
    for _, _, h in scored:
        sn, sp, cut = _count(_plane_values(h, items, edges))
        if _acceptable(E, sn, sp, cut):
            return h, (E, sn, sp, cut)
    raise DegenerateSplit(f"no acceptable plane among {len(cands)} candidates for {E} edges")


# -- tree ----------------------------------------------------------------------

class PartitionNode:
    def __init__(self, cell, depth):
        self.cell = cell
        self.depth = depth
        self.wide_ids = []
        self.narrow_ids = []
        self.boundary_ids = []
        self.polys = {}            # wide/boundary id -> polygon clipped to the cell
        self.edge_count = 0
        self.cutting_planes = []
        self.children = []
        self.bsp = None
        self.forced = False
        self.splits = []           # (E, strictly neg, strictly pos, cut) per BSP cut
        self.wide_structure = None
        self.coplanar_structures = {}
        self._lock = threading.Lock()

    @property
    def is_leaf(self):
        return not self.children

    def coplanar_structure(self, plane_index, builder):
        """Lazily build (once) the planar structure for a cutting plane."""
        s = self.coplanar_structures.get(plane_index)
        if s is None:
            with self._lock:
                s = self.coplanar_structures.get(plane_index)
                if s is None:
                    s = builder(self, self.cutting_planes[plane_index])
                    self.coplanar_structures[plane_index] = s
        return s

    def max_child_edges(self):
        return max((c.edge_count for c in self.children), default=0)


class PartitionTree:
    def __init__(self, items, bbox, config: PartitionConfig):
        self.items = {it.id: it for it in items}
        self.bbox = bbox
        self.config = config
        self.rng = random.Random(config.rng_seed)
        self.root_cell = Cell.box(*bbox)
        self.root = None
        self.nodes = []
        self._build()

    # -- construction

    def _build(self):
        lo, hi = self.bbox
        edges, polys = [], {}
        for iid, it in self.items.items():
            if not all(lo[k] < v[k] < hi[k] for v in it.verts for k in range(3)):
                raise OutOfBounds(f"item {iid} is not strictly inside the box")
            polys[iid] = list(it.verts)
            for k in range(len(it.edges)):
                edges.append((iid, k, 0, 1))
        self.root = self._make_node(self.root_cell, 0, edges, polys)

    def _make_node(self, cell, depth, edges, polys):
        node = PartitionNode(cell, depth)
        self.nodes.append(node)
        narrow = sorted({e[0] for e in edges})
        nset = set(narrow)
        node.narrow_ids = narrow
        node.edge_count = len(edges)
        for iid in sorted(polys):
            if iid in nset:
                continue
            poly = polys[iid]
            if self.config.allow_wide and cell.polygon_meets_open(poly):
                node.wide_ids.append(iid)
            else:
                node.boundary_ids.append(iid)
            node.polys[iid] = poly
        if len(narrow) <= self.config.leaf_threshold or depth >= self.config.max_depth:
            return node
        regions = self._local_bsp(node, edges, {i: polys[i] for i in narrow})
        if len(regions) == 1:
            node.forced = True
            return node
        for idx, reg in enumerate(regions):
            reg.bsp.leaf = idx
        for reg in regions:
            node.children.append(self._make_node(reg.cell, depth + 1, reg.edges, reg.polys))
        return node

    def _local_bsp(self, node, edges, polys):
        cfg = self.config
        target = len(edges) / cfg.branch_target
        root = BSPNode()
        node.bsp = root
        regions = [_Region(node.cell, edges, polys, root)]
        while len(regions) < cfg.cap:
            open_regs = [r for r in regions if not r.final and len(r.edges) > target]
            if not open_regs:
                break
            reg = max(open_regs, key=lambda r: len(r.edges))
            try:
                h, rec = choose_split(self.items, reg.edges, self.rng, cfg)
            except DegenerateSplit:
                reg.final = True
                continue
            node.splits.append(rec)
            node.cutting_planes.append(h)
            neg_e, pos_e = split_edges(h, self.items, reg.edges)
            neg_p, pos_p = {}, {}
            fh = flip(h)
            for iid, poly in reg.polys.items():
                a = clip_polygon(poly, h)
                if a:
                    neg_p[iid] = a
                b = clip_polygon(poly, fh)
                if b:
                    pos_p[iid] = b
            cneg, cpos = reg.cell.split(h)
            bneg, bpos = BSPNode(), BSPNode()
            bsp = reg.bsp
            bsp.plane, bsp.neg, bsp.pos = h, bneg, bpos
            bsp.index = len(node.cutting_planes) - 1
            i = regions.index(reg)
            regions[i:i + 1] = [_Region(cneg, neg_e, neg_p, bneg),
                                _Region(cpos, pos_e, pos_p, bpos)]
        return regions

    # -- queries

    def walk(self, node, pr: Probe, lo, hi):
        """Split ``[lo, hi]`` among the children of ``node``.

        Returns ``(pieces, coplanar)``: ``pieces`` is a list of ``(child, lo,
        hi)`` in increasing parameter order; ``coplanar`` lists ``(plane index,
        lo, hi)`` for parts lying inside a cutting plane.
        """
        pieces, cop = [], []
        if node.bsp is None:
            return [(node, lo, hi)], cop
        _walk(node.bsp, node, pr, lo, hi, pieces, cop)
        return pieces, cop

    def locate_point(self, p):
        lo, hi = self.bbox
        if not all(lo[k] <= p[k] <= hi[k] for k in range(3)):
            raise OutOfBounds(f"point {tuple(p)} outside the bounding box")
        node = self.root
        while node.children:
            b = node.bsp
            while b.leaf is None:
                b = b.neg if b.plane.side(p) <= 0 else b.pos
            node = node.children[b.leaf]
        return node

    def leaves(self):
        return [n for n in self.nodes if n.is_leaf]

    # -- telemetry

    def stats(self):
        levels = {}
        for n in self.nodes:
            lv = levels.setdefault(n.depth, {"nodes": 0, "leaves": 0, "forced": 0, "narrow": 0,
                                             "wide": 0, "boundary": 0, "crossing": Counter()})
            lv["nodes"] += 1
            lv["leaves"] += n.is_leaf
            lv["forced"] += n.forced
            lv["narrow"] += len(n.narrow_ids)
            lv["wide"] += len(n.wide_ids)
            lv["boundary"] += len(n.boundary_ids)
            bucket = 0 if n.edge_count == 0 else 1 << (n.edge_count.bit_length() - 1)
            lv["crossing"][bucket] += 1
        out = {"nodes": len(self.nodes), "levels": []}
        for d in sorted(levels):
            lv = levels[d]
            lv["crossing"] = {str(k): v for k, v in sorted(lv["crossing"].items())}
            lv["depth"] = d
            out["levels"].append(lv)
        out["wide_total"] = sum(len(n.wide_ids) for n in self.nodes)
        out["narrow_total"] = sum(len(n.narrow_ids) for n in self.nodes)
        out["split_records"] = sum(len(n.splits) for n in self.nodes)
        return out

    def stats_json(self):
        return json.dumps(self.stats(), indent=2, sort_keys=True)


def _walk(b, node, pr, lo, hi, pieces, cop):
    while b.leaf is None:
        h = b.plane
        n = h.normal
        o, d = pr.o, pr.d
        base = n[0] * o[0] + n[1] * o[1] + n[2] * o[2] - h.offset
        slope = n[0] * d[0] + n[1] * d[1] + n[2] * d[2]
        if slope == 0:
            if base == 0:
                cop.append((b.index, lo, hi))
                return
            b = b.neg if base < 0 else b.pos
            continue
        tc = div(-base, slope)
        if tc <= lo or tc >= hi:
            t = hi if tc <= lo else lo
            if lo == hi:
                t = lo
            v = base + t * slope
            if v == 0:
                # the interval touches the plane only at an endpoint
                v = base + (lo if t == hi else hi) * slope
            b = b.neg if v <= 0 else b.pos
            continue
        first, second = (b.neg, b.pos) if slope > 0 else (b.pos, b.neg)
        _walk(first, node, pr, lo, tc, pieces, cop)
        _walk(second, node, pr, tc, hi, pieces, cop)
        return
    pieces.append((node.children[b.leaf], lo, hi))


def segment_cell_walk(tree: PartitionTree, node: PartitionNode, e):
    """Ordered ``(child, sub-segment)`` pieces and ``(plane, sub-segment)``
    coplanar pieces for a segment inside ``node``'s cell."""
    pr = e if isinstance(e, Probe) else Probe.from_segment(e)
    pieces, cop = tree.walk(node, pr, pr.lo, pr.hi)
    return ([(c, Segment3(pr.point(a), pr.point(b)) if a != b else (pr.point(a),)) for c, a, b in pieces],
            [(node.cutting_planes[i], Segment3(pr.point(a), pr.point(b)) if a != b else (pr.point(a),))
             for i, a, b in cop])


def items_of_scene(scene):
    return [Item.of(t) for t in scene.triangles]


def build_partition(scene, config: PartitionConfig = None) -> PartitionTree:
    config = config or PartitionConfig()
    if not scene.triangles:
        raise ValueError("scene is empty")
    tree = PartitionTree(items_of_scene(scene), scene.bbox, config)
    tree.scene = scene
    return tree


def classify(cell: Cell, items, allow_wide=True):
    """Exact three-way split against ``cell``: (wide, narrow, disjoint) ids.

    Items meeting only the cell boundary count as wide here; use
    ``classify_detailed`` to separate them.
    """
    wide, narrow, boundary, disjoint = classify_detailed(cell, items, allow_wide)
    return sorted(wide + boundary), narrow, disjoint


def classify_detailed(cell: Cell, items, allow_wide=True):
    wide, narrow, boundary, disjoint = [], [], [], []
    for obj in items:
        it = obj if isinstance(obj, Item) else Item.of(obj)
        if any(cell.probe_meets_open(Probe(a, d, 0, 1)) for a, d in it.edges):
            narrow.append(it.id)
            continue
        poly = cell.clip(list(it.verts))
        if not poly:
            disjoint.append(it.id)
        elif allow_wide and cell.polygon_meets_open(poly):
            wide.append(it.id)
        else:
            boundary.append(it.id)
    return sorted(wide), sorted(narrow), sorted(boundary), sorted(disjoint)
