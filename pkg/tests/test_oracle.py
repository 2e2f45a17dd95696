import json
from decimal import Decimal
from pathlib import Path

import pytest

from trishoot.algebraic import as_float
from trishoot.apps import LineSet
from trishoot.arcs import Arc2, Ray2, random_arcs, random_rays2
from trishoot.geom import P, Q, Ray3, Segment3, Triangle3
from trishoot.oracle import (BatchOracle, Scene, brute_arc_first_hit, brute_arrangement_vertices,
                             brute_first_hit, brute_line_pairs, brute_report, brute_shoot)
from trishoot.scenes import random_segments, random_uniform

FIX = Path(__file__).parent / "fixtures"
UNIT = Triangle3(0, P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
STAB = Segment3(P("1/4", "1/4", 1), P("1/4", "1/4", -1))


def _stack(n=5):
    return [Triangle3(i, P(0, 0, Q(f"{i}/4")), P(1, 0, Q(f"{i}/4")), P(0, 1, Q(f"{i}/4")))
            for i in range(n)]


def test_first_hit_single_triangle():
    h = brute_first_hit(Scene([UNIT]), STAB)
    assert (h.triangle_id, h.t, h.point) == (0, Q("1/2"), P("1/4", "1/4", 0))


def test_first_hit_empty_scene():
    assert brute_first_hit(Scene([]), STAB) is None


def test_nearer_parallel_plane_first():
    low = Triangle3(0, P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
    high = Triangle3(1, P(0, 0, "1/2"), P(1, 0, "1/2"), P(0, 1, "1/2"))
    e = Segment3(P("1/4", "1/4", 1), P("1/4", "1/4", -1))
    assert brute_first_hit(Scene([low, high]), e).triangle_id == 1


def test_report_stack_and_miss():
    sc = Scene(_stack())
    assert brute_report(sc, Segment3(P("1/4", "1/4", 2), P("1/4", "1/4", -1))) == [0, 1, 2, 3, 4]
    assert brute_report(sc, Segment3(P(5, 5, 5), P(6, 6, 6))) == []


def test_shoot_clips_to_box():
    sc = Scene([UNIT])
    hit = brute_shoot(sc, Ray3(P("1/4", "1/4", "1/2"), (0, 0, -1)))
    assert hit == (0, P("1/4", "1/4", 0))
    assert brute_shoot(sc, Ray3(P("1/4", "1/4", "1/2"), (0, 0, 1))) is None


def test_report_fixture():
    data = json.loads((FIX / "report.json").read_text())
    sc = Scene(random_uniform(50, seed=5, size=64))
    segs = random_segments(100, seed=6, size=64)
    batch = BatchOracle(sc)
    for e, row in zip(segs, data["queries"]):
        assert [str(c) for c in e.a] == row["a"]
        assert brute_report(sc, e) == row["ids"]
        assert batch.report(e) == row["ids"]
        h = brute_first_hit(sc, e)
        assert (None if h is None else [str(h.t), h.triangle_id]) == row["first"]


def test_line_pairs_axes():
    x = (P(-1, 0, 0), P(1, 0, 0))
    y = (P(0, -1, 0), P(0, 1, 0))
    assert brute_line_pairs([x], [y]) == [(0, 0)]


def test_line_pairs_skew():
    x = (P(-1, 0, 0), P(1, 0, 0))
    skew = (P(0, 1, -1), P(0, 1, 1))
    assert brute_line_pairs([x], [skew]) == []


def test_line_pairs_fixture():
    data = json.loads((FIX / "lines.json").read_text())
    red = LineSet.random_through_ball(data["n"], seed=data["red_seed"])
    blue = LineSet.random_through_ball(data["n"], seed=data["blue_seed"])
    assert sorted(brute_line_pairs(red.lines, blue.lines)) == [tuple(p) for p in data["pairs"]]


SEMI = Arc2.circular(0, 0, 0, 1, -1, 1, "lower")


def test_arc_first_hit_chord():
    i, (x, y) = brute_arc_first_hit([SEMI], Ray2(-2, Q("-1/2"), 1, 0))
    assert i == 0 and y == Q("-1/2")
    assert x * x == Q("3/4") and as_float(x) < 0


def test_arc_first_hit_vertical():
    assert brute_arc_first_hit([SEMI], Ray2(0, -2, 0, 1)) == (0, (0, -1))


def test_arc_fixture():
    data = json.loads((FIX / "arcs.json").read_text())
    arcs = random_arcs(40, seed=8, size=16)
    rays = random_rays2(200, seed=9, size=16)
    for r, want in zip(rays, data["hits"]):
        got = brute_arc_first_hit(arcs, r)
        if want is None:
            assert got is None
            continue
        i, (x, y) = got
        assert i == want["id"]
        assert abs(Decimal(repr(as_float(x))) - Decimal(want["x"])) < Decimal("1e-9")
        assert abs(Decimal(repr(as_float(y))) - Decimal(want["y"])) < Decimal("1e-9")


def test_arrangement_two_crossing():
    t1 = Triangle3(0, P(0, 0, 0), P(4, 0, 0), P(0, 4, 0))
    t2 = Triangle3(1, P(1, 1, -1), P(1, 1, 3), P(2, -2, 1))
    assert brute_arrangement_vertices(Scene([t1, t2])) == sorted([P(1, 1, 0), P("4/3", 0, 0)])


def test_arrangement_disjoint():
    t1 = Triangle3(0, P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
    t2 = Triangle3(1, P(0, 0, 5), P(1, 0, 5), P(0, 1, 5))
    assert brute_arrangement_vertices(Scene([t1, t2])) == []


def test_arrangement_orthogonal_squares_fixture():
    data = json.loads((FIX / "arrangement.json").read_text())
    tris = [Triangle3(i, *(P(*v) for v in t)) for i, t in enumerate(data["triangles"])]
    got = {tuple(str(Q(c)) for c in p) for p in brute_arrangement_vertices(Scene(tris))}
    assert got == {tuple(v) for v in data["vertices"]}


def test_scene_box_is_strict():
    sc = Scene([UNIT])
    lo, hi = sc.bbox
    for v in UNIT.vertices:
        assert all(lo[k] < v[k] < hi[k] for k in range(3))


@pytest.mark.parametrize("seed", [1, 2])
def test_batch_oracle_agrees_with_scalar(seed):
    sc = Scene(random_uniform(80, seed=seed, size=64))
    b = BatchOracle(sc)
    for e in random_segments(60, seed=seed + 10, size=64):
        assert b.report(e) == brute_report(sc, e)
