import json
import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trishoot.engine import (ApproxConfig, Engine, EngineConfig, QueryStats, parse_query,
                             run_batch, sample_size)
from trishoot.geom import HitResult, P, Point3, Q, Ray3, Segment3, Triangle3, div
from trishoot.oracle import BatchOracle, Scene, brute_first_hit, brute_report
from trishoot.partition import PartitionConfig
from trishoot.scenes import random_segments, random_uniform, stacked_sheets

UNIT = Triangle3(0, P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
SMALL = EngineConfig(partition=PartitionConfig(leaf_threshold=4))


def _stack(n=5):
    return [Triangle3(i, P(0, 0, Q(f"{i}/4")), P(1, 0, Q(f"{i}/4")), P(0, 1, Q(f"{i}/4")))
            for i in range(n)]


def test_single_triangle_first_hit():
    eng = Engine.build(Scene([UNIT]))
    e = Segment3(P("1/4", "1/4", 1), P("1/4", "1/4", -1))
    assert eng.first_hit(e) == HitResult(0, Q("1/2"), P("1/4", "1/4", 0))


def test_single_triangle_shoot():
    eng = Engine.build(Scene([UNIT]))
    hit = eng.shoot(Ray3(P("1/4", "1/4", "1/2"), (0, 0, -1)))
    assert (hit.triangle_id, hit.point) == (0, P("1/4", "1/4", 0))
    assert eng.shoot(Ray3(P("1/4", "1/4", "1/2"), (0, 0, 1))) is None
    assert eng.shoot(Ray3(P(50, 50, 50), (1, 0, 0))) is None


def test_stack_report_and_empty_query():
    eng = Engine.build(Scene(_stack()), SMALL)
    stab = Segment3(P("1/4", "1/4", 2), P("1/4", "1/4", -1))
    assert eng.report(stab) == [0, 1, 2, 3, 4]
    assert not eng.emptiness(stab)
    miss = Segment3(P(5, 5, 5), P(6, 6, 6))
    assert eng.report(miss) == [] and eng.emptiness(miss)
    assert eng.first_hit(stab).triangle_id == 4


def test_shared_edge_tie_goes_to_smaller_id():
    left = Triangle3(3, P(0, 0, 0), P(2, 0, 0), P(0, 2, 0))
    right = Triangle3(1, P(2, 0, 0), P(0, 2, 0), P(2, 2, 0))
    eng = Engine.build(Scene([left, right]))
    hit = eng.first_hit(Segment3(P(1, 1, 1), P(1, 1, -1)))
    assert (hit.triangle_id, hit.point) == (1, P(1, 1, 0))
    assert eng.report(Segment3(P(1, 1, 1), P(1, 1, -1))) == [1, 3]


def test_empty_scene_rejected():
    with pytest.raises(ValueError):
        Engine.build(Scene([]))


def test_bad_approx_parameters():
    with pytest.raises(ValueError):
        EngineConfig(approx=ApproxConfig(delta=Q(2)))


@pytest.fixture(scope="module")
def coplanar_scene():
    rng = random.Random(3)
    tris = []
    for i in range(120):
        z = 32 if i % 2 == 0 else rng.randint(4, 60)
        c = [rng.randint(8, 56), rng.randint(8, 56)]
        pts = [Point3(c[0] + rng.randint(-6, 6), c[1] + rng.randint(-6, 6), z + (0 if z == 32 else rng.randint(-3, 3)))
               for _ in range(3)]
        try:
            tris.append(Triangle3(len(tris), *pts))
        except ValueError:
            pass
    sc = Scene(tris)
    return sc, Engine.build(sc, SMALL), BatchOracle(sc)


def test_queries_inside_shared_plane(coplanar_scene):
    sc, eng, orc = coplanar_scene
    rng = random.Random(5)
    for _ in range(300):
        a = P(rng.randint(0, 64), rng.randint(0, 64), 32)
        b = P(rng.randint(0, 64), rng.randint(0, 64), 32)
        if a == b:
            continue
        e = Segment3(a, b)
        assert eng.report(e) == orc.report(e)
        want = brute_first_hit(sc, e)
        got = eng.first_hit(e)
        assert (got is None) == (want is None)
        if got is not None:
            assert (got.t, got.triangle_id) == (want.t, want.triangle_id)


def test_axis_queries_in_cutting_planes():
    sc = Scene(random_uniform(600, seed=4))
    eng = Engine.build(sc)
    orc = BatchOracle(sc)
    lo, hi = sc.bbox
    checked = 0
    for node in eng.tree.nodes[:30]:
        for h in node.cutting_planes:
            nrm = tuple(h.normal)
            if sum(1 for c in nrm if c) != 1:
                continue
            axis = next(k for k in range(3) if nrm[k])
            p = [div(lo[k] + hi[k], 2) for k in range(3)]
            p[axis] = div(h.offset, nrm[axis])
            for d in range(3):
                if d == axis:
                    continue
                a, b = list(p), list(p)
                a[d], b[d] = lo[d], hi[d]
                e = Segment3(Point3(*a), Point3(*b))
                assert eng.report(e) == orc.report(e)
                checked += 1
    assert checked > 0


@pytest.fixture(scope="module")
def mid_engine():
    sc = Scene(random_uniform(800, seed=9))
    return sc, Engine.build(sc), BatchOracle(sc)


def test_matches_oracle_on_random_queries(mid_engine):
    sc, eng, orc = mid_engine
    for e in random_segments(300, seed=2):
        assert eng.report(e) == orc.report(e)
        assert eng.emptiness(e) is (orc.report(e) == [])
        want = orc.first_hit(e)
        got = eng.first_hit(e)
        assert (None if got is None else (got.t, got.triangle_id)) == \
               (None if want is None else (want.t, want.triangle_id))


def test_approx_count_light_queries_exact(mid_engine):
    sc, eng, orc = mid_engine
    assert eng.approx_count(Segment3(P(-100, -100, -100), P(-99, -99, -99))) == (0, True)
    np_ = math.floor(eng.n * eng.approx.p)
    for e in random_segments(100, seed=3):
        k = len(orc.report(e))
        got = eng.approx_count(e)
        if k <= np_:
            assert got == (k, True)
        assert eng.is_heavy(e) is (k > np_)


def test_heavy_estimate_from_sample():
    sc = Scene(stacked_sheets(400))
    eng = Engine.build(sc, EngineConfig(approx=ApproxConfig(delta=Q("1/2"))))
    stab = Segment3(P(2, 2, 0), P(2, 2, 4096))
    k, exact = eng.approx_count(stab)
    assert eng.n * eng.approx.p < 400
    assert exact is False
    assert k == 400


def test_sample_size_formula():
    n, delta, q = 10 ** 8, 0.1, 0.01
    p = 1 / (delta * math.sqrt(n))
    want = math.ceil(2 / (delta ** 2 * p) * (13 * math.log(1 / p) + math.log(1 / q)))
    assert sample_size(n, delta, q) == want
    assert sample_size(5000, delta, q) == 5000
    assert sample_size(0, delta, q) == 0


def test_resample_keeps_engine_sample(mid_engine):
    _, eng, _ = mid_engine
    before = list(eng.approx.ids)
    other = eng.resample(99)
    assert eng.approx.ids == before and other.size == eng.approx.size


def test_stats_and_storage(mid_engine):
    _, eng, _ = mid_engine
    st_ = QueryStats()
    eng.report(random_segments(1, seed=7)[0], st_)
    assert st_.cells_visited >= 1 and st_.primitive_tests == st_.triangle_tests + st_.plane_tests
    assert eng.stored_ids() >= eng.n


def test_build_is_deterministic():
    sc = Scene(random_uniform(300, seed=6))
    a, b = Engine.build(sc), Engine.build(sc)
    assert a.stored_ids() == b.stored_ids()
    assert [n.narrow_ids for n in a.tree.nodes] == [n.narrow_ids for n in b.tree.nodes]
    assert a.approx.ids == b.approx.ids


def test_injected_fault_is_detectable():
    sc = Scene(random_uniform(300, seed=6))
    eng = Engine.build(sc)
    eng.inject_fault()
    orc = BatchOracle(sc)
    bad = 0
    for e in random_segments(2000, seed=8):
        if eng.report(e) != orc.report(e):
            bad += 1
    assert bad >= 1


def test_parse_query_forms():
    op, ray = parse_query("SHOOT 1/4 1/4 1 0 0 -1")
    assert op == "SHOOT" and ray == Ray3(P("1/4", "1/4", 1), (0, 0, -1))
    assert parse_query("# comment") is None and parse_query("   ") is None
    with pytest.raises(ValueError):
        parse_query("SHOOT 1 2 3")
    with pytest.raises(ValueError):
        parse_query("FLY 0 0 0 1 1 1")


def test_run_batch_outputs():
    eng = Engine.build(Scene([UNIT]))
    lines = ["SHOOT 1/4 1/4 1 0 0 -1", "REPORT 1/4 1/4 1 1/4 1/4 -1",
             "EMPTY 5 5 5 6 6 6", "ACOUNT 1/4 1/4 1 1/4 1/4 -1"]
    out = [json.loads(s) for s in run_batch(eng, lines)]
    assert out[0] == {"op": "SHOOT", "hit": 0, "t": out[0]["t"], "point": ["1/4", "1/4", 0]}
    assert out[1] == {"op": "REPORT", "ids": [0]}
    assert out[2] == {"op": "EMPTY", "empty": True}
    assert out[3] == {"op": "ACOUNT", "count": 1, "exact": True}


def test_segment_engine_reports_crossings():
    segs = [Segment3(P(i, 0, 5), P(i, 10, 5)) for i in range(1, 9)]
    eng = Engine.from_segments(segs, ((0, -1, 0), (10, 11, 10)))
    q = Segment3(P(0, 5, 5), P(10, 5, 5))
    assert eng.report(q) == list(range(8))


@settings(max_examples=30)
@given(st.integers(0, 10 ** 6), st.lists(st.tuples(*[st.integers(0, 64)] * 6), min_size=1, max_size=20))
def test_engine_matches_oracle_property(seed, qs):
    sc = Scene(random_uniform(40, seed=seed))
    eng = Engine.build(sc, SMALL)
    for q in qs:
        a, b = Point3(*q[:3]), Point3(*q[3:])
        if a == b:
            continue
        e = Segment3(a, b)
        assert eng.report(e) == brute_report(sc, e)
        want = brute_first_hit(sc, e)
        got = eng.first_hit(e)
        assert (None if got is None else got.triangle_id) == (None if want is None else want.triangle_id)
