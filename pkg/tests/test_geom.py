from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import independent as ind
from trishoot.geom import (COPLANAR, P, Plane3, Point3, Probe, Q, Ray3, Segment3, Triangle3,
                           TriRecord, div, orient3d, point_in_triangle, probe_tri,
                           seg_plane_intersect, seg_tri_intersect, segments_intersect3)

UNIT = Triangle3(0, P(0, 0, 0), P(1, 0, 0), P(0, 1, 0))
Z0 = Plane3((0, 0, 1), 0)


@pytest.mark.parametrize("s, expected", [
    ((0, 0, 1), 1),
    ((1, 1, 0), 0),
    ((0, 0, -1), -1),
])
def test_orient3d_basis(s, expected):
    assert orient3d(P(0, 0, 0), P(1, 0, 0), P(0, 1, 0), P(*s)) == expected


def test_plane_crossing_at_midpoint():
    assert seg_plane_intersect(Segment3(P(0, 0, -1), P(0, 0, 1)), Z0) == Q("1/2")


def test_plane_parallel_above_is_empty():
    assert seg_plane_intersect(Segment3(P(0, 0, 1), P(1, 0, 1)), Z0) is None


def test_segment_in_plane_is_coplanar():
    assert seg_plane_intersect(Segment3(P(0, 0, 0), P(1, 0, 0)), Z0) is COPLANAR


def test_vertical_stab_of_unit_triangle():
    e = Segment3(P("1/4", "1/4", 1), P("1/4", "1/4", -1))
    assert seg_tri_intersect(e, UNIT) == Q("1/2")


def test_stab_outside_shadow_misses():
    assert seg_tri_intersect(Segment3(P(2, 2, 1), P(2, 2, -1)), UNIT) is None


def test_vertex_counts_as_hit():
    assert seg_tri_intersect(Segment3(P(0, 0, 1), P(0, 0, -1)), UNIT) == Q("1/2")


def test_coplanar_overlap_returns_entry():
    e = Segment3(P(-1, "1/4", 0), P(2, "1/4", 0))
    assert seg_tri_intersect(e, UNIT) == Q("1/3")


def test_div_is_exact():
    assert div(1, 3) * 3 == 1
    assert not isinstance(div(6, 3), float)


def test_q_parses_strings_and_keeps_ints():
    assert Q("3") == 3 and isinstance(Q("3"), int)
    assert Q("2/4") == Q("1/2")


def test_degenerate_inputs_rejected():
    with pytest.raises(ValueError):
        Triangle3(0, P(0, 0, 0), P(1, 1, 1), P(2, 2, 2))
    with pytest.raises(ValueError):
        Segment3(P(1, 2, 3), P(1, 2, 3))
    with pytest.raises(ValueError):
        Ray3(P(0, 0, 0), (0, 0, 0))
    with pytest.raises(ValueError):
        Plane3((0, 0, 0), 1)


def test_probe_subrange_clips_hits():
    rec = TriRecord(UNIT)
    pr = Probe(P("1/4", "1/4", 1), (0, 0, -1), 0, 2)
    assert probe_tri(pr, rec) == 1
    assert probe_tri(pr, rec, 0, Q("1/2")) is None


def test_segments_intersect3_cases():
    o, x, y = P(-1, 0, 0), P(1, 0, 0), P(0, -1, 0)
    assert segments_intersect3(o, x, y, P(0, 1, 0))
    assert not segments_intersect3(o, x, P(0, 1, -1), P(0, 1, 1))
    assert segments_intersect3(o, x, P(1, 0, 0), P(3, 0, 0))     # collinear touch
    assert not segments_intersect3(o, x, P(2, 0, 0), P(3, 0, 0))


coord = st.integers(-6, 6)
point = st.tuples(coord, coord, coord)


@given(point, point, point, point)
def test_orient3d_matches_determinant(p, q, r, s):
    assert orient3d(Point3(*p), Point3(*q), Point3(*r), Point3(*s)) == ind.orient(p, q, r, s)


@given(point, point, point, point)
def test_orient3d_antisymmetric(p, q, r, s):
    P_ = [Point3(*v) for v in (p, q, r, s)]
    assert orient3d(P_[0], P_[1], P_[2], P_[3]) == -orient3d(P_[1], P_[0], P_[2], P_[3])


@given(point, point, point, point, point)
def test_seg_tri_matches_reference(a, b, v0, v1, v2):
    if a == b or not any(ind.cross(ind.sub(v1, v0), ind.sub(v2, v0))):
        return
    tri = Triangle3(0, Point3(*v0), Point3(*v1), Point3(*v2))
    got = seg_tri_intersect(Segment3(Point3(*a), Point3(*b)), tri)
    want = ind.seg_tri_t(a, b, (v0, v1, v2))
    assert (None if got is None else Fraction(str(got))) == want


@given(point, point, point, point, point)
def test_hit_point_lies_on_triangle(a, b, v0, v1, v2):
    if a == b or not any(ind.cross(ind.sub(v1, v0), ind.sub(v2, v0))):
        return
    tri = Triangle3(0, Point3(*v0), Point3(*v1), Point3(*v2))
    e = Segment3(Point3(*a), Point3(*b))
    t = seg_tri_intersect(e, tri)
    if t is not None:
        assert 0 <= t <= 1
        assert point_in_triangle(e.point(t), tri)


@given(point, point, point, point, point)
def test_reversed_segment_hits_iff_forward(a, b, v0, v1, v2):
    if a == b or not any(ind.cross(ind.sub(v1, v0), ind.sub(v2, v0))):
        return
    tri = Triangle3(0, Point3(*v0), Point3(*v1), Point3(*v2))
    e = Segment3(Point3(*a), Point3(*b))
    assert (seg_tri_intersect(e, tri) is None) == (seg_tri_intersect(e.reversed(), tri) is None)
