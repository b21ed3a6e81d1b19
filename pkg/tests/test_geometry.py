"""Planar domain geometry: validation, containment, boundary parametrization."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmpath import geometry
from swarmpath.errors import ParseError, ValidationError

SQUARE = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]


def square_hole(cx=5.0, cy=5.0, half=1.0):
    # clockwise
    return [(cx - half, cy - half), (cx - half, cy + half),
            (cx + half, cy + half), (cx + half, cy - half)]


# -- validation ---------------------------------------------------------------

def test_outer_must_be_counterclockwise():
    with pytest.raises(ValidationError, match="counterclockwise"):
        geometry.PartSlice(list(reversed(SQUARE)))


def test_hole_must_be_clockwise():
    ccw_hole = list(reversed(square_hole()))
    with pytest.raises(ValidationError, match="clockwise"):
        geometry.PartSlice(SQUARE, [ccw_hole])


def test_degenerate_edge_rejected_with_vertex_index():
    bad = [(0.0, 0.0), (10.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]
    with pytest.raises(ValidationError, match="vertex 1"):
        geometry.PartSlice(bad)


def test_self_intersecting_outer_rejected():
    bowtie = [(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)]
    with pytest.raises(ValidationError):
        geometry.PartSlice(bowtie)


def test_hole_outside_outer_rejected():
    with pytest.raises(ValidationError, match="inside"):
        geometry.PartSlice(SQUARE, [square_hole(cx=20.0)])


def test_overlapping_holes_rejected():
    with pytest.raises(ValidationError, match="overlaps|intersects"):
        geometry.PartSlice(SQUARE, [square_hole(cx=4.0),
                                    square_hole(cx=5.0)])


# -- containment --------------------------------------------------------------

def test_centroid_of_specimen_is_inside_hole():
    sl = geometry.make_open_hole_specimen()
    assert not geometry.contains(sl, (75.0, 18.0))


def test_outer_vertex_counts_as_inside():
    sl = geometry.PartSlice(SQUARE)
    for v in SQUARE:
        assert geometry.contains(sl, v)


def test_point_outside_bounding_box():
    sl = geometry.PartSlice(SQUARE)
    assert not geometry.contains(sl, (-1.0, -1.0))


def test_contains_many_matches_shapely_oracle():
    shapely = pytest.importorskip("shapely")
    from shapely.geometry import Point, Polygon

    sl = geometry.make_open_hole_specimen()
    poly = Polygon(sl.outer, [h[::-1] for h in sl.holes])
    rng = np.random.default_rng(7)
    pts = rng.uniform((-5.0, -5.0), (155.0, 41.0), size=(500, 2))
    ours = geometry.contains_many(sl, pts)
    for p, mine in zip(pts, ours):
        ref = poly.covers(Point(*p))
        if abs(poly.exterior.distance(Point(*p))) < 1e-6:
            continue  # boundary-tolerance convention differs, skip the rim
        assert mine == ref, p


# -- boundary cursors ----------------------------------------------------------

def test_project_point_on_boundary_gives_zero_distance():
    sl = geometry.PartSlice(SQUARE)
    c, d = geometry.project_to_boundary(sl, (5.0, 0.0))
    assert d == pytest.approx(0.0, abs=1e-12)
    assert geometry.cursor_to_point(sl, c) == pytest.approx([5.0, 0.0])


def test_project_hole_center_hits_hole_loop_at_radius():
    sl = geometry.make_open_hole_specimen()
    c, d = geometry.project_to_boundary(sl, (75.0, 18.0))
    assert c.loop_id == 1
    # the hole is polygonized at chord tolerance 0.01, so the nearest edge
    # midpoint sits up to one sagitta inside the true circle
    assert d == pytest.approx(3.0, abs=0.011)


def test_project_tie_prefers_lower_loop_id():
    sl = geometry.PartSlice(SQUARE, [square_hole(cx=5.0, cy=2.0, half=1.0)])
    # (5, 0.5) is 0.5 from the outer bottom edge and 0.5 from the hole
    c, d = geometry.project_to_boundary(sl, (5.0, 0.5))
    assert d == pytest.approx(0.5)
    assert c.loop_id == 0


def test_cursor_advance_identity_and_wrap():
    sl = geometry.PartSlice(SQUARE)
    c, _ = geometry.project_to_boundary(sl, (5.0, 0.0))
    perim = sl.loop_perimeter(0)
    assert geometry.cursor_advance(sl, c, 0.0).arc_length == c.arc_length
    wrapped = geometry.cursor_advance(sl, c, perim)
    assert wrapped.arc_length == pytest.approx(c.arc_length)


def test_cursor_advance_negative_wraps_modulo():
    sl = geometry.PartSlice([(0.0, 0.0), (4.0, 0.0), (4.0, 1.0), (0.0, 1.0)])
    c, _ = geometry.project_to_boundary(sl, (0.1, 0.0))
    out = geometry.cursor_advance(sl, c, -0.4)
    assert out.arc_length == pytest.approx(9.7)


@settings(max_examples=50)
@given(a=st.floats(-50, 50), b=st.floats(-50, 50))
def test_cursor_advance_is_a_group_action(a, b):
    sl = geometry.PartSlice(SQUARE)
    c, _ = geometry.project_to_boundary(sl, (5.0, 0.0))
    left = geometry.cursor_advance(sl, geometry.cursor_advance(sl, c, a), b)
    right = geometry.cursor_advance(sl, c, a + b)
    perim = sl.loop_perimeter(0)
    diff = (left.arc_length - right.arc_length) % perim
    assert min(diff, perim - diff) < 1e-9


def test_cursor_point_lies_on_loop():
    sl = geometry.make_open_hole_specimen()
    for s in np.linspace(0.0, sl.loop_perimeter(1), 17, endpoint=False):
        c, _ = geometry.project_to_boundary(sl, (75.0, 18.0))
        c = geometry.cursor_advance(sl, c, float(s))
        p = geometry.cursor_to_point(sl, c)
        _, d = geometry.project_to_boundary(sl, p, loop_ids=[1])
        assert d < 1e-9


def test_cursor_tangent_is_unit():
    sl = geometry.PartSlice(SQUARE)
    c, _ = geometry.project_to_boundary(sl, (5.0, 0.0))
    t = geometry.cursor_tangent(sl, c)
    assert np.hypot(*t) == pytest.approx(1.0, abs=1e-12)


# -- intersections -------------------------------------------------------------

def test_segment_wholly_interior_hits_nothing():
    sl = geometry.make_open_hole_specimen()
    assert geometry.segment_hits(sl, (5.0, 5.0), (20.0, 10.0)) is None


def test_segment_from_hole_center_hits_hole_first():
    sl = geometry.make_open_hole_specimen()
    hit = geometry.segment_hits(sl, (75.0, 18.0), (200.0, 18.0))
    assert hit is not None
    loop_id, point = hit
    assert loop_id == 1
    assert np.hypot(point[0] - 75.0, point[1] - 18.0) == pytest.approx(
        3.0, abs=1e-2)


def test_segment_hits_presence_is_symmetric():
    sl = geometry.make_open_hole_specimen()
    rng = np.random.default_rng(3)
    for _ in range(50):
        a = rng.uniform((60.0, 10.0), (90.0, 26.0))
        b = rng.uniform((60.0, 10.0), (90.0, 26.0))
        fwd = geometry.segment_hits(sl, a, b)
        rev = geometry.segment_hits(sl, b, a)
        assert (fwd is None) == (rev is None)


# -- distances -----------------------------------------------------------------

def test_parallel_polylines_constant_distance():
    p = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    q = p + [0.0, 0.4]
    d = geometry.polyline_pair_min_distance(p, q)
    assert d == pytest.approx([0.4, 0.4, 0.4])


def test_identical_polylines_zero_distance():
    p = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
    assert geometry.polyline_pair_min_distance(p, p) == pytest.approx(
        [0.0, 0.0, 0.0])


def test_single_point_distance():
    p = np.array([[0.0, 3.0]])
    q = np.array([[-5.0, 0.0], [5.0, 0.0]])
    assert geometry.polyline_pair_min_distance(p, q) == pytest.approx([3.0])


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_point_to_polyline_distance_matches_bruteforce(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2 ** 31)))
    pts = rng.uniform(-5, 5, size=(6, 2))
    poly = rng.uniform(-5, 5, size=(5, 2))
    got = geometry.point_to_polyline_distances(pts, poly)
    for p, g in zip(pts, got):
        best = math.inf
        for a, b in zip(poly[:-1], poly[1:]):
            ab = b - a
            t = np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300),
                        0.0, 1.0)
            best = min(best, float(np.hypot(*(p - (a + t * ab)))))
        assert g == pytest.approx(best, abs=1e-9)


# -- polygonization and part files ----------------------------------------------

def test_circle_polygon_respects_chord_tolerance():
    tol = 0.01
    poly = geometry.circle_polygon((0.0, 0.0), 3.0, chord_tol=tol)
    r = np.hypot(poly[:, 0], poly[:, 1])
    assert r == pytest.approx(3.0, abs=1e-12)
    mids = 0.5 * (poly + np.roll(poly, -1, axis=0))
    sagitta = 3.0 - np.hypot(mids[:, 0], mids[:, 1])
    assert np.all(sagitta <= tol + 1e-12)
    assert geometry.signed_area(poly) < 0    # clockwise, hole-ready


def test_specimen_shape():
    sl = geometry.make_open_hole_specimen()
    lo, hi = sl.bounds()
    assert tuple(lo) == (0.0, 0.0)
    assert tuple(hi) == (150.0, 36.0)
    assert len(sl.holes) == 1


def test_part_json_roundtrip(tmp_path):
    sl = geometry.make_open_hole_specimen()
    path = tmp_path / "part.json"
    geometry.save_part(sl, path)
    back = geometry.load_part(path)
    assert np.array_equal(back.outer, sl.outer)
    assert all(np.array_equal(a, b) for a, b in zip(back.holes, sl.holes))


def test_load_part_invalid_json_names_line(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"outer": [[0,0],\n oops')
    with pytest.raises(ParseError, match="line"):
        geometry.load_part(path)


def test_load_part_missing_outer(tmp_path):
    path = tmp_path / "noouter.json"
    path.write_text(json.dumps({"holes": []}))
    with pytest.raises(ValidationError, match="outer"):
        geometry.load_part(path)
