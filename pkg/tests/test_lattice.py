import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from flipping_rotators.lattice import (
    ORIGIN,
    FaceCoord,
    IllegalDirection,
    SiteCoord,
    _shaded_face_fast,
    embed,
    face_color,
    face_key,
    face_vertices,
    incident_faces,
    is_legal,
    key_site,
    mirror_x,
    neighbor,
    norm_sq,
    opposite,
    rotate,
    shaded_face_of,
    site_class,
    site_key,
)

coords = st.integers(min_value=-(2**30), max_value=2**30 - 1)
small = st.integers(min_value=-500, max_value=500)
sites = st.builds(SiteCoord, coords, coords, st.integers(0, 1))
small_sites = st.builds(SiteCoord, small, small, st.integers(0, 1))


def legal_dirs(site):
    return [d for d in range(6) if d % 2 == site.sub]


@given(small_sites)
def test_neighbors_are_unit_distance_in_their_direction(site):
    x0, y0 = embed(site)
    for d in legal_dirs(site):
        x1, y1 = embed(neighbor(site, d))
        assert math.isclose(x1 - x0, math.cos(math.pi * d / 3), abs_tol=1e-9)
        assert math.isclose(y1 - y0, math.sin(math.pi * d / 3), abs_tol=1e-9)


@given(small_sites)
def test_step_back_along_opposite_direction(site):
    for d in legal_dirs(site):
        n = neighbor(site, d)
        assert n.sub != site.sub
        assert neighbor(n, opposite(d)) == site


def test_illegal_direction_raises():
    with pytest.raises(IllegalDirection):
        neighbor(ORIGIN, 1)
    assert not is_legal(SiteCoord(0, 0, 1), 0)


def test_origin_neighbours():
    assert neighbor(ORIGIN, 0) == SiteCoord(0, 0, 1)
    assert neighbor(ORIGIN, 2) == SiteCoord(0, -1, 1)
    assert neighbor(ORIGIN, 4) == SiteCoord(-1, 0, 1)


def test_rotation_convention():
    # right rotator turns clockwise by 60 degrees, left counter clockwise
    assert [rotate(d, 1) for d in range(6)] == [5, 0, 1, 2, 3, 4]
    assert [rotate(d, -1) for d in range(6)] == [1, 2, 3, 4, 5, 0]
    with pytest.raises(ValueError):
        rotate(0, 0)


@given(small_sites)
def test_norm_sq_matches_float_embedding(site):
    x, y = embed(site)
    assert math.isclose(norm_sq(site), x * x + y * y, rel_tol=1e-12, abs_tol=1e-9)


@given(sites)
def test_site_key_round_trip(site):
    assert key_site(site_key(site)) == site


def test_origin_key_is_zero_and_keys_are_distinct():
    assert site_key(ORIGIN) == 0
    keys = {site_key(SiteCoord(a, b, s)) for a in range(-5, 6) for b in range(-5, 6)
            for s in (0, 1)}
    assert len(keys) == 11 * 11 * 2
    fkeys = {face_key(FaceCoord(i, j)) for i in range(-5, 6) for j in range(-5, 6)}
    assert len(fkeys) == 121


@given(st.builds(FaceCoord, small, small))
def test_face_vertices_form_a_unit_hexagon(face):
    vs = face_vertices(face)
    pts = [embed(v) for v in vs]
    cx = sum(p[0] for p in pts) / 6
    cy = sum(p[1] for p in pts) / 6
    for k, (x, y) in enumerate(pts):
        assert math.isclose(math.hypot(x - cx, y - cy), 1.0, rel_tol=1e-9)
        nx, ny = pts[(k + 1) % 6]
        assert math.isclose(math.hypot(nx - x, ny - y), 1.0, rel_tol=1e-9)
    # counter clockwise: positive signed area
    area = sum(pts[k][0] * pts[(k + 1) % 6][1] - pts[(k + 1) % 6][0] * pts[k][1]
               for k in range(6))
    assert area > 0


@given(small_sites)
def test_each_site_touches_one_face_of_each_colour(site):
    faces = incident_faces(site)
    assert sorted(face_color(f) for f in faces) == [0, 1, 2]
    for f in faces:
        assert site in face_vertices(f)
    for cc in range(3):
        f = shaded_face_of(site, cc)
        assert face_color(f) == cc and site in face_vertices(f)
        assert tuple(f) == _shaded_face_fast(site.a, site.b, site.sub, cc)


@given(small_sites)
def test_mirror_is_reflection_in_x_half(site):
    m = mirror_x(site)
    assert mirror_x(m) == site
    x, y = embed(site)
    mx, my = embed(m)
    assert math.isclose(mx, 1 - x, abs_tol=1e-9) and math.isclose(my, y, abs_tol=1e-9)


def test_site_classes_follow_sublattice():
    assert site_class(SiteCoord(3, -2, 0)) != site_class(SiteCoord(3, -2, 1))
