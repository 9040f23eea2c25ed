import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netr.geo import GeoPoint, Mbr, distance_km, haversine_km, haversine_km_array, min_distance_km

lat = st.floats(-60, 60)
lon = st.floats(-170, 170)


def test_known_distance():
    # one degree of latitude on the mean-radius sphere
    assert haversine_km(0, 0, 1, 0) == pytest.approx(2 * math.pi * 6371.0088 / 360, rel=1e-12)


def test_geopoint_range():
    with pytest.raises(ValueError):
        GeoPoint(91, 0)
    with pytest.raises(ValueError):
        GeoPoint(0, -181)


@given(lat, lon, lat, lon)
def test_symmetric_nonnegative(a, b, c, d):
    assert haversine_km(a, b, c, d) == pytest.approx(haversine_km(c, d, a, b), abs=1e-9)
    assert haversine_km(a, b, c, d) >= 0


@given(lat, lon, st.lists(st.tuples(lat, lon), min_size=1, max_size=5))
def test_vectorized_matches_scalar(a, b, pts):
    lats, lons = np.array([p[0] for p in pts]), np.array([p[1] for p in pts])
    expect = [haversine_km(a, b, p, q) for p, q in pts]
    np.testing.assert_allclose(haversine_km_array(a, b, lats, lons), expect, rtol=1e-9, atol=1e-9)


def _sampled_min(qlat, qlon, box, n=400):
    # oracle: dense sampling of the whole rectangle
    la = np.linspace(box.min_lat, box.max_lat, n)
    lo = np.linspace(box.min_lon, box.max_lon, n)
    grid_la, grid_lo = np.meshgrid(la, lo)
    return float(haversine_km_array(qlat, qlon, grid_la.ravel(), grid_lo.ravel()).min())


boxes = st.tuples(st.floats(-50, 50), st.floats(0.01, 5), st.floats(-100, 100), st.floats(0.01, 5)).map(
    lambda t: Mbr(t[0], t[0] + t[1], t[2], t[2] + t[3])
)


@settings(max_examples=60, deadline=None)
@given(boxes, st.floats(-70, 70), st.floats(-120, 120))
def test_min_distance_against_sampling(box, qlat, qlon):
    exact = min_distance_km(qlat, qlon, box)
    sampled = _sampled_min(qlat, qlon, box)
    assert exact <= sampled + 1e-9
    # grid spacing bounds how far the sample can overshoot
    cell = haversine_km(box.min_lat, box.min_lon, box.min_lat + (box.max_lat - box.min_lat) / 399,
                        box.min_lon + (box.max_lon - box.min_lon) / 399)
    assert sampled - exact <= cell + 1e-6


def test_clamping_would_overestimate():
    # west of a tall box at high latitude: nearest point is poleward of the query latitude
    box = Mbr(50.0, 70.0, 10.0, 20.0)
    exact = min_distance_km(60.0, 0.0, box)
    clamped = haversine_km(60.0, 0.0, 60.0, 10.0)
    assert exact < clamped - 1.0


def test_inside_box_is_zero():
    assert min_distance_km(1.0, 1.0, Mbr(0, 2, 0, 2)) == 0.0


@settings(max_examples=50, deadline=None)
@given(boxes, st.floats(0, 1), st.floats(0, 1), st.floats(-70, 70), st.floats(-120, 120))
def test_parent_child_point_chain(box, fa, fb, qlat, qlon):
    # a sub-box and a point inside it: distances grow down the chain
    child = Mbr(box.min_lat, box.min_lat + (box.max_lat - box.min_lat) * max(fa, 1e-3),
                box.min_lon, box.min_lon + (box.max_lon - box.min_lon) * max(fb, 1e-3))
    p = GeoPoint(child.max_lat, child.max_lon)
    d_parent = min_distance_km(qlat, qlon, box)
    d_child = min_distance_km(qlat, qlon, child)
    assert d_parent <= d_child + 1e-9
    assert d_child <= distance_km(GeoPoint(qlat, qlon), p) + 1e-9
