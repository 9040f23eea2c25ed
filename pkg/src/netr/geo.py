"""Great-circle distances between points and to lat/lon rectangles."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_KM = 6371.0088


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (-90.0 <= self.lat <= 90.0):
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not (-180.0 <= self.lon <= 180.0):
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    p1 = math.radians(lat1)
    p2 = math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    h = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def haversine_km_array(lat: float, lon: float, lats, lons):
    """Vectorized haversine from one point to arrays of points."""
    p1 = math.radians(lat)
    p2 = np.radians(lats)
    dl = np.radians(np.asarray(lons) - lon)
    h = np.sin((p2 - p1) / 2) ** 2 + math.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(h)))


def distance_km(a: GeoPoint, b: GeoPoint) -> float:
    return haversine_km(a.lat, a.lon, b.lat, b.lon)


@dataclass(frozen=True)
class Mbr:
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    def __post_init__(self) -> None:
        if self.min_lat > self.max_lat or self.min_lon > self.max_lon:
            raise ValueError(f"inverted rectangle {self}")

    @classmethod
    def of_point(cls, lat: float, lon: float) -> "Mbr":
        return cls(lat, lat, lon, lon)

    @classmethod
    def union(cls, boxes) -> "Mbr":
        boxes = list(boxes)
        return cls(
            min(b.min_lat for b in boxes),
            max(b.max_lat for b in boxes),
            min(b.min_lon for b in boxes),
            max(b.max_lon for b in boxes),
        )

    def contains(self, other: "Mbr") -> bool:
        return (
            self.min_lat <= other.min_lat
            and self.max_lat >= other.max_lat
            and self.min_lon <= other.min_lon
            and self.max_lon >= other.max_lon
        )

    def contains_point(self, lat: float, lon: float) -> bool:
        return self.min_lat <= lat <= self.max_lat and self.min_lon <= lon <= self.max_lon

    @property
    def center(self) -> tuple[float, float]:
        return ((self.min_lat + self.max_lat) / 2, (self.min_lon + self.max_lon) / 2)


def _dist_to_meridian_segment(lat: float, lon: float, edge_lon: float, lo: float, hi: float) -> float:
    # cos(distance) along the meridian is A*sin(phi) + B*cos(phi), maximal at phi0 and
    # unimodal on the circle, so the minimum over [lo, hi] is at phi0 or an endpoint.
    p = math.radians(lat)
    phi0 = math.degrees(math.atan2(math.sin(p), math.cos(p) * math.cos(math.radians(edge_lon - lon))))
    return min(
        haversine_km(lat, lon, min(max(phi0, lo), hi), edge_lon),
        haversine_km(lat, lon, lo, edge_lon),
        haversine_km(lat, lon, hi, edge_lon),
    )


def min_distance_km(lat: float, lon: float, box: Mbr) -> float:
    """Exact minimum great-circle distance from a point to a lat/lon rectangle.

    Rectangles never wrap the antimeridian. Inside the longitude band the closest
    point lies on the same meridian; outside it the closest point lies on one of
    the two meridian edges (a parallel is not a geodesic, so clamping the query
    latitude would overestimate).
    """
    if box.min_lon <= lon <= box.max_lon:
        return haversine_km(lat, lon, min(max(lat, box.min_lat), box.max_lat), lon)
    return min(
        _dist_to_meridian_segment(lat, lon, box.min_lon, box.min_lat, box.max_lat),
        _dist_to_meridian_segment(lat, lon, box.max_lon, box.min_lat, box.max_lat),
    )
