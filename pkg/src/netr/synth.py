"""Seeded synthetic LBSN datasets: venues, users, friendships, check-ins, queries."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

BASE_LAT, BASE_LON = 40.7500, -73.9800
KM_PER_DEG_LAT = 110.574

# Relative check-in intensity per hour of day; zero means closed.
_OPEN = {
    "bar": {18: 1, 19: 2, 20: 4, 21: 6, 22: 6, 23: 5, 0: 3, 1: 1},
    "nightclub": {22: 3, 23: 6, 0: 6, 1: 5, 2: 3, 3: 1},
    "cafe": {7: 4, 8: 6, 9: 6, 10: 4, 11: 2, 12: 2, 13: 2, 14: 2, 15: 1, 16: 1},
    "restaurant": {11: 2, 12: 5, 13: 4, 14: 1, 17: 2, 18: 4, 19: 6, 20: 5, 21: 2},
    "museum": {10: 3, 11: 4, 12: 3, 13: 4, 14: 5, 15: 4, 16: 3},
    "gym": {6: 4, 7: 5, 8: 3, 17: 4, 18: 6, 19: 4, 20: 2},
    "shop": {10: 2, 11: 3, 12: 3, 13: 3, 14: 3, 15: 4, 16: 4, 17: 4, 18: 3, 19: 2},
    "park": {7: 2, 8: 3, 9: 3, 10: 3, 11: 3, 12: 4, 13: 4, 14: 4, 15: 4, 16: 4, 17: 3, 18: 2},
}
CATEGORIES = tuple(_OPEN)

_VOCAB = (
    "coffee espresso latte bagel brunch pizza pasta sushi ramen burger taco vegan wine beer cocktail "
    "whiskey jazz dance techno live music art history gallery sculpture modern kids family fitness yoga "
    "boxing weights spa books vintage fashion shoes grocery organic garden lake trail dog picnic rooftop "
    "view cheap luxury cozy quiet loud late night breakfast lunch dinner dessert icecream bakery tea "
    "wifi study outdoor patio sports karaoke"
).split()


def hour_profile(category: str) -> np.ndarray:
    prof = np.zeros(24)
    for h, v in _OPEN[category].items():
        prof[h] = v
    return prof / prof.sum()


def _offset(lat: float, dlat_km: float, dlon_km: float) -> tuple[float, float]:
    return (
        lat + dlat_km / KM_PER_DEG_LAT,
        dlon_km / (111.320 * math.cos(math.radians(lat))),
    )


@dataclass
class SynthConfig:
    objects: int = 1000
    users: int = 200
    checkins_per_user: float = 100.0
    communities: int = 8
    hotspots: int = 10
    queries: int = 100
    query_keywords: int = 9
    seed: int = 0


def generate(out: Path, cfg: SynthConfig) -> dict[str, Path]:
    """Write objects.csv, checkins.csv, friends.csv and queries.csv under ``out``."""
    rng = np.random.default_rng(cfg.seed)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)

    hot = [_offset(BASE_LAT, *rng.normal(0, 8, size=2)) for _ in range(cfg.hotspots)]
    hot = [(lat, BASE_LON + dlon) for lat, dlon in hot]
    zipf = 1.0 / np.arange(1, len(_VOCAB) + 1) ** 1.1
    zipf /= zipf.sum()
    vocab_order = rng.permutation(len(_VOCAB))

    # districts specialise: each hotspot draws venue categories from its own skewed mix
    cat_weights = np.array([0.16, 0.06, 0.14, 0.2, 0.06, 0.08, 0.18, 0.12])
    district_mix = rng.dirichlet(cat_weights * 2.0, size=cfg.hotspots)
    obj_lat = np.empty(cfg.objects)
    obj_lon = np.empty(cfg.objects)
    obj_hot = rng.integers(cfg.hotspots, size=cfg.objects)
    obj_cat = np.array([rng.choice(len(CATEGORIES), p=district_mix[h]) for h in obj_hot])
    rows = []
    for i in range(cfg.objects):
        h_lat, h_lon = hot[obj_hot[i]]
        lat, dlon = _offset(h_lat, *rng.normal(0, 1.2, size=2))
        obj_lat[i], obj_lon[i] = lat, h_lon + dlon
        cat = CATEGORIES[obj_cat[i]]
        n_kw = int(rng.integers(3, 9))
        words = {cat: int(rng.integers(1, 4))}
        for w in rng.choice(len(_VOCAB), size=n_kw, replace=False, p=zipf):
            word = _VOCAB[vocab_order[w]]
            words[word] = words.get(word, 0) + int(rng.integers(1, 4))
        kw = "|".join(f"{w}:{c}" if c > 1 else w for w, c in words.items())
        rows.append((f"o{i:05d}", f"{obj_lat[i]:.6f}", f"{obj_lon[i]:.6f}", cat, kw))
    paths = {"objects": out / "objects.csv", "checkins": out / "checkins.csv",
             "friends": out / "friends.csv", "queries": out / "queries.csv"}
    _write(paths["objects"], ("id", "lat", "lon", "category", "keywords"), rows)

    # users: community -> home hotspot and category taste
    community = rng.integers(cfg.communities, size=cfg.users)
    comm_home = rng.integers(cfg.hotspots, size=cfg.communities)
    comm_taste = rng.dirichlet(np.full(len(CATEGORIES), 0.7), size=cfg.communities)
    users = [f"u{i:04d}" for i in range(cfg.users)]
    homes = []
    for i in range(cfg.users):
        h_lat, h_lon = hot[comm_home[community[i]]]
        lat, dlon = _offset(h_lat, *rng.normal(0, 2.0, size=2))
        homes.append((lat, h_lon + dlon))

    edges = set()
    for i in range(cfg.users):
        for j in range(i + 1, cfg.users):
            p = 0.12 if community[i] == community[j] else 0.004
            if rng.random() < p:
                edges.add((i, j))
    for i in range(cfg.users):
        if not any(i in e for e in edges):
            mates = [j for j in range(cfg.users) if j != i and community[j] == community[i]] or [(i + 1) % cfg.users]
            j = int(rng.choice(mates))
            edges.add((min(i, j), max(i, j)))
    _write(paths["friends"], ("user_a", "user_b"), [(users[a], users[b]) for a, b in sorted(edges)])

    profiles = np.array([hour_profile(c) for c in CATEGORIES])
    popularity = rng.pareto(1.5, size=cfg.objects) + 0.2
    # a share of venues never gets visited at all
    popularity[rng.random(cfg.objects) < 0.05] = 0.0
    start = datetime(2010, 1, 1)
    checkin_rows = []
    for i in range(cfg.users):
        dist = _approx_km(homes[i][0], homes[i][1], obj_lat, obj_lon)
        w = popularity * np.exp(-dist / 3.0) * comm_taste[community[i]][obj_cat]
        if w.sum() <= 0:
            continue
        w /= w.sum()
        n = int(rng.poisson(cfg.checkins_per_user))
        for o in rng.choice(cfg.objects, size=n, p=w):
            hour = int(rng.choice(24, p=profiles[obj_cat[o]]))
            ts = start + timedelta(days=int(rng.integers(0, 540)), hours=hour, minutes=int(rng.integers(60)))
            checkin_rows.append((users[i], rows[o][0], ts.isoformat(timespec="seconds")))
    _write(paths["checkins"], ("user_id", "object_id", "timestamp"), checkin_rows)

    query_rows = []
    for _ in range(cfg.queries):
        i = int(rng.integers(cfg.users))
        lat, dlon = _offset(homes[i][0], *rng.normal(0, 1.0, size=2))
        words = [_VOCAB[vocab_order[w]] for w in rng.choice(len(_VOCAB), size=cfg.query_keywords, replace=False, p=zipf)]
        ts = start + timedelta(days=int(rng.integers(540, 600)), hours=int(rng.integers(24)), minutes=int(rng.integers(60)))
        query_rows.append((users[i], f"{lat:.6f}", f"{homes[i][1] + dlon:.6f}", "|".join(words),
                           ts.isoformat(timespec="seconds"), 5))
    _write(paths["queries"], ("user_id", "lat", "lon", "keywords", "timestamp", "k"), query_rows)
    return paths


def _approx_km(lat: float, lon: float, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
    dy = (lats - lat) * KM_PER_DEG_LAT
    dx = (lons - lon) * 111.320 * math.cos(math.radians(lat))
    return np.hypot(dx, dy)


def _write(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
