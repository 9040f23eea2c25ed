"""Domain types, CSV ingestion, check-in time distributions and TF-IDF weighting."""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError
from .geo import GeoPoint

DEFAULT_INTERVALS = 24

OBJECT_COLUMNS = ("id", "lat", "lon", "category", "keywords")
CHECKIN_COLUMNS = ("user_id", "object_id", "timestamp")
FRIEND_COLUMNS = ("user_a", "user_b")


def id_sort_key(ident: str):
    """Numeric ids sort numerically and before non-numeric ones."""
    try:
        return (0, int(ident), "")
    except ValueError:
        return (1, 0, ident)


def sort_ids(ids: Iterable[str]) -> list[str]:
    return sorted(ids, key=id_sort_key)


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}") from None


def interval_of(ts: datetime, interval_count: int = DEFAULT_INTERVALS) -> int:
    """Map a timestamp to its time interval by local wall-clock time of day."""
    # tz-aware timestamps keep their own offset: the wall-clock fields are already local
    seconds = ts.hour * 3600 + ts.minute * 60 + ts.second
    return seconds * interval_count // 86400


def hour_of_day(ts: datetime) -> float:
    return ts.hour + ts.minute / 60 + ts.second / 3600


@dataclass(frozen=True)
class CheckIn:
    user_id: str
    object_id: str
    timestamp: datetime


@dataclass
class SpatialObject:
    idx: int
    id: str
    location: GeoPoint
    category: str
    term_counts: dict[str, int]
    keywords: dict[str, float] = field(default_factory=dict)
    time_dist: tuple[float, ...] = ()
    total_checkins: int = 0

    @property
    def time_scores(self) -> tuple[float, ...]:
        """Per-interval visiting time score: probability over the peak probability."""
        cached = self.__dict__.get("_time_scores")
        if cached is None:
            cached = normalized_time_scores(self.time_dist)
            self.__dict__["_time_scores"] = cached
        return cached


@dataclass
class Corpus:
    objects: list[SpatialObject]
    interval_count: int
    categories: tuple[str, ...]
    doc_freq: dict[str, int] = field(default_factory=dict)
    phi_max: float = 0.0

    def __post_init__(self) -> None:
        self.by_id = {o.id: o for o in self.objects}

    @property
    def document_count(self) -> int:
        return len(self.objects)

    def __len__(self) -> int:
        return len(self.objects)


def build_time_distribution(timestamps: Iterable[datetime], interval_count: int = DEFAULT_INTERVALS) -> tuple[float, ...]:
    if interval_count < 1:
        raise ValueError("interval_count must be >= 1")
    counts = [0] * interval_count
    for ts in timestamps:
        counts[interval_of(ts, interval_count)] += 1
    total = sum(counts)
    if total == 0:
        return tuple(0.0 for _ in counts)
    return tuple(c / total for c in counts)


def normalized_time_scores(dist: Sequence[float]) -> tuple[float, ...]:
    peak = max(dist, default=0.0)
    if peak <= 0.0:
        return tuple(0.0 for _ in dist)
    return tuple(p / peak for p in dist)


def compute_tfidf(corpus: Corpus) -> Corpus:
    """Fill TF-IDF keyword weights (raw tf, natural-log idf), doc frequencies and phi_max."""
    n = len(corpus.objects)
    doc_freq: Counter[str] = Counter()
    for o in corpus.objects:
        doc_freq.update(w for w, c in o.term_counts.items() if c > 0)
    phi_max = 0.0
    objects = []
    for o in corpus.objects:
        weights = {
            w: c * math.log(n / doc_freq[w]) for w, c in sorted(o.term_counts.items()) if c > 0
        }
        if weights:
            phi_max = max(phi_max, max(weights.values()))
        objects.append(replace(o, keywords=weights))
    return Corpus(objects, corpus.interval_count, corpus.categories, dict(sorted(doc_freq.items())), phi_max)


def parse_keywords(text: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for token in text.split("|"):
        token = token.strip()
        if not token:
            continue
        word, sep, count = token.rpartition(":")
        if not sep:
            word, count = token, "1"
        word = word.strip()
        if not word:
            raise ValueError(f"empty keyword in {token!r}")
        n = int(count)
        if n < 0:
            raise ValueError(f"negative keyword count in {token!r}")
        counts[word] = counts.get(word, 0) + n
    return counts


def _rows(path: Path, columns: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = tuple(h.strip() for h in (reader.fieldnames or ()))
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataError(f"{path}: header missing column(s) {', '.join(missing)}")
        for row in reader:
            yield reader.line_num, {k.strip(): (v or "").strip() for k, v in row.items() if k}


def _field(path: Path, line: int, name: str, parse, raw: str):
    try:
        return parse(raw)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}:{line}: field {name!r}: {exc}") from None


def _latitude(raw: str) -> float:
    v = float(raw)
    if not -90.0 <= v <= 90.0:
        raise ValueError(f"latitude {v} outside [-90, 90]")
    return v


def _longitude(raw: str) -> float:
    v = float(raw)
    if not -180.0 <= v <= 180.0:
        raise ValueError(f"longitude {v} outside [-180, 180]")
    return v


def _nonempty(raw: str) -> str:
    if not raw:
        raise ValueError("empty value")
    return raw


def read_objects(path: Path) -> list[tuple[str, float, float, str, dict[str, int]]]:
    path = Path(path)
    rows, seen = [], set()
    for line, row in _rows(path, OBJECT_COLUMNS):
        oid = _field(path, line, "id", _nonempty, row["id"])
        if oid in seen:
            raise DataError(f"{path}:{line}: field 'id': duplicate object id {oid!r}")
        seen.add(oid)
        rows.append((
            oid,
            _field(path, line, "lat", _latitude, row["lat"]),
            _field(path, line, "lon", _longitude, row["lon"]),
            _field(path, line, "category", _nonempty, row["category"]),
            _field(path, line, "keywords", parse_keywords, row["keywords"]),
        ))
    return rows


def read_checkins(path: Path, known_objects: set[str]) -> list[CheckIn]:
    path = Path(path)
    out = []
    for line, row in _rows(path, CHECKIN_COLUMNS):
        uid = _field(path, line, "user_id", _nonempty, row["user_id"])
        oid = _field(path, line, "object_id", _nonempty, row["object_id"])
        if oid not in known_objects:
            raise DataError(f"{path}:{line}: unknown object id {oid!r}")
        ts = _field(path, line, "timestamp", parse_timestamp, row["timestamp"])
        out.append(CheckIn(uid, oid, ts))
    return out


def read_friends(path: Path) -> list[tuple[str, str]]:
    path = Path(path)
    edges = set()
    for line, row in _rows(path, FRIEND_COLUMNS):
        a = _field(path, line, "user_a", _nonempty, row["user_a"])
        b = _field(path, line, "user_b", _nonempty, row["user_b"])
        if a == b:
            raise DataError(f"{path}:{line}: self-loop on user {a!r}")
        edges.add(tuple(sorted((a, b), key=id_sort_key)))
    return sorted(edges, key=lambda e: (id_sort_key(e[0]), id_sort_key(e[1])))


def build_corpus(
    object_rows: Sequence[tuple[str, float, float, str, dict[str, int]]],
    checkins: Sequence[CheckIn],
    interval_count: int = DEFAULT_INTERVALS,
) -> Corpus:
    by_object: dict[str, list[datetime]] = {}
    for c in checkins:
        by_object.setdefault(c.object_id, []).append(c.timestamp)
    objects = []
    for idx, (oid, lat, lon, cat, terms) in enumerate(sorted(object_rows, key=lambda r: id_sort_key(r[0]))):
        stamps = by_object.get(oid, [])
        objects.append(SpatialObject(
            idx=idx,
            id=oid,
            location=GeoPoint(lat, lon),
            category=cat,
            term_counts=dict(sorted(terms.items())),
            time_dist=build_time_distribution(stamps, interval_count),
            total_checkins=len(stamps),
        ))
    categories = tuple(sorted({o.category for o in objects}))
    return compute_tfidf(Corpus(objects, interval_count, categories))


def ingest(
    objects_file: Path,
    checkins_file: Path,
    friends_file: Path,
    interval_count: int = DEFAULT_INTERVALS,
) -> tuple[Corpus, list[CheckIn], list[tuple[str, str]]]:
    """Parse the three input CSVs into a corpus, its check-ins and the friendship edges."""
    rows = read_objects(objects_file)
    checkins = read_checkins(checkins_file, {r[0] for r in rows})
    checkins.sort(key=lambda c: (id_sort_key(c.object_id), c.timestamp, id_sort_key(c.user_id)))
    edges = read_friends(friends_file)
    return build_corpus(rows, checkins, interval_count), checkins, edges
