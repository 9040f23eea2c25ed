"""Batch query benchmarking with per-query and aggregate CSV rows."""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

from .engine import NetrIndex, Query, run_query
from .errors import DataError
from .geo import GeoPoint
from .model import parse_timestamp
from .scoring import ScoreWeights

QUERY_COLUMNS = ("user_id", "lat", "lon", "keywords", "timestamp", "k")
REPORT_COLUMNS = (
    "row_type", "query_id", "mode", "sweep", "value", "k",
    "elapsed_ms", "node_accesses", "candidates_scored", "returned",
)
SWEEPS = {
    "k": (1, 3, 5, 7, 9),
    "qw": (1, 3, 5, 7, 9),
    "radius": (4.0, 8.0, 12.0, 16.0, 20.0),
    "gamma": (0.1, 0.2, 0.3, 0.4, 0.5),
}
SWEEP_DEFAULTS = {"k": 5, "qw": 5, "radius": 12.0, "gamma": 0.3}


@dataclass(frozen=True)
class QuerySpec:
    query_id: int
    user_id: str
    lat: float
    lon: float
    keywords: tuple[str, ...]
    timestamp: str
    k: int


def read_queries(path: Path) -> list[QuerySpec]:
    path = Path(path)
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in QUERY_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise DataError(f"{path}: header missing column(s) {', '.join(missing)}")
        for qid, row in enumerate(reader):
            try:
                out.append(QuerySpec(
                    qid, row["user_id"].strip(), float(row["lat"]), float(row["lon"]),
                    tuple(w.strip() for w in row["keywords"].split("|") if w.strip()),
                    row["timestamp"].strip(), int(row["k"]),
                ))
            except (ValueError, AttributeError) as exc:
                raise DataError(f"{path}:{reader.line_num}: {exc}") from None
    return out


def to_query(spec: QuerySpec, weights: ScoreWeights, k: int | None = None, n_keywords: int | None = None) -> Query:
    try:
        when = parse_timestamp(spec.timestamp)
        point = GeoPoint(spec.lat, spec.lon)
    except ValueError as exc:
        raise DataError(f"query {spec.query_id}: {exc}") from None
    keywords = spec.keywords if n_keywords is None else spec.keywords[:n_keywords]
    return Query(spec.user_id, point, keywords, when, spec.k if k is None else k, weights)


@dataclass(frozen=True)
class BenchRow:
    row_type: str
    query_id: str
    mode: str
    sweep: str
    value: str
    k: int | str
    elapsed_ms: float
    node_accesses: float
    candidates_scored: float
    returned: float

    def as_list(self) -> list:
        return [getattr(self, c) for c in REPORT_COLUMNS]


def sweep_settings(sweep: str | None, base: ScoreWeights):
    """Yield (value label, weights, k override, keyword-count override) per sweep point."""
    if sweep is None:
        yield "", base, None, None
        return
    if sweep not in SWEEPS:
        raise ValueError(f"unknown sweep {sweep!r}; expected one of {', '.join(SWEEPS)}")
    d = SWEEP_DEFAULTS
    for v in SWEEPS[sweep]:
        w = replace(base, delta_max_km=d["radius"], gamma=d["gamma"])
        k, qw = d["k"], d["qw"]
        if sweep == "k":
            k = v
        elif sweep == "qw":
            qw = v
        elif sweep == "radius":
            w = replace(w, delta_max_km=v)
        else:
            w = replace(w, gamma=v)
        yield str(v), w, k, qw


def run_bench(
    index: NetrIndex,
    specs: Sequence[QuerySpec],
    modes: Iterable[str] = ("netr",),
    sweep: str | None = None,
    weights: ScoreWeights = ScoreWeights(),
    jobs: int = 1,
) -> list[BenchRow]:
    modes = list(modes)
    rows: list[BenchRow] = []
    for label, w, k, qw in sweep_settings(sweep, weights):
        queries = [to_query(s, w, k, qw) for s in specs]
        for mode in modes:
            def one(q: Query):
                return run_query(q, index, mode)

            if jobs > 1:
                with ThreadPoolExecutor(max_workers=jobs) as pool:
                    results = list(pool.map(one, queries))
            else:
                results = [one(q) for q in queries]
            group = [
                BenchRow("query", str(s.query_id), mode, sweep or "none", label, q.k,
                         r.stats.elapsed_s * 1000.0, r.stats.node_accesses, r.stats.candidates_scored,
                         len(r.entries))
                for s, q, r in zip(specs, queries, results)
            ]
            rows.extend(group)
            rows.append(aggregate(group, mode, sweep or "none", label))
    return rows


def aggregate(group: Sequence[BenchRow], mode: str, sweep: str, value: str) -> BenchRow:
    def mean(attr: str) -> float:
        return fmean(getattr(r, attr) for r in group) if group else 0.0

    return BenchRow("aggregate", "", mode, sweep, value, "",
                    mean("elapsed_ms"), mean("node_accesses"), mean("candidates_scored"), mean("returned"))


def write_report(rows: Sequence[BenchRow], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in rows:
            w.writerow(r.as_list())
