"""Top-k query processing: best-first search over the NETR-tree, a brute-force
oracle, and an IR-tree style baseline that ignores temporal/social pruning."""

from __future__ import annotations

import heapq
import time
from bisect import bisect_right, insort
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any

from .errors import QueryError
from .geo import GeoPoint, distance_km, min_distance_km
from .model import Corpus, interval_of
from .scoring import QueryScorer, ScoreBreakdown, ScoreWeights, neighbor_weights
from .social import SocialLayer
from .trtree import TrTree

# slack added to node bounds so float rounding can never make a bound undercut a descendant
BOUND_SLACK = 1e-9

MODES = ("netr", "baseline-ir")

_OBJECT, _NODE = 0, 1


@dataclass
class NetrIndex:
    corpus: Corpus
    tree: TrTree
    social: SocialLayer
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Query:
    user_id: str
    location: GeoPoint
    keywords: tuple[str, ...]
    time: datetime
    k: int = 5
    weights: ScoreWeights = ScoreWeights()


@dataclass(frozen=True)
class RankedEntry:
    object_id: str
    idx: int
    score: ScoreBreakdown


@dataclass
class QueryStats:
    node_accesses: int = 0
    candidates_scored: int = 0
    elapsed_s: float = 0.0
    time_pruned: list[int] = field(default_factory=list)
    count_pruned: list[int] = field(default_factory=list)


@dataclass
class RankedResult:
    entries: list[RankedEntry]
    stats: QueryStats

    @property
    def object_ids(self) -> list[str]:
        return [e.object_id for e in self.entries]


def make_scorer(query: Query, index: NetrIndex) -> QueryScorer:
    if query.k < 1:
        raise QueryError("k must be >= 1")
    if query.user_id not in index.social.embeddings.row:
        raise QueryError(f"unknown user {query.user_id!r}")
    keywords = tuple(dict.fromkeys(w for w in query.keywords if w))
    if not keywords:
        raise QueryError("query needs at least one keyword")
    return QueryScorer(
        point=query.location,
        keywords=keywords,
        interval=interval_of(query.time, index.corpus.interval_count),
        weights=query.weights,
        phi_max=index.corpus.phi_max,
        neighbor_weights=neighbor_weights(index.social, query.user_id),
        object_leaf=index.tree.object_leaf,
    )


def _beyond(dist: float, radius: float) -> bool:
    return dist > radius * (1 + 1e-12) + 1e-9


def top_k(query: Query, index: NetrIndex) -> RankedResult:
    """Best-first top-k with temporal and heap-count pruning.

    Objects farther than the search radius, and objects whose visiting time
    score at the query time is zero (closed), are never returned.
    """
    start = time.perf_counter()
    scorer = make_scorer(query, index)
    tree, objects = index.tree, index.corpus.objects
    tau, radius, k = scorer.interval, query.weights.delta_max_km, query.k
    stats = QueryStats()

    heap: list[tuple[float, int, int, ScoreBreakdown | None]] = [(-float("inf"), _NODE, tree.root_id, None)]
    queued_scores: list[float] = []  # exact scores of objects waiting in the heap, ascending
    found: list[RankedEntry] = []

    def crowded(score: float) -> bool:
        # enough queued objects strictly beat this score to fill the remaining slots
        return len(queued_scores) - bisect_right(queued_scores, score) >= k - len(found)

    while heap:
        neg, kind, ref, bd = heapq.heappop(heap)
        if kind == _OBJECT:
            del queued_scores[bisect_right(queued_scores, bd.total) - 1]
            found.append(RankedEntry(objects[ref].id, ref, bd))
            if len(found) >= k:
                break
            continue
        node = tree.nodes[ref]
        stats.node_accesses += 1
        if node.time_bound[tau] == 0.0:
            stats.time_pruned.append(node.node_id)
            continue
        if node.is_leaf:
            for oi in node.children:
                obj = objects[oi]
                if distance_km(scorer.point, obj.location) > radius:
                    continue
                score = scorer.object_score(obj)
                stats.candidates_scored += 1
                if score.ft <= 0.0 or crowded(score.total):
                    continue
                heapq.heappush(heap, (-score.total, _OBJECT, oi, score))
                insort(queued_scores, score.total)
        else:
            for cid in node.children:
                child = tree.nodes[cid]
                if _beyond(min_distance_km(scorer.point.lat, scorer.point.lon, child.mbr), radius):
                    continue
                bound = scorer.node_bound(child)
                priority = bound.total + BOUND_SLACK
                if crowded(priority):
                    stats.count_pruned.append(cid)
                    continue
                heapq.heappush(heap, (-priority, _NODE, cid, bound))
    stats.elapsed_s = time.perf_counter() - start
    return RankedResult(found, stats)


def _rank(scored: list[RankedEntry], k: int) -> list[RankedEntry]:
    scored.sort(key=lambda e: (-e.score.total, e.idx))
    return scored[:k]


def brute_force_top_k(query: Query, index: NetrIndex) -> RankedResult:
    """Score every open in-radius object exactly and keep the best k."""
    start = time.perf_counter()
    scorer = make_scorer(query, index)
    stats = QueryStats()
    scored = []
    for obj in index.corpus.objects:
        if distance_km(scorer.point, obj.location) > query.weights.delta_max_km:
            continue
        score = scorer.object_score(obj)
        stats.candidates_scored += 1
        if score.ft > 0.0:
            scored.append(RankedEntry(obj.id, obj.idx, score))
    entries = _rank(scored, query.k)
    stats.elapsed_s = time.perf_counter() - start
    return RankedResult(entries, stats)


def top_k_baseline_ir(query: Query, index: NetrIndex) -> RankedResult:
    """Spatio-textual best-first retrieval of every in-radius object, then full re-ranking."""
    start = time.perf_counter()
    scorer = make_scorer(query, index)
    tree, objects = index.tree, index.corpus.objects
    radius = query.weights.delta_max_km
    stats = QueryStats()
    heap = [(-float("inf"), tree.root_id)]
    candidates = []
    while heap:
        _, nid = heapq.heappop(heap)
        node = tree.nodes[nid]
        stats.node_accesses += 1
        if node.is_leaf:
            for oi in node.children:
                if distance_km(scorer.point, objects[oi].location) <= radius:
                    candidates.append(oi)
            continue
        for cid in node.children:
            child = tree.nodes[cid]
            if _beyond(min_distance_km(scorer.point.lat, scorer.point.lon, child.mbr), radius):
                continue
            heapq.heappush(heap, (-scorer.spatio_textual_bound(child), cid))
    scored = []
    for oi in candidates:
        score = scorer.object_score(objects[oi])
        stats.candidates_scored += 1
        if score.ft > 0.0:
            scored.append(RankedEntry(objects[oi].id, oi, score))
    entries = _rank(scored, query.k)
    stats.elapsed_s = time.perf_counter() - start
    return RankedResult(entries, stats)


def run_query(query: Query, index: NetrIndex, mode: str = "netr") -> RankedResult:
    if mode == "netr":
        return top_k(query, index)
    if mode == "baseline-ir":
        return top_k_baseline_ir(query, index)
    raise QueryError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
