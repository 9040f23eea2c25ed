"""Ranking score components.

Every component has an exact form for objects and an upper-bound form for tree
nodes; the node form never falls below the exact score of any object beneath
the node, which is what makes best-first search return the true top-k.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .geo import GeoPoint, distance_km, min_distance_km
from .model import SpatialObject
from .social import SocialLayer, UserValueBlock, cosine
from .trtree import TrTreeNode

Target = SpatialObject | TrTreeNode


@dataclass(frozen=True)
class ScoreWeights:
    alpha: float = 0.25
    beta: float = 0.25
    gamma: float = 0.3
    theta: float = 0.5
    delta_max_km: float = 12.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "theta"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.alpha + self.beta + self.gamma > 1.0 + 1e-12:
            raise ValueError("alpha + beta + gamma must not exceed 1")
        if not self.delta_max_km > 0:
            raise ValueError("delta_max_km must be positive")

    @property
    def time_weight(self) -> float:
        return max(0.0, 1.0 - self.alpha - self.beta - self.gamma)


@dataclass(frozen=True)
class ScoreBreakdown:
    fg: float
    fk: float
    ft: float
    fs: float
    total: float


def distance_to(point: GeoPoint, target: Target) -> float:
    if isinstance(target, SpatialObject):
        return distance_km(point, target.location)
    return min_distance_km(point.lat, point.lon, target.mbr)


def location_proximity(point: GeoPoint, target: Target, delta_max_km: float) -> float:
    return 1.0 - distance_to(point, target) / delta_max_km


def geo_spatial_score(point: GeoPoint, target: Target, theta: float, delta_max_km: float) -> float:
    # a single object has no category heterogeneity
    entropy = 0.0 if isinstance(target, SpatialObject) else target.entropy_bound
    return theta * entropy + (1.0 - theta) * location_proximity(point, target, delta_max_km)


def keywords_similarity(keywords: Sequence[str], target: Target, phi_max: float) -> float:
    if phi_max <= 0.0 or not keywords:
        return 0.0
    weights = target.keywords if isinstance(target, SpatialObject) else target.keyword_summary
    total = 0.0
    for w in keywords:
        total += weights.get(w, 0.0)
    return total / (phi_max * len(keywords))


def visiting_time_score(target: Target, interval: int) -> float:
    if isinstance(target, SpatialObject):
        return target.time_scores[interval]
    return target.time_bound[interval]


def neighbor_weights(social: SocialLayer, user: str) -> list[tuple[UserValueBlock, float]]:
    """(block, embedding cosine) for each of the user's neighbours, in neighbour-id order."""
    emb = social.embeddings
    me = emb[user]
    return [(social.blocks[v], cosine(emb[v], me)) for v in social.neighbors.get(user, ())]


def social_effect_leaf(weights: Sequence[tuple[UserValueBlock, float]], obj_idx: int, leaf_node_id: int) -> float:
    """Neighbour-averaged cosine times the object's share of the neighbour's peak among its siblings."""
    if not weights:
        return 0.0
    total = 0.0
    for block, cos in weights:
        # the leaf node's entry is the max over the object's siblings
        peak = block.nodes.get(leaf_node_id, 0)
        if peak > 0:
            total += cos * (block.objects.get(obj_idx, 0) / peak)
    return total / len(weights)


def social_effect_bound(weights: Sequence[tuple[UserValueBlock, float]], node_id: int) -> float:
    if not weights:
        return 0.0
    total = 0.0
    for block, cos in weights:
        if block.nodes.get(node_id, 0) > 0 and cos > 0.0:
            total += cos
    return total / len(weights)


def ranking_score(fg: float, fk: float, ft: float, fs: float, weights: ScoreWeights) -> ScoreBreakdown:
    total = weights.alpha * fg + weights.beta * fk + weights.gamma * fs + weights.time_weight * ft
    return ScoreBreakdown(fg, fk, ft, fs, total)


@dataclass
class QueryScorer:
    """Per-query scoring state: resolved interval, deduplicated keywords and neighbour weights."""

    point: GeoPoint
    keywords: tuple[str, ...]
    interval: int
    weights: ScoreWeights
    phi_max: float
    neighbor_weights: list[tuple[UserValueBlock, float]]
    object_leaf: Sequence[int]

    def object_score(self, obj: SpatialObject) -> ScoreBreakdown:
        w = self.weights
        return ranking_score(
            geo_spatial_score(self.point, obj, w.theta, w.delta_max_km),
            keywords_similarity(self.keywords, obj, self.phi_max),
            visiting_time_score(obj, self.interval),
            social_effect_leaf(self.neighbor_weights, obj.idx, self.object_leaf[obj.idx]),
            w,
        )

    def node_bound(self, node: TrTreeNode) -> ScoreBreakdown:
        w = self.weights
        return ranking_score(
            geo_spatial_score(self.point, node, w.theta, w.delta_max_km),
            keywords_similarity(self.keywords, node, self.phi_max),
            visiting_time_score(node, self.interval),
            social_effect_bound(self.neighbor_weights, node.node_id),
            w,
        )

    def spatio_textual_bound(self, target: Target) -> float:
        w = self.weights
        return (w.alpha * geo_spatial_score(self.point, target, w.theta, w.delta_max_km)
                + w.beta * keywords_similarity(self.keywords, target, self.phi_max))
