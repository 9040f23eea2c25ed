"""User layer: check-in clustering, preference features, skyline neighbors,
first-order LINE embeddings and per-user check-in value blocks."""

from __future__ import annotations

import logging
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .errors import DataError, InvariantError
from .geo import EARTH_RADIUS_KM, haversine_km_array
from .model import CheckIn, Corpus, hour_of_day, id_sort_key, interval_of, sort_ids
from .trtree import TrTree

log = logging.getLogger(__name__)

NOISE = -1


@dataclass(frozen=True)
class SocialGraph:
    users: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        known = set(self.users)
        for a, b in self.edges:
            if a == b:
                raise DataError(f"self-loop on user {a!r}")
            if a not in known or b not in known:
                raise DataError(f"edge ({a!r}, {b!r}) references an unknown user")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]], extra_users: Iterable[str] = ()) -> "SocialGraph":
        canon = {tuple(sorted(e, key=id_sort_key)) for e in edges}
        users = {u for e in canon for u in e} | set(extra_users)
        ordered = sorted(canon, key=lambda e: (id_sort_key(e[0]), id_sort_key(e[1])))
        return cls(tuple(sort_ids(users)), tuple(ordered))

    def friends(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {u: set() for u in self.users}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj


# ---------------------------------------------------------------- clustering


def _unit_vectors(lat: np.ndarray, lon: np.ndarray) -> np.ndarray:
    p, l = np.radians(lat), np.radians(lon)
    return np.column_stack([np.cos(p) * np.cos(l), np.cos(p) * np.sin(l), np.sin(p)])


def st_dbscan(
    points: Sequence[tuple[float, float, float]],
    eps_km: float = 0.5,
    eps_hours: float = 2.0,
    min_pts: int = 10,
) -> list[int]:
    """Density clustering of (lat, lon, hour-of-day) points.

    Two points are neighbours when they are within ``eps_km`` great-circle
    distance and ``eps_hours`` circular time-of-day distance. A point's
    neighbourhood includes itself. Returns one label per point, ``NOISE`` for
    noise; cluster ids are assigned in input order.
    """
    if eps_km <= 0 or eps_hours <= 0 or min_pts < 1:
        raise ValueError("eps_km, eps_hours must be > 0 and min_pts >= 1")
    n = len(points)
    if n == 0:
        return []
    arr = np.asarray(points, dtype=float)
    lat, lon, hour = arr[:, 0], arr[:, 1], arr[:, 2]
    chord = 2 * math.sin(min(eps_km / (2 * EARTH_RADIUS_KM), math.pi / 2))
    kd = cKDTree(_unit_vectors(lat, lon))

    def region(i: int) -> list[int]:
        cand = np.sort(np.asarray(kd.query_ball_point(kd.data[i], chord * (1 + 1e-9) + 1e-12), dtype=int))
        dh = np.abs(hour[cand] - hour[i])
        dh = np.minimum(dh, 24.0 - dh)
        cand = cand[dh <= eps_hours]
        cand = cand[haversine_km_array(lat[i], lon[i], lat[cand], lon[cand]) <= eps_km]
        return cand.tolist()

    unvisited = -2
    labels = [unvisited] * n
    cid = 0
    for i in range(n):
        if labels[i] != unvisited:
            continue
        seeds = region(i)
        if len(seeds) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cid
        queue: deque[int] = deque()

        def claim(nb: list[int]) -> None:
            for j in nb:
                if labels[j] == unvisited:
                    labels[j] = cid
                    queue.append(j)
                elif labels[j] == NOISE:
                    # already known not to be core: becomes a border point
                    labels[j] = cid

        claim(seeds)
        while queue:
            nb = region(queue.popleft())
            if len(nb) >= min_pts:
                claim(nb)
        cid += 1
    return labels


def cluster_checkins(
    checkins: Sequence[CheckIn],
    corpus: Corpus,
    eps_km: float = 0.5,
    eps_hours: float = 2.0,
    min_pts: int = 10,
) -> list[int]:
    """Cluster labels aligned with ``checkins`` (expected sorted by object id, timestamp)."""
    pts = []
    for c in checkins:
        loc = corpus.by_id[c.object_id].location
        pts.append((loc.lat, loc.lon, hour_of_day(c.timestamp)))
    return st_dbscan(pts, eps_km, eps_hours, min_pts)


# ---------------------------------------------------------------- features


@dataclass(frozen=True)
class CheckinFeatureVectors:
    area: np.ndarray
    time: np.ndarray
    category: np.ndarray


def build_feature_vectors(
    user_checkins: Sequence[int],
    checkins: Sequence[CheckIn],
    labels: Sequence[int],
    corpus: Corpus,
    n_clusters: int,
) -> CheckinFeatureVectors:
    """Count vectors over clusters, time intervals and categories for one user.

    ``user_checkins`` indexes into ``checkins``/``labels``. Noise check-ins are
    left out of the area vector only.
    """
    area = np.zeros(n_clusters, dtype=np.int64)
    time = np.zeros(corpus.interval_count, dtype=np.int64)
    cat_pos = {c: i for i, c in enumerate(corpus.categories)}
    category = np.zeros(len(corpus.categories), dtype=np.int64)
    for i in user_checkins:
        c = checkins[i]
        if labels[i] != NOISE:
            area[labels[i]] += 1
        time[interval_of(c.timestamp, corpus.interval_count)] += 1
        category[cat_pos[corpus.by_id[c.object_id].category]] += 1
    return CheckinFeatureVectors(area, time, category)


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb)))


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def skyline(candidates: Sequence[tuple[str, Sequence[float]]]) -> set[str]:
    """Ids of candidates not dominated by any other (block-nested-loop over a presorted list)."""
    ordered = sorted(candidates, key=lambda c: (-sum(c[1]), id_sort_key(c[0])))
    window: list[tuple[str, Sequence[float]]] = []
    for cid, vec in ordered:
        if any(dominates(w, vec) for _, w in window):
            continue
        window = [(wid, w) for wid, w in window if not dominates(vec, w)]
        window.append((cid, vec))
    return {cid for cid, _ in window}


def similarity_triple(a: CheckinFeatureVectors, b: CheckinFeatureVectors) -> tuple[float, float, float]:
    return (cosine(a.area, b.area), cosine(a.time, b.time), cosine(a.category, b.category))


def similarity_tables(users: Sequence[str], features: Mapping[str, CheckinFeatureVectors]) -> dict[str, dict[str, tuple[float, float, float]]]:
    """All pairwise similarity triples via normalized matrix products (zero rows give 0)."""
    mats = []
    for attr in ("area", "time", "category"):
        x = np.array([getattr(features[u], attr) for u in users], dtype=float).reshape(len(users), -1)
        norms = np.sqrt(np.einsum("ij,ij->i", x, x))
        x = np.divide(x, norms[:, None], out=np.zeros_like(x), where=norms[:, None] > 0)
        mats.append(np.clip(x @ x.T, -1.0, 1.0))
    return {
        u: {v: (float(mats[0][i, j]), float(mats[1][i, j]), float(mats[2][i, j])) for j, v in enumerate(users)}
        for i, u in enumerate(users)
    }


def select_neighbors(
    target: str,
    users: Iterable[str],
    friends: Mapping[str, set[str]],
    features: Mapping[str, CheckinFeatureVectors],
    checkin_counts: Mapping[str, int],
    min_checkins: int = 5,
    similarities: Mapping[str, tuple[float, float, float]] | None = None,
) -> set[str]:
    """Skyline of similar users (pool: enough check-ins, some positive similarity) plus friends.

    ``similarities`` optionally supplies precomputed triples against the target.
    """
    mine = features[target]
    pool = []
    for u in users:
        if u == target or checkin_counts.get(u, 0) < min_checkins:
            continue
        sims = similarities[u] if similarities is not None else similarity_triple(mine, features[u])
        # a candidate sharing nothing with the target carries no preference signal
        if all(s <= 0.0 for s in sims):
            continue
        pool.append((u, sims))
    return (skyline(pool) | set(friends.get(target, ()))) - {target}


# ---------------------------------------------------------------- LINE


@dataclass
class EmbeddingMatrix:
    users: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.row = {u: i for i, u in enumerate(self.users)}

    def __getitem__(self, user: str) -> np.ndarray:
        return self.vectors[self.row[user]]

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


@njit(cache=True)
def _line_kernel(vec, src, dst, negs, lr0, log_every):
    total = src.shape[0]
    d = vec.shape[1]
    grad = np.zeros(d)
    n_chk = (total + log_every - 1) // log_every
    losses = np.zeros(n_chk)
    run = 0.0
    for s in range(total):
        lr = lr0 * (1.0 - 0.99 * s / total)
        i = src[s]
        for k in range(d):
            grad[k] = 0.0
        for t in range(negs.shape[1] + 1):
            if t == 0:
                j = dst[s]
                label = 1.0
            else:
                j = negs[s, t - 1]
                label = 0.0
                # a negative that is the source or the true neighbour carries no signal
                if j == i or j == dst[s]:
                    continue
            dot = 0.0
            for k in range(d):
                dot += vec[i, k] * vec[j, k]
            if dot > 30.0:
                f = 1.0
            elif dot < -30.0:
                f = 0.0
            else:
                f = 1.0 / (1.0 + math.exp(-dot))
            p = f if label == 1.0 else 1.0 - f
            run -= math.log(max(p, 1e-12))
            g = (label - f) * lr
            for k in range(d):
                grad[k] += g * vec[j, k]
                vec[j, k] += g * vec[i, k]
        for k in range(d):
            vec[i, k] += grad[k]
        if (s + 1) % log_every == 0 or s + 1 == total:
            losses[s // log_every] = run / ((s % log_every) + 1)
            run = 0.0
    return losses


def embed_line(
    graph: SocialGraph,
    dim: int = 32,
    epochs: int = 100,
    neg_samples: int = 5,
    lr0: float = 0.025,
    seed: int = 0,
) -> EmbeddingMatrix:
    """First-order LINE trained by uniform edge sampling with degree^0.75 negatives.

    Runs ``epochs * |E|`` SGD steps; deterministic for a fixed seed.
    """
    if not graph.users:
        raise ValueError("graph has no users")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(seed)
    n = len(graph.users)
    vec = rng.uniform(-0.5 / dim, 0.5 / dim, size=(n, dim))
    row = {u: i for i, u in enumerate(graph.users)}
    if not graph.edges:
        log.warning("graph has no edges; all %d users keep their random initialization", n)
        return EmbeddingMatrix(graph.users, vec)

    directed = np.array(
        [(row[a], row[b]) for a, b in graph.edges] + [(row[b], row[a]) for a, b in graph.edges],
        dtype=np.int64,
    )
    degree = np.bincount(directed[:, 0], minlength=n).astype(float)
    isolated = [graph.users[i] for i in np.flatnonzero(degree == 0)]
    if isolated:
        log.info("%d users without edges keep their random initialization", len(isolated))
    noise = degree ** 0.75
    noise /= noise.sum()

    total = epochs * len(graph.edges)
    picks = rng.integers(0, len(directed), size=total)
    negs = rng.choice(n, size=(total, neg_samples), p=noise).astype(np.int64)
    losses = _line_kernel(vec, directed[picks, 0].copy(), directed[picks, 1].copy(), negs, float(lr0),
                          max(1, total // 10))
    for step, loss in enumerate(losses, start=1):
        if not math.isfinite(loss):
            raise InvariantError(f"LINE loss not finite at checkpoint {step}")
        log.debug("LINE checkpoint %d/%d: loss %.4f", step, len(losses), loss)
    if not np.all(np.isfinite(vec)):
        raise InvariantError("LINE produced non-finite embedding entries")
    return EmbeddingMatrix(graph.users, vec)


# ---------------------------------------------------------------- value blocks


@dataclass
class UserValueBlock:
    user_id: str
    objects: dict[int, int] = field(default_factory=dict)
    """object index -> C(u, o)"""
    nodes: dict[int, int] = field(default_factory=dict)
    """tree node id -> max check-in count over the node's objects"""

    def __len__(self) -> int:
        return len(self.objects) + len(self.nodes)

    def node_count(self, node_id: int) -> int:
        return self.nodes.get(node_id, 0)


def build_user_blocks(
    users: Iterable[str],
    tree: TrTree,
    visit_counts: Mapping[str, Mapping[int, int]],
) -> dict[str, UserValueBlock]:
    """Bottom-up max propagation of each user's per-object check-in counts."""
    blocks = {}
    n_obj = len(tree.object_leaf)
    for u in users:
        block = UserValueBlock(u)
        for obj, count in sorted(visit_counts.get(u, {}).items()):
            if not 0 <= obj < n_obj:
                raise DataError(f"check-in of user {u!r} references object {obj} absent from the tree")
            block.objects[obj] = count
            value = count
            node_id: int | None = tree.object_leaf[obj]
            while node_id is not None:
                if block.nodes.get(node_id, -1) < value:
                    block.nodes[node_id] = value
                value = block.nodes[node_id]
                node_id = tree.nodes[node_id].parent
        blocks[u] = block
    return blocks


def visit_counts_by_user(checkins: Iterable[CheckIn], corpus: Corpus) -> dict[str, dict[int, int]]:
    counts: dict[str, Counter[int]] = {}
    for c in checkins:
        counts.setdefault(c.user_id, Counter())[corpus.by_id[c.object_id].idx] += 1
    return {u: dict(sorted(cnt.items())) for u, cnt in counts.items()}


# ---------------------------------------------------------------- assembly


@dataclass
class SocialParams:
    eps_km: float = 0.5
    eps_hours: float = 2.0
    min_pts: int = 10
    min_checkins: int = 5
    dim: int = 32
    epochs: int = 100
    neg_samples: int = 5
    lr0: float = 0.025
    seed: int = 0


@dataclass
class SocialLayer:
    embeddings: EmbeddingMatrix
    neighbors: dict[str, tuple[str, ...]]
    blocks: dict[str, UserValueBlock]

    @property
    def users(self) -> tuple[str, ...]:
        return self.embeddings.users


def build_social_layer(
    corpus: Corpus,
    tree: TrTree,
    checkins: Sequence[CheckIn],
    edges: Iterable[tuple[str, str]],
    params: SocialParams | None = None,
) -> SocialLayer:
    p = params or SocialParams()
    graph = SocialGraph.from_edges(edges, extra_users=(c.user_id for c in checkins))
    labels = cluster_checkins(checkins, corpus, p.eps_km, p.eps_hours, p.min_pts)
    n_clusters = max(labels, default=-1) + 1
    log.info("ST-DBSCAN: %d clusters, %d noise check-ins", n_clusters, labels.count(NOISE))

    per_user: dict[str, list[int]] = {u: [] for u in graph.users}
    for i, c in enumerate(checkins):
        per_user[c.user_id].append(i)
    features = {u: build_feature_vectors(idx, checkins, labels, corpus, n_clusters) for u, idx in per_user.items()}
    counts = {u: len(idx) for u, idx in per_user.items()}
    friends = graph.friends()
    sims = similarity_tables(graph.users, features)
    neighbors = {
        u: tuple(sort_ids(select_neighbors(u, graph.users, friends, features, counts, p.min_checkins, sims[u])))
        for u in graph.users
    }
    embeddings = embed_line(graph, p.dim, p.epochs, p.neg_samples, p.lr0, p.seed)
    blocks = build_user_blocks(graph.users, tree, visit_counts_by_user(checkins, corpus))
    return SocialLayer(embeddings, neighbors, blocks)
