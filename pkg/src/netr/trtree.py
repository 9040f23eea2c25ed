"""Time-aware R-tree: STR bulk loading plus entropy, keyword and time-score envelopes."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

from .geo import Mbr
from .model import Corpus

LEAF = "leaf"
INTERNAL = "internal"
DEFAULT_FANOUT = 32


@dataclass
class TrTreeNode:
    node_id: int
    kind: str
    mbr: Mbr
    children: list[int]
    """Child node ids for internal nodes, object indices for leaves."""
    subtree_count: int
    parent: int | None = None
    entropy_bound: float = 0.0
    keyword_summary: dict[str, float] = field(default_factory=dict)
    time_bound: tuple[float, ...] = ()
    category_counts: dict[str, int] = field(default_factory=dict)

    @property
    def is_leaf(self) -> bool:
        return self.kind == LEAF


@dataclass
class TrTree:
    nodes: list[TrTreeNode]
    root_id: int
    max_fanout: int
    object_leaf: list[int]
    """object index -> id of the leaf node holding it"""

    @property
    def root(self) -> TrTreeNode:
        return self.nodes[self.root_id]

    @property
    def min_fanout(self) -> int:
        return self.max_fanout // 2

    @property
    def height(self) -> int:
        h, node = 1, self.root
        while not node.is_leaf:
            node = self.nodes[node.children[0]]
            h += 1
        return h

    def ancestors(self, node_id: int) -> Iterator[TrTreeNode]:
        """Strict ancestors of a node, nearest first."""
        parent = self.nodes[node_id].parent
        while parent is not None:
            yield self.nodes[parent]
            parent = self.nodes[parent].parent

    def object_ancestors(self, obj_idx: int) -> list[TrTreeNode]:
        leaf = self.nodes[self.object_leaf[obj_idx]]
        return [leaf, *self.ancestors(leaf.node_id)]

    def descendant_objects(self, node_id: int) -> list[int]:
        out, stack = [], [node_id]
        while stack:
            node = self.nodes[stack.pop()]
            if node.is_leaf:
                out.extend(node.children)
            else:
                stack.extend(reversed(node.children))
        return out

    def walk(self) -> Iterator[TrTreeNode]:
        stack = [self.root_id]
        while stack:
            node = self.nodes[stack.pop()]
            yield node
            if not node.is_leaf:
                stack.extend(reversed(node.children))


def _split_even(seq: list, parts: int) -> list[list]:
    q, r = divmod(len(seq), parts)
    out, start = [], 0
    for i in range(parts):
        end = start + q + (1 if i < r else 0)
        out.append(seq[start:end])
        start = end
    return out


def _str_groups(entries: list[tuple[float, float, int]], max_fanout: int) -> list[list[tuple[float, float, int]]]:
    """Sort-tile-recursive packing with balanced slab and group sizes (>= max_fanout // 2)."""
    pages = math.ceil(len(entries) / max_fanout)
    slabs = math.ceil(math.sqrt(pages))
    by_lon = sorted(entries, key=lambda e: (e[1], e[0], e[2]))
    groups = []
    for slab in _split_even(by_lon, slabs):
        slab.sort(key=lambda e: (e[0], e[1], e[2]))
        groups.extend(_split_even(slab, math.ceil(len(slab) / max_fanout)))
    return groups


def bulk_load(corpus: Corpus, max_fanout: int = DEFAULT_FANOUT) -> TrTree:
    """Pack the corpus into a TR-tree skeleton (structure, MBRs, counts; no summaries)."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if max_fanout < 2:
        raise ValueError("max_fanout must be >= 2")

    # provisional nodes keyed by build order; renumbered breadth-first at the end
    built: list[tuple[str, Mbr, list[int], int]] = []
    entries = [(o.location.lat, o.location.lon, o.idx) for o in corpus.objects]
    kind = LEAF
    while True:
        groups = [entries] if len(entries) <= max_fanout else _str_groups(entries, max_fanout)
        level = []
        for group in groups:
            refs = [e[2] for e in group]
            if kind == LEAF:
                mbr = Mbr.union(Mbr.of_point(e[0], e[1]) for e in group)
                count = len(refs)
            else:
                mbr = Mbr.union(built[r][1] for r in refs)
                count = sum(built[r][3] for r in refs)
            built.append((kind, mbr, refs, count))
            level.append(len(built) - 1)
        if len(level) == 1:
            root = level[0]
            break
        entries = [(*built[i][1].center, i) for i in level]
        kind = INTERNAL

    renumber: dict[int, int] = {}
    order, head = [root], 0
    while head < len(order):
        tmp = order[head]
        renumber[tmp] = head
        head += 1
        if built[tmp][0] == INTERNAL:
            order.extend(built[tmp][2])

    nodes: list[TrTreeNode] = []
    object_leaf = [0] * len(corpus)
    for new_id, tmp in enumerate(order):
        kind, mbr, refs, count = built[tmp]
        children = refs if kind == LEAF else [renumber[r] for r in refs]
        nodes.append(TrTreeNode(new_id, kind, mbr, list(children), count))
    for node in nodes:
        if node.is_leaf:
            for o in node.children:
                object_leaf[o] = node.node_id
        else:
            for c in node.children:
                nodes[c].parent = node.node_id
    return TrTree(nodes, 0, max_fanout, object_leaf)


def raw_category_entropy(category_counts: Mapping[str, int] | Sequence[int], num_categories: int) -> float:
    """Shannon entropy of category proportions, normalized by log2 of the category count."""
    counts = list(category_counts.values()) if isinstance(category_counts, Mapping) else list(category_counts)
    if any(c < 0 for c in counts):
        raise ValueError("negative category count")
    total = sum(counts)
    if total <= 0:
        raise ValueError("category counts are all zero")
    if num_categories < 1:
        raise ValueError("num_categories must be >= 1")
    if num_categories == 1:
        return 0.0
    h = 0.0
    for c in counts:
        if c > 0:
            p = c / total
            h -= p * math.log2(p)
    return min(1.0, max(0.0, h / math.log2(num_categories)))


def _max_merge(into: dict[str, float], other: Mapping[str, float]) -> None:
    for w, v in other.items():
        if v > into.get(w, -1.0):
            into[w] = v


def compute_node_summaries(tree: TrTree, corpus: Corpus) -> TrTree:
    """Annotate every node with admissible entropy, keyword and time-score envelopes."""
    n_cat = len(corpus.categories)
    width = corpus.interval_count
    # children always have larger ids than their parent (breadth-first numbering)
    for node in reversed(tree.nodes):
        counts: Counter[str] = Counter()
        summary: dict[str, float] = {}
        bound = [0.0] * width
        if node.is_leaf:
            child_entropy = 0.0
            for idx in node.children:
                o = corpus.objects[idx]
                counts[o.category] += 1
                _max_merge(summary, o.keywords)
                bound = [max(a, b) for a, b in zip(bound, o.time_scores)]
        else:
            child_entropy = 0.0
            for cid in node.children:
                child = tree.nodes[cid]
                counts.update(child.category_counts)
                _max_merge(summary, child.keyword_summary)
                bound = [max(a, b) for a, b in zip(bound, child.time_bound)]
                child_entropy = max(child_entropy, child.entropy_bound)
        node.category_counts = dict(sorted(counts.items()))
        node.entropy_bound = max(raw_category_entropy(counts, n_cat), child_entropy)
        node.keyword_summary = dict(sorted(summary.items()))
        node.time_bound = tuple(bound)
    return tree


def build_tree(corpus: Corpus, max_fanout: int = DEFAULT_FANOUT) -> TrTree:
    return compute_node_summaries(bulk_load(corpus, max_fanout), corpus)
