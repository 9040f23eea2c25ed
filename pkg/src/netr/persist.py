"""Index directory format: manifest plus one file per artifact.

Floats go through ``json`` (shortest repr, exact round-trip); embeddings are raw
little-endian float64 rows behind a small header.
"""

from __future__ import annotations

import hashlib
import json
import shutil
import struct
import tempfile
from pathlib import Path
from typing import Mapping

import numpy as np

from .engine import NetrIndex
from .errors import DataError
from .geo import GeoPoint, Mbr
from .model import Corpus, SpatialObject
from .social import EmbeddingMatrix, SocialLayer, UserValueBlock
from .trtree import LEAF, TrTree, TrTreeNode

FORMAT_VERSION = 1
EMBEDDING_MAGIC = b"NEMB"
_EMB_HEADER = struct.Struct("<4sIII")
ARTIFACTS = ("objects.json", "tree.json", "embeddings.bin", "neighbors.json", "blocks.json")


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n", encoding="utf-8")


def write_embeddings(emb: EmbeddingMatrix, path: Path) -> None:
    n, d = emb.vectors.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_HEADER.pack(EMBEDDING_MAGIC, FORMAT_VERSION, n, d))
        fh.write(np.ascontiguousarray(emb.vectors, dtype="<f8").tobytes())


def read_embeddings(path: Path, users: tuple[str, ...]) -> EmbeddingMatrix:
    raw = Path(path).read_bytes()
    magic, version, n, d = _EMB_HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    if n != len(users):
        raise DataError(f"{path}: {n} rows but manifest lists {len(users)} users")
    body = raw[_EMB_HEADER.size:]
    if len(body) != n * d * 8:
        raise DataError(f"{path}: truncated embedding payload")
    vectors = np.frombuffer(body, dtype="<f8").reshape(n, d).astype(np.float64)
    return EmbeddingMatrix(users, vectors)


def _objects_doc(corpus: Corpus) -> dict:
    return {
        "interval_count": corpus.interval_count,
        "categories": list(corpus.categories),
        "phi_max": corpus.phi_max,
        "doc_freq": corpus.doc_freq,
        "objects": [
            {
                "id": o.id,
                "lat": o.location.lat,
                "lon": o.location.lon,
                "category": o.category,
                "term_counts": o.term_counts,
                "keywords": o.keywords,
                "time_dist": list(o.time_dist),
                "total_checkins": o.total_checkins,
            }
            for o in corpus.objects
        ],
    }


def _tree_doc(tree: TrTree, corpus: Corpus) -> dict:
    nodes = []
    for n in tree.nodes:
        m = n.mbr
        nodes.append({
            "id": n.node_id,
            "kind": n.kind,
            "mbr": [m.min_lat, m.max_lat, m.min_lon, m.max_lon],
            "children": [corpus.objects[c].id for c in n.children] if n.is_leaf else n.children,
            "parent": n.parent,
            "subtree_count": n.subtree_count,
            "entropy_bound": n.entropy_bound,
            "keyword_summary": n.keyword_summary,
            "time_bound": list(n.time_bound),
            "category_counts": n.category_counts,
        })
    return {"max_fanout": tree.max_fanout, "root": tree.root_id, "nodes": nodes}


def save_index(index: NetrIndex, directory: Path, inputs: Mapping[str, str] | None = None) -> Path:
    """Write the bundle atomically: build in a sibling temp dir, then swap it in."""
    directory = Path(directory)
    if directory.exists() and any(directory.iterdir()) and not (directory / "manifest.json").exists():
        raise DataError(f"{directory} exists and is not an index directory; refusing to overwrite")
    directory.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{directory.name}.", dir=directory.parent))
    try:
        corpus, social = index.corpus, index.social
        _dump(_objects_doc(corpus), tmp / "objects.json")
        _dump(_tree_doc(index.tree, corpus), tmp / "tree.json")
        write_embeddings(social.embeddings, tmp / "embeddings.bin")
        _dump({u: list(social.neighbors.get(u, ())) for u in social.users}, tmp / "neighbors.json")
        _dump(
            {
                u: {
                    "objects": [[corpus.objects[o].id, c] for o, c in sorted(b.objects.items())],
                    "nodes": [[nid, c] for nid, c in sorted(b.nodes.items())],
                }
                for u, b in social.blocks.items()
            },
            tmp / "blocks.json",
        )
        manifest = {
            "format": "netr-index",
            "version": FORMAT_VERSION,
            "parameters": index.params,
            "inputs": dict(inputs or {}),
            "users": list(social.users),
            "counts": {"objects": len(corpus), "nodes": len(index.tree.nodes), "users": len(social.users)},
            "artifacts": {name: sha256_file(tmp / name) for name in ARTIFACTS},
        }
        (tmp / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if directory.exists():
            shutil.rmtree(directory)
        tmp.rename(directory)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return directory


def _load_json(path: Path):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing index artifact {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: {exc}") from None


def load_index(directory: Path, verify: bool = True) -> NetrIndex:
    directory = Path(directory)
    manifest = _load_json(directory / "manifest.json")
    if manifest.get("format") != "netr-index" or manifest.get("version") != FORMAT_VERSION:
        raise DataError(f"{directory}: not a version-{FORMAT_VERSION} index")
    if verify:
        for name, digest in manifest["artifacts"].items():
            if not (directory / name).is_file():
                raise DataError(f"missing index artifact {directory / name}")
            if sha256_file(directory / name) != digest:
                raise DataError(f"{directory / name}: checksum mismatch")

    od = _load_json(directory / "objects.json")
    objects = [
        SpatialObject(
            idx=i,
            id=o["id"],
            location=GeoPoint(o["lat"], o["lon"]),
            category=o["category"],
            term_counts=o["term_counts"],
            keywords=o["keywords"],
            time_dist=tuple(o["time_dist"]),
            total_checkins=o["total_checkins"],
        )
        for i, o in enumerate(od["objects"])
    ]
    corpus = Corpus(objects, od["interval_count"], tuple(od["categories"]), od["doc_freq"], od["phi_max"])

    td = _load_json(directory / "tree.json")
    nodes = []
    object_leaf = [0] * len(objects)
    for n in td["nodes"]:
        leaf = n["kind"] == LEAF
        children = [corpus.by_id[c].idx for c in n["children"]] if leaf else list(n["children"])
        node = TrTreeNode(
            node_id=n["id"],
            kind=n["kind"],
            mbr=Mbr(*n["mbr"]),
            children=children,
            subtree_count=n["subtree_count"],
            parent=n["parent"],
            entropy_bound=n["entropy_bound"],
            keyword_summary=n["keyword_summary"],
            time_bound=tuple(n["time_bound"]),
            category_counts=n["category_counts"],
        )
        if leaf:
            for c in children:
                object_leaf[c] = node.node_id
        nodes.append(node)
    if [n.node_id for n in nodes] != list(range(len(nodes))):
        raise DataError(f"{directory / 'tree.json'}: node ids are not dense and ordered")
    tree = TrTree(nodes, td["root"], td["max_fanout"], object_leaf)

    users = tuple(manifest["users"])
    embeddings = read_embeddings(directory / "embeddings.bin", users)
    neighbors = {u: tuple(v) for u, v in _load_json(directory / "neighbors.json").items()}
    blocks = {
        u: UserValueBlock(
            u,
            {corpus.by_id[o].idx: c for o, c in b["objects"]},
            {nid: c for nid, c in b["nodes"]},
        )
        for u, b in _load_json(directory / "blocks.json").items()
    }
    return NetrIndex(corpus, tree, SocialLayer(embeddings, neighbors, blocks), manifest["parameters"])
