"""End-to-end index construction from the three input CSV files."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterator, Sequence

from .engine import NetrIndex
from .errors import DataError, NetrError
from .model import CheckIn, Corpus, ingest
from .social import SocialParams, build_social_layer
from .trtree import bulk_load, compute_node_summaries

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BuildParams:
    intervals: int = 24
    dim: int = 32
    fanout: int = 32
    eps_km: float = 0.5
    eps_hours: float = 2.0
    min_pts: int = 10
    min_checkins: int = 5
    epochs: int = 100
    neg_samples: int = 5
    lr0: float = 0.025
    seed: int = 0

    def social(self) -> SocialParams:
        return SocialParams(
            eps_km=self.eps_km, eps_hours=self.eps_hours, min_pts=self.min_pts,
            min_checkins=self.min_checkins, dim=self.dim, epochs=self.epochs,
            neg_samples=self.neg_samples, lr0=self.lr0, seed=self.seed,
        )

    def as_dict(self) -> dict:
        return asdict(self)


@contextmanager
def stage(name: str, timings: dict[str, float]) -> Iterator[None]:
    """Time a build stage and tag any failure with the stage name."""
    t0 = time.perf_counter()
    try:
        yield
    except NetrError as exc:
        raise type(exc)(f"[{name}] {exc}") from exc
    except (ValueError, KeyError, OSError) as exc:
        raise DataError(f"[{name}] {exc}") from exc
    timings[name] = time.perf_counter() - t0
    log.info("stage %-10s %.3fs", name, timings[name])


def build_index(
    corpus: Corpus,
    checkins: Sequence[CheckIn],
    edges: Sequence[tuple[str, str]],
    params: BuildParams = BuildParams(),
    timings: dict[str, float] | None = None,
) -> NetrIndex:
    timings = {} if timings is None else timings
    with stage("tree", timings):
        tree = bulk_load(corpus, params.fanout)
    with stage("summaries", timings):
        compute_node_summaries(tree, corpus)
    with stage("social", timings):
        social = build_social_layer(corpus, tree, checkins, edges, params.social())
    return NetrIndex(corpus, tree, social, params.as_dict())


def build_from_files(
    objects_file: Path,
    checkins_file: Path,
    friends_file: Path,
    params: BuildParams = BuildParams(),
) -> NetrIndex:
    timings: dict[str, float] = {}
    with stage("ingest", timings):
        corpus, checkins, edges = ingest(objects_file, checkins_file, friends_file, params.intervals)
        log.info("ingested %d objects, %d check-ins, %d friendships", len(corpus), len(checkins), len(edges))
    return build_index(corpus, checkins, edges, params, timings)
