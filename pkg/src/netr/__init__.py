"""NETR-tree: top-k social-based time-aware spatial keyword queries."""

from .engine import NetrIndex, Query, RankedResult, brute_force_top_k, run_query, top_k, top_k_baseline_ir
from .geo import GeoPoint
from .persist import load_index, save_index
from .pipeline import BuildParams, build_from_files, build_index
from .scoring import ScoreBreakdown, ScoreWeights

__all__ = [
    "BuildParams", "GeoPoint", "NetrIndex", "Query", "RankedResult", "ScoreBreakdown", "ScoreWeights",
    "brute_force_top_k", "build_from_files", "build_index", "load_index", "run_query",
    "save_index", "top_k", "top_k_baseline_ir",
]
__version__ = "0.1.0"
