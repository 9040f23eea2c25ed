"""``netr`` command line: build, query, gen, bench.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bench as benchmod
from .engine import MODES, Query, brute_force_top_k, run_query
from .errors import DataError, InvariantError, QueryError
from .geo import GeoPoint
from .model import interval_of, parse_timestamp
from .persist import load_index, save_index, sha256_file
from .pipeline import BuildParams, build_from_files
from .scoring import ScoreWeights
from .synth import SynthConfig, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("netr")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _existing(flag: str, value: str) -> Path:
    p = Path(value)
    if not p.is_file():
        raise UsageError(f"{flag}: file not found: {value}")
    return p


def cmd_build(args) -> int:
    files = {
        "objects": _existing("--objects", args.objects),
        "checkins": _existing("--checkins", args.checkins),
        "friends": _existing("--friends", args.friends),
    }
    params = BuildParams(
        intervals=args.intervals, dim=args.dim, fanout=args.fanout, eps_km=args.eps_km,
        eps_hours=args.eps_hours, min_pts=args.min_pts, min_checkins=args.min_checkins,
        epochs=args.epochs, seed=args.seed,
    )
    index = build_from_files(files["objects"], files["checkins"], files["friends"], params)
    out = save_index(index, Path(args.out), {k: sha256_file(p) for k, p in files.items()})
    print(f"index written to {out} ({len(index.corpus)} objects, {len(index.tree.nodes)} nodes, "
          f"{len(index.social.users)} users)")
    return EXIT_OK


def _weights(args) -> ScoreWeights:
    try:
        return ScoreWeights(args.alpha, args.beta, args.gamma, args.theta, args.radius)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fmt_row(rank, entry) -> str:
    s = entry.score
    return f"{rank:>4}  {entry.object_id:<12} {s.total:.6f}  {s.fg:.6f}  {s.fk:.6f}  {s.ft:.6f}  {s.fs:.6f}"


def cmd_query(args) -> int:
    try:
        when = parse_timestamp(args.time)
        point = GeoPoint(args.lat, args.lon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    index = load_index(Path(args.index))
    query = Query(args.user, point, tuple(w for w in args.keywords.split("|") if w.strip()),
                  when, args.k, _weights(args))
    result = run_query(query, index, args.mode)
    print(f"{'rank':>4}  {'object':<12} {'total':<8}  {'fg':<8}  {'fk':<8}  {'ft':<8}  {'fs':<8}")
    for rank, entry in enumerate(result.entries, start=1):
        print(_fmt_row(rank, entry))
    if args.explain:
        st = result.stats
        print(f"# mode={args.mode} interval={interval_of(when, index.corpus.interval_count)} "
              f"neighbors={len(index.social.neighbors.get(args.user, ()))}")
        print(f"# node_accesses={st.node_accesses} candidates_scored={st.candidates_scored} "
              f"time_pruned={len(st.time_pruned)} elapsed_ms={st.elapsed_s * 1000:.3f}")
    if args.oracle:
        oracle = brute_force_top_k(query, index)
        same = [(e.object_id, e.score.total) for e in oracle.entries] == \
               [(e.object_id, e.score.total) for e in result.entries]
        print("oracle: MATCH" if same else "oracle: MISMATCH")
        if not same:
            for rank, entry in enumerate(oracle.entries, start=1):
                print("# oracle " + _fmt_row(rank, entry))
            return EXIT_INVARIANT
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = SynthConfig(objects=args.objects, users=args.users, checkins_per_user=args.checkins_per_user,
                      queries=args.queries, seed=args.seed)
    paths = generate(Path(args.out), cfg)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return EXIT_OK


def cmd_bench(args) -> int:
    modes = [m.strip() for m in args.mode.split(",") if m.strip()]
    bad = [m for m in modes if m not in MODES]
    if bad or not modes:
        raise UsageError(f"--mode: unknown mode(s) {bad}; expected a subset of {','.join(MODES)}")
    index = load_index(Path(args.index))
    specs = benchmod.read_queries(_existing("--queries", args.queries))
    rows = benchmod.run_bench(index, specs, modes, args.sweep, _weights(args), args.jobs)
    benchmod.write_report(rows, Path(args.report))
    for r in rows:
        if r.row_type == "aggregate":
            print(f"{r.mode:<12} sweep={r.sweep}:{r.value or '-':<5} elapsed_ms={r.elapsed_ms:.3f} "
                  f"node_accesses={r.node_accesses:.2f} returned={r.returned:.2f}")
    print(f"report written to {args.report}")
    return EXIT_OK


def _score_flags(p: argparse.ArgumentParser) -> None:
    d = ScoreWeights()
    p.add_argument("--radius", type=float, default=d.delta_max_km, help="search radius / delta_max in km")
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--theta", type=float, default=d.theta)


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netr", description="Social-based time-aware spatial keyword queries over a NETR-tree.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = BuildParams()
    b = sub.add_parser("build", help="build an index directory from CSV inputs")
    b.add_argument("--objects", required=True)
    b.add_argument("--checkins", required=True)
    b.add_argument("--friends", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--intervals", type=int, default=d.intervals)
    b.add_argument("--dim", type=int, default=d.dim)
    b.add_argument("--fanout", type=int, default=d.fanout)
    b.add_argument("--eps-km", type=float, default=d.eps_km)
    b.add_argument("--eps-hours", type=float, default=d.eps_hours)
    b.add_argument("--min-pts", type=int, default=d.min_pts)
    b.add_argument("--min-checkins", type=int, default=d.min_checkins)
    b.add_argument("--epochs", type=int, default=d.epochs, help="LINE edge samples = epochs x |E|")
    b.add_argument("--seed", type=int, default=d.seed)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="answer one top-k query")
    q.add_argument("--index", required=True)
    q.add_argument("--user", required=True)
    q.add_argument("--lat", type=float, required=True)
    q.add_argument("--lon", type=float, required=True)
    q.add_argument("--keywords", required=True, help="'|'-separated keywords")
    q.add_argument("--time", required=True, help="ISO-8601 local time")
    q.add_argument("--k", type=int, default=5)
    _score_flags(q)
    q.add_argument("--mode", choices=MODES, default="netr")
    q.add_argument("--oracle", action="store_true", help="also run the brute-force oracle and compare")
    q.add_argument("--explain", action="store_true")
    q.add_argument("--seed", type=int, default=0, help="accepted for uniformity; queries are deterministic")
    q.set_defaults(func=cmd_query)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--out", required=True)
    g.add_argument("--objects", type=int, default=1000)
    g.add_argument("--users", type=int, default=200)
    g.add_argument("--checkins-per-user", type=float, default=100.0)
    g.add_argument("--queries", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    be = sub.add_parser("bench", help="run a query batch and write a CSV report")
    be.add_argument("--index", required=True)
    be.add_argument("--queries", required=True)
    be.add_argument("--mode", default="netr,baseline-ir")
    be.add_argument("--sweep", choices=tuple(benchmod.SWEEPS))
    be.add_argument("--report", required=True)
    be.add_argument("--jobs", type=int, default=1)
    _score_flags(be)
    be.add_argument("--seed", type=int, default=0, help="accepted for uniformity; benchmarks are deterministic")
    be.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse exits on --help (0) and on usage errors (1)
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, QueryError) as exc:
        print(f"netr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"netr {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvariantError as exc:
        print(f"netr {args.command}: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
