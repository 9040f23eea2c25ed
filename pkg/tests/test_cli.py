import csv
import json
from collections import Counter
from statistics import fmean

import pytest

from netr.bench import REPORT_COLUMNS
from netr.cli import main
from netr.synth import CATEGORIES
from tests.tiny import write_dataset

BUILD_FLAGS = ["--fanout", "8", "--dim", "8", "--min-pts", "5", "--epochs", "20", "--seed", "3"]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert main(["gen", "--out", str(out), "--objects", "150", "--users", "40",
                 "--checkins-per-user", "30", "--queries", "100", "--seed", "5"]) == 0
    return out


@pytest.fixture(scope="module")
def bundle(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("b") / "idx"
    assert main(["build", "--objects", str(dataset / "objects.csv"), "--checkins", str(dataset / "checkins.csv"),
                 "--friends", str(dataset / "friends.csv"), "--out", str(out), *BUILD_FLAGS]) == 0
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestGen:
    def test_same_seed_identical(self, tmp_path, capsys):
        for name in ("a", "b"):
            assert run(capsys, "gen", "--out", tmp_path / name, "--objects", 80, "--users", 20, "--seed", 9)[0] == 0
        for f in ("objects.csv", "checkins.csv", "friends.csv", "queries.csv"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        run(capsys, "gen", "--out", tmp_path / "c", "--objects", 80, "--users", 20, "--seed", 10)
        assert (tmp_path / "c" / "checkins.csv").read_bytes() != (tmp_path / "a" / "checkins.csv").read_bytes()

    def test_exact_counts(self, tmp_path, capsys):
        run(capsys, "gen", "--out", tmp_path, "--objects", 1000, "--users", 200, "--seed", 1)
        assert len(read_csv(tmp_path / "objects.csv")) == 1000
        users = {r["user_id"] for r in read_csv(tmp_path / "checkins.csv")}
        users |= {u for r in read_csv(tmp_path / "friends.csv") for u in (r["user_a"], r["user_b"])}
        assert len(users) == 200

    def test_bar_checkins_peak_in_evening(self, dataset):
        cats = {r["id"]: r["category"] for r in read_csv(dataset / "objects.csv")}
        assert "bar" in CATEGORIES
        hours = Counter(int(r["timestamp"][11:13]) for r in read_csv(dataset / "checkins.csv") if cats[r["object_id"]] == "bar")
        mode = hours.most_common(1)[0][0]
        assert 18 <= mode <= 23


class TestBuild:
    def test_build_twice_identical_manifest(self, dataset, tmp_path, capsys):
        args = ["--objects", dataset / "objects.csv", "--checkins", dataset / "checkins.csv",
                "--friends", dataset / "friends.csv", *BUILD_FLAGS]
        assert run(capsys, "build", *args, "--out", tmp_path / "x")[0] == 0
        assert run(capsys, "build", *args, "--out", tmp_path / "y")[0] == 0
        mx = json.loads((tmp_path / "x" / "manifest.json").read_text())
        my = json.loads((tmp_path / "y" / "manifest.json").read_text())
        assert mx["artifacts"] == my["artifacts"] and mx["inputs"] == my["inputs"]
        assert mx == my

    def test_missing_friends_flag(self, dataset, tmp_path, capsys):
        code, _, err = run(capsys, "build", "--objects", dataset / "objects.csv",
                           "--checkins", dataset / "checkins.csv", "--out", tmp_path / "z")
        assert code == 1 and "--friends" in err

    def test_missing_friends_file(self, dataset, tmp_path, capsys):
        code, _, err = run(capsys, "build", "--objects", dataset / "objects.csv", "--checkins",
                           dataset / "checkins.csv", "--friends", tmp_path / "nope.csv", "--out", tmp_path / "z")
        assert code == 1 and "--friends" in err
        assert not (tmp_path / "z").exists()

    def test_bad_data_exit_2(self, tmp_path, capsys):
        paths = write_dataset(tmp_path / "d", checkins=[("u1", "zz", "2011-01-01T10:00:00")])
        code, _, err = run(capsys, "build", "--objects", paths["objects"], "--checkins", paths["checkins"],
                           "--friends", paths["friends"], "--out", tmp_path / "idx")
        assert code == 2 and "ingest" in err and "zz" in err
        assert not (tmp_path / "idx").exists()
        assert list((tmp_path).iterdir()) == [tmp_path / "d"]


@pytest.fixture(scope="module")
def tiny_bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny")
    paths = write_dataset(root / "data")
    assert main(["build", "--objects", str(paths["objects"]), "--checkins", str(paths["checkins"]),
                 "--friends", str(paths["friends"]), "--out", str(root / "idx"),
                 "--fanout", "4", "--dim", "4", "--min-pts", "2", "--min-checkins", "1", "--epochs", "20"]) == 0
    return root / "idx"


QUERY = ["--user", "u1", "--lat", "40.7", "--lon", "-74.0", "--keywords", "beer|jazz", "--time", "2011-02-01T21:30:00"]


class TestQuery:
    def test_tiny_smoke(self, tiny_bundle, capsys):
        code, out, _ = run(capsys, "query", "--index", tiny_bundle, *QUERY, "--explain")
        lines = out.splitlines()
        assert code == 0
        assert lines[0].split() == ["rank", "object", "total", "fg", "fk", "ft", "fs"]
        assert lines[1].split()[:2] == ["1", "a"]
        assert any(line.startswith("# node_accesses=") for line in lines)

    def test_oracle_match(self, tiny_bundle, capsys):
        for mode in ("netr", "baseline-ir"):
            code, out, _ = run(capsys, "query", "--index", tiny_bundle, *QUERY, "--oracle", "--mode", mode)
            assert code == 0 and "oracle: MATCH" in out

    def test_oracle_match_generated(self, bundle, dataset, capsys):
        for r in read_csv(dataset / "queries.csv")[:15]:
            code, out, _ = run(capsys, "query", "--index", bundle, "--user", r["user_id"], "--lat", r["lat"],
                               "--lon", r["lon"], "--keywords", r["keywords"], "--time", r["timestamp"], "--oracle")
            assert code == 0 and "oracle: MATCH" in out

    def test_k1_single_object_index(self, tmp_path, capsys):
        paths = write_dataset(tmp_path / "d", objects=[("solo", 40.7, -74.0, "bar", "beer")],
                              checkins=[("u1", "solo", "2011-01-01T21:00:00")], friends=[("u1", "u2")])
        assert run(capsys, "build", "--objects", paths["objects"], "--checkins", paths["checkins"],
                   "--friends", paths["friends"], "--out", tmp_path / "idx", "--dim", "4", "--epochs", "5")[0] == 0
        code, out, _ = run(capsys, "query", "--index", tmp_path / "idx", *QUERY, "--k", "1")
        assert code == 0
        rows = out.splitlines()[1:]
        assert len(rows) == 1 and rows[0].split()[:2] == ["1", "solo"]

    def test_absent_keywords(self, tiny_bundle, capsys):
        q = list(QUERY)
        q[q.index("--keywords") + 1] = "qqq|zzz"
        code, out, _ = run(capsys, "query", "--index", tiny_bundle, *q)
        rows = [line.split() for line in out.splitlines()[1:]]
        assert code == 0 and rows and all(float(r[4]) == 0.0 for r in rows)

    @pytest.mark.parametrize("flag,value", [("--user", "ghost"), ("--time", "yesterday"), ("--k", "0"),
                                            ("--alpha", "2"), ("--lat", "95")])
    def test_usage_errors(self, tiny_bundle, capsys, flag, value):
        q = list(QUERY) + ["--k", "5", "--alpha", "0.25"]
        q[q.index(flag) + 1] = value
        assert run(capsys, "query", "--index", tiny_bundle, *q)[0] == 1

    def test_corrupt_index_exit_2(self, tiny_bundle, tmp_path, capsys):
        import shutil
        broken = tmp_path / "idx"
        shutil.copytree(tiny_bundle, broken)
        (broken / "tree.json").write_text("{}")
        assert run(capsys, "query", "--index", broken, *QUERY)[0] == 2

    def test_bad_subcommand(self, capsys):
        assert run(capsys, "frobnicate")[0] == 1


GOLDEN_HEADER = "row_type,query_id,mode,sweep,value,k,elapsed_ms,node_accesses,candidates_scored,returned"


class TestBench:
    def test_row_accounting_and_golden_header(self, bundle, dataset, tmp_path, capsys):
        report = tmp_path / "r.csv"
        code, _, _ = run(capsys, "bench", "--index", bundle, "--queries", dataset / "queries.csv",
                         "--mode", "netr,baseline-ir", "--report", report)
        assert code == 0
        assert report.read_text().splitlines()[0] == GOLDEN_HEADER == ",".join(REPORT_COLUMNS)
        rows = read_csv(report)
        assert Counter(r["row_type"] for r in rows) == {"query": 200, "aggregate": 2}
        for mode in ("netr", "baseline-ir"):
            ids = [int(r["query_id"]) for r in rows if r["row_type"] == "query" and r["mode"] == mode]
            assert ids == list(range(100))

    def test_sweep_k_groups_and_means(self, bundle, dataset, tmp_path, capsys):
        report = tmp_path / "k.csv"
        code, _, _ = run(capsys, "bench", "--index", bundle, "--queries", dataset / "queries.csv",
                         "--mode", "netr,baseline-ir", "--sweep", "k", "--report", report, "--jobs", "2")
        assert code == 0
        rows = read_csv(report)
        aggs = [r for r in rows if r["row_type"] == "aggregate"]
        assert {r["value"] for r in aggs} == {"1", "3", "5", "7", "9"} and len(aggs) == 10
        for a in aggs:
            group = [r for r in rows if r["row_type"] == "query" and r["mode"] == a["mode"] and r["value"] == a["value"]]
            assert len(group) == 100 and all(r["k"] == a["value"] for r in group)
            for col in ("elapsed_ms", "node_accesses", "candidates_scored", "returned"):
                assert float(a[col]) == pytest.approx(fmean(float(r[col]) for r in group), rel=1e-12, abs=1e-12)

    def test_unknown_mode(self, bundle, dataset, tmp_path, capsys):
        assert run(capsys, "bench", "--index", bundle, "--queries", dataset / "queries.csv",
                   "--mode", "fast", "--report", tmp_path / "x.csv")[0] == 1
