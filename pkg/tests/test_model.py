import math
from datetime import datetime

import pytest
from hypothesis import given
from hypothesis import strategies as st

from netr.errors import DataError
from netr.geo import GeoPoint
from netr.model import (
    Corpus,
    SpatialObject,
    build_time_distribution,
    compute_tfidf,
    ingest,
    interval_of,
    parse_keywords,
)


def _ts(hour, minute=0):
    return datetime(2010, 5, 1, hour, minute)


class TestTimeDistribution:
    def test_ratios(self):
        dist = build_time_distribution([_ts(20), _ts(20), _ts(21), _ts(23)], 24)
        assert dist[20] == 0.5 and dist[21] == 0.25 and dist[23] == 0.25
        assert sum(dist) == 1.0
        assert all(dist[h] == 0 for h in range(24) if h not in (20, 21, 23))

    def test_single(self):
        assert build_time_distribution([_ts(9)], 24)[9] == 1.0

    def test_empty(self):
        assert build_time_distribution([], 24) == (0.0,) * 24

    def test_six_intervals(self):
        # four-hour buckets
        dist = build_time_distribution([_ts(3, 59), _ts(4), _ts(23, 59)], 6)
        assert dist == pytest.approx((1 / 3, 1 / 3, 0, 0, 0, 1 / 3))

    def test_bad_interval_count(self):
        with pytest.raises(ValueError):
            build_time_distribution([], 0)

    @given(st.lists(st.tuples(st.integers(0, 23), st.integers(0, 59)), min_size=1, max_size=60), st.randoms())
    def test_normalized_and_permutation_invariant(self, stamps, rnd):
        ts = [_ts(h, m) for h, m in stamps]
        dist = build_time_distribution(ts, 24)
        assert abs(sum(dist) - 1.0) <= 1e-9
        shuffled = list(ts)
        rnd.shuffle(shuffled)
        assert build_time_distribution(shuffled, 24) == dist

    @given(st.integers(0, 23), st.integers(0, 59), st.sampled_from([1, 2, 3, 4, 6, 8, 12, 24, 7]))
    def test_interval_in_range(self, h, m, n):
        assert 0 <= interval_of(_ts(h, m), n) < n


def _corpus(term_lists):
    objs = [
        SpatialObject(i, f"o{i}", GeoPoint(0, 0), "c", dict(terms)) for i, terms in enumerate(term_lists)
    ]
    return compute_tfidf(Corpus(objs, 24, ("c",)))


class TestTfIdf:
    def test_everywhere_keyword_has_zero_weight(self):
        c = _corpus([{"a": 1}, {"a": 2, "b": 1}, {"a": 5}])
        assert all(o.keywords["a"] == 0.0 for o in c.objects)

    def test_unique_keyword(self):
        terms = [{"x": 1}] + [{"filler": 1}] * 99
        c = _corpus(terms)
        assert c.objects[0].keywords["x"] == pytest.approx(4.605170185988092, abs=1e-12)
        assert c.phi_max == c.objects[0].keywords["x"]

    def test_single_object(self):
        c = _corpus([{"a": 3, "b": 1}])
        assert c.phi_max == 0.0
        assert set(c.objects[0].keywords.values()) == {0.0}

    def test_empty_keywords_allowed(self):
        c = _corpus([{}, {"a": 1}])
        assert c.objects[0].keywords == {}
        assert c.phi_max == pytest.approx(math.log(2))

    @given(st.lists(st.dictionaries(st.sampled_from("abcdefg"), st.integers(1, 5), max_size=5), min_size=1, max_size=12))
    def test_nonnegative_and_exact_max(self, terms):
        c = _corpus(terms)
        weights = [w for o in c.objects for w in o.keywords.values()]
        assert all(w >= 0 for w in weights)
        assert c.phi_max == max(weights, default=0.0)
        for w, df in c.doc_freq.items():
            assert df >= 1


def test_parse_keywords():
    assert parse_keywords("bar|jazz:3| wine :2|bar") == {"bar": 2, "jazz": 3, "wine": 2}
    assert parse_keywords("") == {}


def _write(tmp_path, objects, checkins="user_id,object_id,timestamp\n", friends="user_a,user_b\n"):
    paths = []
    for name, body in (("objects.csv", objects), ("checkins.csv", checkins), ("friends.csv", friends)):
        p = tmp_path / name
        p.write_text(body)
        paths.append(p)
    return paths


OBJECTS = "id,lat,lon,category,keywords\n2,40.0,-74.0,bar,beer|jazz:2\n10,40.1,-74.1,cafe,coffee\n1,40.2,-74.2,bar,beer\n"


class TestIngest:
    def test_empty_checkins(self, tmp_path):
        corpus, checkins, edges = ingest(*_write(tmp_path, OBJECTS))
        assert checkins == [] and edges == []
        assert all(o.time_dist == (0.0,) * 24 and o.total_checkins == 0 for o in corpus.objects)

    def test_numeric_id_order(self, tmp_path):
        corpus, _, _ = ingest(*_write(tmp_path, OBJECTS))
        assert [o.id for o in corpus.objects] == ["1", "2", "10"]
        assert [o.idx for o in corpus.objects] == [0, 1, 2]

    def test_count_conservation(self, tmp_path):
        ck = "user_id,object_id,timestamp\n" + "\n".join(
            f"u{i % 2},{oid},2010-05-01T{h:02d}:13:00" for i, (oid, h) in enumerate(
                [("1", 20), ("2", 20), ("2", 21), ("10", 9), ("1", 23)])
        ) + "\n"
        corpus, checkins, _ = ingest(*_write(tmp_path, OBJECTS, ck, "user_a,user_b\nu1,u0\nu0,u1\n"))
        assert sum(o.total_checkins for o in corpus.objects) == 5 == len(checkins)
        assert corpus.by_id["2"].time_dist[20] == 0.5

    def test_friends_deduplicated(self, tmp_path):
        _, _, edges = ingest(*_write(tmp_path, OBJECTS, friends="user_a,user_b\nb,a\na,b\nc,a\n"))
        assert edges == [("a", "b"), ("a", "c")]

    def test_latitude_out_of_range(self, tmp_path):
        bad = "id,lat,lon,category,keywords\n1,91,0,bar,beer\n"
        with pytest.raises(DataError, match=r"objects.csv:2: field 'lat'"):
            ingest(*_write(tmp_path, bad))

    def test_unknown_object(self, tmp_path):
        ck = "user_id,object_id,timestamp\nu1,99,2010-05-01T20:00:00\n"
        with pytest.raises(DataError, match="'99'"):
            ingest(*_write(tmp_path, OBJECTS, ck))

    def test_bad_timestamp(self, tmp_path):
        ck = "user_id,object_id,timestamp\nu1,1,yesterday\n"
        with pytest.raises(DataError, match=r"checkins.csv:2: field 'timestamp'"):
            ingest(*_write(tmp_path, OBJECTS, ck))

    def test_missing_column(self, tmp_path):
        with pytest.raises(DataError, match="keywords"):
            ingest(*_write(tmp_path, "id,lat,lon,category\n1,0,0,bar\n"))

    def test_deterministic(self, small_data):
        a = ingest(small_data["objects"], small_data["checkins"], small_data["friends"])
        b = ingest(small_data["objects"], small_data["checkins"], small_data["friends"])
        assert [vars(o) for o in a[0].objects] == [vars(o) for o in b[0].objects]
        assert a[1] == b[1] and a[2] == b[2]

    def test_distributions_sum_to_one(self, small_data):
        corpus, _, _ = ingest(small_data["objects"], small_data["checkins"], small_data["friends"])
        for o in corpus.objects:
            if o.total_checkins:
                assert abs(sum(o.time_dist) - 1.0) <= 1e-9
            else:
                assert not any(o.time_dist)
