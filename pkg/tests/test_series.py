from __future__ import annotations

import io
import math
import random
from datetime import date, datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentloop.errors import EmptySubjectError
from sentloop.series import (
    DailyBucket,
    Group,
    Individual,
    bucket_by_day,
    build_series,
    engagement_fractions,
    sentiment_score,
    write_series_csv,
)

from conftest import make_record


def test_two_records_same_day_one_bucket():
    recs = [make_record(1, ts="2021-03-01T08:00:00Z"), make_record(2, ts="2021-03-01T20:00:00Z")]
    buckets = bucket_by_day(recs)
    assert list(buckets) == [date(2021, 3, 1)]
    assert len(buckets[date(2021, 3, 1)].tweets) == 2


def test_midnight_boundary_two_buckets():
    recs = [make_record(1, ts="2021-03-01T23:59:59Z"), make_record(2, ts="2021-03-02T00:00:01Z")]
    assert list(bucket_by_day(recs)) == [date(2021, 3, 1), date(2021, 3, 2)]


def test_empty_input_empty_map():
    assert bucket_by_day([]) == {}


def test_bucket_counts_match_string_grouping():
    rng = random.Random(5)
    t0 = datetime(2021, 1, 1, tzinfo=timezone.utc)
    recs = [make_record(i, ts=t0 + timedelta(seconds=rng.randrange(0, 40 * 86400))) for i in range(1000)]
    expected: dict[str, int] = {}
    for r in recs:
        key = r.timestamp.strftime("%Y-%m-%d")
        expected[key] = expected.get(key, 0) + 1
    got = {d.isoformat(): len(b.tweets) for d, b in bucket_by_day(recs).items()}
    assert got == expected
    assert list(got) == sorted(got)


def test_weekly_buckets_start_monday():
    recs = [make_record(1, ts="2021-03-03T10:00:00Z"), make_record(2, ts="2021-03-07T10:00:00Z"),
            make_record(3, ts="2021-03-08T10:00:00Z")]
    assert list(bucket_by_day(recs, bucket="week")) == [date(2021, 3, 1), date(2021, 3, 8)]


def _bucket(*tweets):
    return DailyBucket(date(2021, 1, 1), tuple(tweets))


def test_score_all_neutral():
    assert sentiment_score(_bucket((0, 1), (0, 2), (0, 3))) == 0.0


def test_score_mean():
    assert sentiment_score(_bucket((1, 0), (1, 0), (-1, 0))) == pytest.approx(1 / 3, abs=1e-15)


def test_score_matches_shuffled_summation():
    rng = random.Random(2)
    labels = [rng.choice((-1, 0, 1)) for _ in range(500)]
    b = _bucket(*[(lab, 0) for lab in labels])
    shuffled = labels[:]
    rng.shuffle(shuffled)
    assert abs(sentiment_score(b) - math.fsum(shuffled) / 500) < 1e-12


def test_empty_bucket_is_domain_error():
    with pytest.raises(ValueError):
        DailyBucket(date(2021, 1, 1), ())


def test_engagement_arithmetic():
    assert engagement_fractions(_bucket((1, 30), (-1, 10), (0, 60))) == pytest.approx((0.3, 0.1))


def test_engagement_zero_retweets():
    assert engagement_fractions(_bucket((1, 0), (-1, 0))) == (0.0, 0.0)


def test_engagement_exclusive_denominator():
    assert engagement_fractions(_bucket((1, 30), (-1, 10), (0, 60)), "exclusive") == pytest.approx((0.75, 0.25))


def test_engagement_matches_tally():
    rng = random.Random(9)
    tweets = [(rng.choice((-1, 0, 1)), rng.randrange(0, 500)) for _ in range(50)]
    tally = {-1: 0, 0: 0, 1: 0}
    for lab, rt in tweets:
        tally[lab] += rt
    total = sum(tally.values())
    rp, rn = engagement_fractions(_bucket(*tweets))
    assert rp == pytest.approx(tally[1] / total, rel=1e-15)
    assert rn == pytest.approx(tally[-1] / total, rel=1e-15)


def test_all_authors_single_day():
    recs = [make_record(1, "a", label=1, rt=3), make_record(2, "b", label=-1, rt=1)]
    s = build_series(recs, Group())
    assert len(s) == 1
    assert not s.gap_mask.any()
    assert s.S[0] == 0.0
    assert (s.r_pos[0], s.r_neg[0]) == (0.75, 0.25)


def test_individual_gap_carry_forward():
    recs = [
        make_record(1, "me", "2021-03-01T10:00:00Z", 1, 4),
        make_record(2, "other", "2021-03-01T11:00:00Z", -1, 4),
        make_record(3, "other", "2021-03-02T10:00:00Z", -1, 10),
        make_record(4, "me", "2021-03-03T10:00:00Z", -1, 2),
        make_record(5, "other", "2021-03-03T10:00:00Z", 0, 2),
    ]
    s = build_series(recs, Individual("me"), recs)
    assert s.days == (date(2021, 3, 1), date(2021, 3, 2), date(2021, 3, 3))
    assert list(s.S) == [1.0, 1.0, -1.0]
    assert list(s.gap_mask) == [False, True, False]
    # engagement stays global even on the individual's silent day
    assert (s.r_pos[1], s.r_neg[1]) == (0.0, 1.0)
    assert (s.r_pos[0], s.r_neg[0]) == (0.5, 0.5)


def test_leading_and_trailing_silence_trimmed():
    recs = [
        make_record(1, "other", "2021-03-01T10:00:00Z", 0, 1),
        make_record(2, "me", "2021-03-02T10:00:00Z", 1, 1),
        make_record(3, "other", "2021-03-04T10:00:00Z", 0, 1),
    ]
    s = build_series(recs, Individual("me"))
    assert s.days == (date(2021, 3, 2),)


def test_empty_subject_errors():
    with pytest.raises(EmptySubjectError, match="empty subject series"):
        build_series([make_record(1, "a")], Individual("zzz"))


def test_party_group_filter():
    recs = [make_record(1, "a", label=1, party="X"), make_record(2, "b", label=-1, party="Y")]
    assert build_series(recs, Group("X", party="X")).S[0] == 1.0


def _synthetic_corpus(seed, n_days=15, n_authors=6):
    rng = random.Random(seed)
    recs = []
    i = 0
    for d in range(n_days):
        for a in range(n_authors):
            for _ in range(rng.randint(0, 4)):
                recs.append(make_record(i, f"u{a}", f"2021-02-{d + 1:02d}T{rng.randint(0, 23):02d}:00:00Z",
                                        rng.choice((-1, 0, 1)), rng.randint(0, 50)))
                i += 1
    return recs


def test_group_series_matches_brute_force_per_day():
    recs = _synthetic_corpus(3)
    s = build_series(recs)
    for i, d in enumerate(s.days):
        day = [r for r in recs if r.timestamp.date() == d]
        if not day:
            assert s.gap_mask[i]
            continue
        n_pos = sum(r.sentiment == 1 for r in day)
        n_neg = sum(r.sentiment == -1 for r in day)
        assert s.S[i] == pytest.approx((n_pos - n_neg) / len(day), abs=1e-15)
        total = sum(r.retweet_count for r in day)
        if total:
            assert s.r_pos[i] == pytest.approx(sum(r.retweet_count for r in day if r.sentiment == 1) / total)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_series_invariants_and_order_invariance(seed, rnd):
    recs = _synthetic_corpus(seed, n_days=8, n_authors=3)
    if not recs:
        return
    s = build_series(recs)
    assert np.all(np.abs(s.S) <= 1)
    assert np.all(s.r_pos + s.r_neg <= 1 + 1e-12)
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    assert build_series(shuffled) == s
    author = recs[0].author_id
    assert build_series(shuffled, Individual(author)) == build_series(recs, Individual(author))


def test_series_csv_export():
    recs = [make_record(1, "a", "2021-03-01T10:00:00Z", 1, 3), make_record(2, "a", "2021-03-03T10:00:00Z", 0, 0)]
    buf = io.StringIO()
    write_series_csv(build_series(recs), buf)
    assert buf.getvalue().splitlines() == [
        "day,S,r_pos,r_neg,gap",
        "2021-03-01,1,1,0,0",
        "2021-03-02,1,0,0,1",
        "2021-03-03,0,0,0,0",
    ]
