"""Daily sentiment scores and engagement fractions.

``S`` on a day is the mean of that day's labels. ``r_pos`` and ``r_neg`` are
the shares of the day's retweets that went to positive and negative tweets.
By default the denominator is every retweet of the day, neutral tweets
included, so ``r_pos + r_neg <= 1``; ``denominator="exclusive"`` divides by
positive plus negative retweets only.
"""

from __future__ import annotations

import csv
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from datetime import date, timedelta
from typing import TextIO, Union

import numpy as np

from sentloop._io import fmt
from sentloop.errors import EmptySubjectError
from sentloop.ingest import TweetRecord

BUCKETS = {"day": 1, "week": 7}


@dataclass(frozen=True)
class Group:
    """All authors, optionally narrowed to one party and/or region."""

    name: str = "all"
    party: str | None = None
    region: str | None = None

    def matches(self, record: TweetRecord) -> bool:
        if self.party is not None and record.party != self.party:
            return False
        if self.region is not None and record.region != self.region:
            return False
        return True


@dataclass(frozen=True)
class Individual:
    author_id: str

    @property
    def name(self) -> str:
        return self.author_id

    def matches(self, record: TweetRecord) -> bool:
        return record.author_id == self.author_id


Subject = Union[Group, Individual]


@dataclass(frozen=True)
class DailyBucket:
    day: date
    tweets: tuple[tuple[int, int], ...]  # (sentiment label, retweet_count)

    def __post_init__(self) -> None:
        if not self.tweets:
            raise ValueError("a materialized bucket holds at least one tweet")


@dataclass(frozen=True, eq=False)
class SentimentSeries:
    subject: Subject
    days: tuple[date, ...]
    S: np.ndarray
    r_pos: np.ndarray
    r_neg: np.ndarray
    gap_mask: np.ndarray
    step: int = 1

    def __post_init__(self) -> None:
        n = len(self.days)
        for name in ("S", "r_pos", "r_neg", "gap_mask"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"{name} has length {len(arr)}, expected {n}")
            arr.setflags(write=False)
        for a, b in zip(self.days, self.days[1:]):
            if (b - a).days != self.step:
                raise ValueError(f"days not consecutive: {a} -> {b}")
        eps = 1e-12
        if np.any(np.abs(self.S) > 1 + eps):
            raise ValueError("sentiment score outside [-1, 1]")
        if np.any((self.r_pos < -eps) | (self.r_pos > 1 + eps)) or np.any(
            (self.r_neg < -eps) | (self.r_neg > 1 + eps)
        ):
            raise ValueError("engagement fraction outside [0, 1]")
        if np.any(self.r_pos + self.r_neg > 1 + eps):
            raise ValueError("r_pos + r_neg exceeds 1")

    def __len__(self) -> int:
        return len(self.days)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SentimentSeries):
            return NotImplemented
        return (
            self.subject == other.subject
            and self.days == other.days
            and self.step == other.step
            and np.array_equal(self.S, other.S)
            and np.array_equal(self.r_pos, other.r_pos)
            and np.array_equal(self.r_neg, other.r_neg)
            and np.array_equal(self.gap_mask, other.gap_mask)
        )


def bucket_key(day: date, bucket: str = "day") -> date:
    if bucket == "day":
        return day
    if bucket == "week":
        return day - timedelta(days=day.weekday())
    raise ValueError(f"unknown bucket granularity {bucket!r}")


def bucket_by_day(
    records: Iterable[TweetRecord],
    subject: Subject | Callable[[TweetRecord], bool] | None = None,
    bucket: str = "day",
) -> dict[date, DailyBucket]:
    """Group records by UTC calendar day (or ISO week start), in date order."""
    match = subject.matches if hasattr(subject, "matches") else subject
    grouped: dict[date, list[tuple[int, int]]] = {}
    for r in records:
        if match is not None and not match(r):
            continue
        grouped.setdefault(bucket_key(r.day, bucket), []).append((r.sentiment, r.retweet_count))
    return {d: DailyBucket(d, tuple(grouped[d])) for d in sorted(grouped)}


def sentiment_score(bucket: DailyBucket) -> float:
    if not bucket.tweets:
        raise ValueError("sentiment score of an empty bucket is undefined")
    return sum(label for label, _ in bucket.tweets) / len(bucket.tweets)


def engagement_fractions(bucket: DailyBucket, denominator: str = "inclusive") -> tuple[float, float]:
    if not bucket.tweets:
        raise ValueError("engagement of an empty bucket is undefined")
    pos = sum(rt for label, rt in bucket.tweets if label == 1)
    neg = sum(rt for label, rt in bucket.tweets if label == -1)
    if denominator == "inclusive":
        total = sum(rt for _, rt in bucket.tweets)
    elif denominator == "exclusive":
        total = pos + neg
    else:
        raise ValueError(f"unknown denominator {denominator!r}")
    if total == 0:
        return 0.0, 0.0
    return pos / total, neg / total


def engagement_table(
    records: Iterable[TweetRecord], denominator: str = "inclusive", bucket: str = "day"
) -> dict[date, tuple[float, float]]:
    """Per-bucket ``(r_pos, r_neg)`` of a corpus, for reuse across many subjects."""
    return {d: engagement_fractions(b, denominator) for d, b in bucket_by_day(records, None, bucket).items()}


def build_series(
    records: Iterable[TweetRecord],
    subject: Subject | None = None,
    engagement: Iterable[TweetRecord] | dict[date, tuple[float, float]] | None = None,
    denominator: str = "inclusive",
    bucket: str = "day",
) -> SentimentSeries:
    """Build the (S, r_pos, r_neg) series of one subject.

    ``S`` comes from the subject's own tweets; the engagement fractions come
    from ``engagement`` (the global corpus, defaulting to ``records``, or a
    precomputed :func:`engagement_table`), as
    individuals respond to platform-wide engagement. The series spans the
    subject's first to last active day. Silent days in between carry the
    last observed ``S`` forward and are flagged in ``gap_mask``. A day with
    no engagement tweets at all gets ``(0, 0)``.
    """
    records = list(records)
    subject = Group() if subject is None else subject
    step = BUCKETS.get(bucket)
    if step is None:
        raise ValueError(f"unknown bucket granularity {bucket!r}")

    own = bucket_by_day(records, subject, bucket)
    if not own:
        raise EmptySubjectError(f"empty subject series: {subject.name!r} has no tweets")
    if isinstance(engagement, dict):
        table = engagement
    else:
        table = engagement_table(records if engagement is None else engagement, denominator, bucket)

    first, last = next(iter(own)), next(reversed(own))
    n = (last - first).days // step + 1
    days = tuple(first + timedelta(days=i * step) for i in range(n))
    S = np.empty(n)
    r_pos = np.zeros(n)
    r_neg = np.zeros(n)
    gap = np.zeros(n, dtype=bool)
    for i, d in enumerate(days):
        if d in own:
            S[i] = sentiment_score(own[d])
        else:
            S[i] = S[i - 1]
            gap[i] = True
        if d in table:
            r_pos[i], r_neg[i] = table[d]
    return SentimentSeries(subject, days, S, r_pos, r_neg, gap, step)


def write_series_csv(series: SentimentSeries, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["day", "S", "r_pos", "r_neg", "gap"])
    for i, d in enumerate(series.days):
        writer.writerow(
            [
                d.isoformat(),
                fmt(series.S[i]),
                fmt(series.r_pos[i]),
                fmt(series.r_neg[i]),
                int(series.gap_mask[i]),
            ]
        )
