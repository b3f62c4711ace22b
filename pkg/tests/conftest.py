from __future__ import annotations

from datetime import datetime, timedelta, timezone

import pytest

from sentloop.ingest import Role, TweetRecord

HEADER = "tweet_id,author_id,timestamp,sentiment,retweet_count,party,role,region\n"


def corpus_bytes(*rows: str, header: str = HEADER) -> bytes:
    return (header + "".join(r + "\n" for r in rows)).encode("utf-8")


def make_record(i, author="u1", ts="2021-03-01T12:00:00Z", label=0, rt=0, party="", role=Role.UNKNOWN):
    if isinstance(ts, str):
        ts = datetime.strptime(ts, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    return TweetRecord(str(i), author, ts, label, rt, party, role, "")


@pytest.fixture
def base_time():
    return datetime(2021, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def day_offset(base_time):
    def at(days: int, seconds: int = 43200):
        return base_time + timedelta(days=days, seconds=seconds)

    return at
