"""Parsing and validation of labeled-tweet CSV corpora.

Expected header (extra columns are ignored with a warning)::

    tweet_id,author_id,timestamp,sentiment,retweet_count,party,role,region

An optional ``is_retweet`` column is understood; rows flagged as retweets
are rejected because only original tweets carry an author's own sentiment.
"""

from __future__ import annotations

import csv
import io
import logging
import os
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from typing import BinaryIO, TextIO, Union

from sentloop.errors import EmptyInputError, SchemaError

logger = logging.getLogger(__name__)

COLUMNS = (
    "tweet_id",
    "author_id",
    "timestamp",
    "sentiment",
    "retweet_count",
    "party",
    "role",
    "region",
)
OPTIONAL_COLUMNS = ("is_retweet",)
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

NUMERIC_LABELS = {"-1": -1, "0": 0, "1": 1, "+1": 1}
WORD_LABELS = {"negative": -1, "neutral": 0, "positive": 1}
_WORD_FOR_LABEL = {v: k for k, v in WORD_LABELS.items()}

_TRUTHY = {"1", "true", "yes", "y", "t"}
_FALSY = {"0", "false", "no", "n", "f", ""}


class Role(str, Enum):
    GOVERNMENT = "government"
    OPPOSITION = "opposition"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    author_id: str
    timestamp: datetime
    sentiment: int
    retweet_count: int
    party: str = ""
    role: Role = Role.UNKNOWN
    region: str = ""

    def __post_init__(self) -> None:
        if self.sentiment not in (-1, 0, 1):
            raise ValueError(f"sentiment label out of range: {self.sentiment!r}")
        if self.retweet_count < 0:
            raise ValueError(f"negative retweet count: {self.retweet_count}")
        if self.timestamp.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")

    @property
    def day(self) -> date:
        """UTC calendar day of the tweet."""
        return self.timestamp.astimezone(timezone.utc).date()


@dataclass(frozen=True)
class CorpusMeta:
    record_count: int
    author_count: int
    date_range: tuple[date, date] | None
    rejected_count: int
    rejection_log: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    @property
    def total_rows(self) -> int:
        return self.record_count + self.rejected_count


class RowRejected(ValueError):
    pass


Source = Union[bytes, str, os.PathLike, BinaryIO, TextIO]


def _open_text(source: Source) -> io.TextIOBase:
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"), newline="")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return io.StringIO(fh.read().decode("utf-8"), newline="")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data, newline="")


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise RowRejected(f"unparseable timestamp {text!r}") from exc


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def _parse_label(text: str, vocabulary: str) -> int:
    token = text.strip()
    if vocabulary == "word":
        try:
            return WORD_LABELS[token.lower()]
        except KeyError:
            raise RowRejected("label out of range") from None
    if token in NUMERIC_LABELS:
        return NUMERIC_LABELS[token]
    try:
        int(token)
    except ValueError:
        raise RowRejected(f"unparseable label {token!r}") from None
    raise RowRejected("label out of range")


def _parse_row(row: dict[str, str], vocabulary: str) -> TweetRecord:
    tweet_id = row["tweet_id"].strip()
    author_id = row["author_id"].strip()
    if not tweet_id:
        raise RowRejected("empty tweet_id")
    if not author_id:
        raise RowRejected("empty author_id")
    if "is_retweet" in row:
        flag = row["is_retweet"].strip().lower()
        if flag in _TRUTHY:
            raise RowRejected("retweet rows are not accepted")
        if flag not in _FALSY:
            raise RowRejected(f"unparseable is_retweet flag {flag!r}")
    ts = parse_timestamp(row["timestamp"].strip())
    sentiment = _parse_label(row["sentiment"], vocabulary)
    try:
        retweets = int(row["retweet_count"].strip())
    except ValueError:
        raise RowRejected(f"unparseable retweet_count {row['retweet_count']!r}") from None
    if retweets < 0:
        raise RowRejected("negative retweet count")
    role_text = row["role"].strip().lower() or Role.UNKNOWN.value
    try:
        role = Role(role_text)
    except ValueError:
        raise RowRejected(f"unknown role {row['role']!r}") from None
    return TweetRecord(
        tweet_id=tweet_id,
        author_id=author_id,
        timestamp=ts,
        sentiment=sentiment,
        retweet_count=retweets,
        party=row["party"].strip(),
        role=role,
        region=row["region"].strip(),
    )


def parse_corpus(
    source: Source, delimiter: str = ",", vocabulary: str = "numeric"
) -> tuple[list[TweetRecord], CorpusMeta]:
    """Parse a labeled-tweet corpus.

    Parameters
    ----------
    source : bytes, path, or file object
        UTF-8 CSV text with a header row.
    delimiter : str
        Field delimiter.
    vocabulary : {"numeric", "word"}
        Whether sentiment labels are written as ``-1/0/1`` or as
        ``negative/neutral/positive``.

    Returns
    -------
    records : list of TweetRecord
        Valid rows, in input order.
    meta : CorpusMeta
        Counts and the per-row rejection log.

    Raises
    ------
    EmptyInputError
        If there is no header row at all.
    SchemaError
        If a required column is missing from the header.
    """
    if vocabulary not in ("numeric", "word"):
        raise ValueError(f"unknown label vocabulary {vocabulary!r}")
    text = _open_text(source)
    reader = csv.reader(text, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInputError("empty input: no header row") from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"missing required columns {missing}; header was {header}")
    extra = [c for c in header if c not in COLUMNS and c not in OPTIONAL_COLUMNS]
    if extra:
        logger.warning("ignoring unknown columns %s", extra)

    records: list[TweetRecord] = []
    rejections: list[tuple[int, str]] = []
    for values in reader:
        line = reader.line_num
        if not values:
            # blank physical line; csv yields [] and it is not a data row
            continue
        if len(values) != len(header):
            rejections.append((line, f"expected {len(header)} fields, got {len(values)}"))
            continue
        try:
            records.append(_parse_row(dict(zip(header, values)), vocabulary))
        except RowRejected as exc:
            rejections.append((line, str(exc)))

    days = [r.day for r in records]
    meta = CorpusMeta(
        record_count=len(records),
        author_count=len({r.author_id for r in records}),
        date_range=(min(days), max(days)) if days else None,
        rejected_count=len(rejections),
        rejection_log=tuple(rejections),
    )
    return records, meta


def write_corpus(records: Iterable[TweetRecord], stream: TextIO, vocabulary: str = "numeric") -> None:
    """Write records in the corpus schema (inverse of :func:`parse_corpus`)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for r in records:
        label = _WORD_FOR_LABEL[r.sentiment] if vocabulary == "word" else str(r.sentiment)
        writer.writerow(
            [
                r.tweet_id,
                r.author_id,
                format_timestamp(r.timestamp),
                label,
                r.retweet_count,
                r.party,
                r.role.value,
                r.region,
            ]
        )


def days_in(period: tuple[date, date]) -> list[date]:
    start, end = period
    return [start + timedelta(days=i) for i in range((end - start).days + 1)]


def filter_active_authors(
    records: Iterable[TweetRecord], period: tuple[date, date], threshold: float = 0.9
) -> set[str]:
    """Authors who tweeted on strictly more than ``threshold`` of the days in ``period``.

    ``period`` is an inclusive ``(first_day, last_day)`` pair of UTC dates.
    """
    if not 0 < threshold <= 1:
        raise ValueError(f"threshold must lie in (0, 1], got {threshold}")
    start, end = period
    if end < start:
        raise ValueError("empty period")
    n_days = (end - start).days + 1
    active_days: dict[str, set[date]] = defaultdict(set)
    for r in records:
        d = r.day
        if start <= d <= end:
            active_days[r.author_id].add(d)
    return {a for a, ds in active_days.items() if len(ds) / n_days > threshold}
