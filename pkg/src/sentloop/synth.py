"""Synthetic labeled corpora whose daily aggregates follow known dynamics.

Every author posts ``tweets_per_day`` tweets a day. Engagement shares are
drawn exogenously and realized through retweet counts; each author's next
daily score follows ``alpha*S + beta*r_pos + gamma*r_neg + noise`` and is
realized as a mix of labels. Labels only express multiples of
``1/tweets_per_day``; with a single author the rounding error is pushed
into that day's engagement share so the recurrence holds to within
retweet-count resolution. With several authors it acts as extra noise.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta, timezone

import numpy as np

from sentloop.ingest import Role, TweetRecord
from sentloop.regression import random_engagement

TOTAL_RETWEETS = 10**8


@dataclass(frozen=True)
class AuthorSpec:
    author_id: str
    alpha: float
    beta: float
    gamma: float
    party: str = ""
    role: Role = Role.UNKNOWN
    region: str = ""


def _composition(m: int, n: int) -> tuple[int, int, int]:
    """(positive, neutral, negative) counts with ``pos - neg == m``, each >= 1."""
    pos = max(m, 0) + 1
    neg = max(-m, 0) + 1
    return pos, n - pos - neg, neg


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (i < extra) for i in range(parts)]


def synthesize_corpus(
    authors: Sequence[AuthorSpec],
    days: int,
    noise: float,
    seed: int,
    tweets_per_day: int = 20,
    start: date = date(2021, 1, 1),
) -> tuple[list[TweetRecord], dict]:
    """Generate records plus a ground-truth dictionary.

    Scores are confined to ``|S| <= (n - 3)/n`` (n = tweets per day) so that
    every day carries at least one tweet of each label.
    """
    if days < 10:
        raise ValueError("days must be >= 10")
    if not authors:
        raise ValueError("at least one author required")
    if tweets_per_day < 4:
        raise ValueError("tweets_per_day must be >= 4")
    if noise < 0:
        raise ValueError("noise must be non-negative")
    n = tweets_per_day
    m_max = n - 3
    rng = np.random.default_rng(seed)
    r_pos, r_neg = random_engagement(days, rng)
    w = rng.normal(0.0, noise, size=(len(authors), days)) if noise > 0 else np.zeros((len(authors), days))

    m = np.zeros((len(authors), days), dtype=np.int64)
    realized_pos = np.zeros(days, dtype=np.int64)
    realized_neg = np.zeros(days, dtype=np.int64)
    for t in range(days):
        rp, rn = r_pos[t], r_neg[t]
        if t + 1 < days:
            targets = []
            for i, a in enumerate(authors):
                s = m[i, t] / n
                target = a.alpha * s + a.beta * rp + a.gamma * rn + w[i, t]
                m[i, t + 1] = int(np.clip(np.rint(target * n), -m_max, m_max))
                targets.append(target)
            if len(authors) == 1:
                rp, rn = _absorb(authors[0], m[0, t + 1] / n - targets[0], rp, rn)
        realized_pos[t] = int(round(rp * TOTAL_RETWEETS))
        realized_neg[t] = int(round(rn * TOTAL_RETWEETS))

    records: list[TweetRecord] = []
    spacing = 36000 // n
    for t in range(days):
        day0 = datetime(start.year, start.month, start.day, 8, tzinfo=timezone.utc) + timedelta(days=t)
        comps = [_composition(int(m[i, t]), n) for i in range(len(authors))]
        pos_rt = _split(int(realized_pos[t]), sum(c[0] for c in comps))
        neg_rt = _split(int(realized_neg[t]), sum(c[2] for c in comps))
        neu_rt = _split(TOTAL_RETWEETS - int(realized_pos[t]) - int(realized_neg[t]), sum(c[1] for c in comps))
        for i, a in enumerate(authors):
            n_pos, n_neu, _ = comps[i]
            labels = [1] * n_pos + [0] * n_neu + [-1] * (n - n_pos - n_neu)
            for j, label in enumerate(labels):
                pool = pos_rt if label == 1 else neg_rt if label == -1 else neu_rt
                records.append(
                    TweetRecord(
                        tweet_id=f"{a.author_id}-{t:05d}-{j:03d}",
                        author_id=a.author_id,
                        timestamp=day0 + timedelta(seconds=j * spacing),
                        sentiment=label,
                        retweet_count=pool.pop(),
                        party=a.party,
                        role=a.role,
                        region=a.region,
                    )
                )

    truth = {
        "days": days,
        "noise": noise,
        "seed": seed,
        "tweets_per_day": n,
        "start": start.isoformat(),
        "authors": [
            {**asdict(a), "role": a.role.value, "delta": a.beta - a.gamma} for a in authors
        ],
    }
    if len({(a.alpha, a.beta, a.gamma) for a in authors}) == 1:
        truth = {"alpha": authors[0].alpha, "beta": authors[0].beta, "gamma": authors[0].gamma, **truth}
    return records, truth


def _absorb(author: AuthorSpec, err: float, rp: float, rn: float) -> tuple[float, float]:
    """Move the rounding error ``err`` into whichever engagement share has the larger coefficient."""
    if abs(author.beta) >= abs(author.gamma) and author.beta != 0:
        rp2, rn2 = rp + err / author.beta, rn
    elif author.gamma != 0:
        rp2, rn2 = rp, rn + err / author.gamma
    else:
        return rp, rn
    if rp2 < 0 or rn2 < 0 or rp2 + rn2 > 1:
        return rp, rn
    return rp2, rn2


def make_authors(
    n_authors: int,
    alpha: float,
    beta: float,
    gamma: float,
    parties: Sequence[tuple[str, Role]] = (),
    beta_offsets: Sequence[float] = (),
    spread: float = 0.0,
    seed: int = 0,
) -> list[AuthorSpec]:
    """Author specs assigned round-robin to ``parties``.

    Party ``p`` gets ``beta + beta_offsets[p]``; ``spread`` adds per-author
    Gaussian jitter to beta and gamma.
    """
    rng = np.random.default_rng([seed, 1])
    out = []
    width = len(str(n_authors))
    for i in range(n_authors):
        b, g = beta, gamma
        party, role = ("", Role.UNKNOWN)
        if parties:
            p = i % len(parties)
            party, role = parties[p]
            if beta_offsets:
                b += beta_offsets[p]
        if spread > 0:
            b += rng.normal(0, spread)
            g += rng.normal(0, spread)
        out.append(AuthorSpec(f"a{i:0{width}d}", alpha, b, g, party, role))
    return out
