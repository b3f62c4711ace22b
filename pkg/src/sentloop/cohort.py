"""Per-author fits, feedback-asymmetry z-scores, and party/role summaries."""

from __future__ import annotations

import csv
import logging
import os
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from sentloop._io import fmt
from sentloop.errors import DataError, DegeneratePopulationError, SentloopError
from sentloop.ingest import Role, TweetRecord
from sentloop.regression import FitResult, build_design, fit_linear
from sentloop.series import Individual, build_series, engagement_table

logger = logging.getLogger(__name__)

DEFAULT_MIN_OBS = 30


@dataclass(frozen=True)
class IndividualFit:
    author_id: str
    party: str
    role: Role
    fit: FitResult

    @property
    def n_obs(self) -> int:
        return self.fit.n_obs

    @property
    def delta(self) -> float:
        """Positive-minus-negative feedback sensitivity."""
        return self.fit.beta - self.fit.gamma


@dataclass(frozen=True)
class Skipped:
    author_id: str
    reason: str
    n_rows: int


@dataclass(frozen=True)
class AuthorScore:
    author_id: str
    party: str
    role: Role
    alpha: float
    beta: float
    gamma: float
    delta: float
    z: float


@dataclass(frozen=True)
class GroupStats:
    key: str
    n: int
    mean_z: float
    median_z: float
    iqr_z: float


@dataclass(frozen=True)
class ZScoreReport:
    authors: tuple[AuthorScore, ...]
    mu_delta: float
    sigma_delta: float
    n: int
    parties: tuple[GroupStats, ...]
    roles: tuple[GroupStats, ...]

    def to_dict(self) -> dict:
        return {
            "population": {"mu_delta": self.mu_delta, "sigma_delta": self.sigma_delta, "n": self.n},
            "authors": [
                {
                    "author_id": a.author_id,
                    "party": a.party,
                    "role": a.role.value,
                    "alpha": a.alpha,
                    "beta": a.beta,
                    "gamma": a.gamma,
                    "delta": a.delta,
                    "z": a.z,
                }
                for a in self.authors
            ],
            "parties": [_stats_dict(g, "party") for g in self.parties],
            "roles": [_stats_dict(g, "role") for g in self.roles],
        }


def _stats_dict(g: GroupStats, key: str) -> dict:
    return {key: g.key, "n": g.n, "mean_z": g.mean_z, "median_z": g.median_z, "iqr_z": g.iqr_z}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SENTLOOP_THREADS", "1")))
    except ValueError:
        return 1


def fit_all_individuals(
    records: Sequence[TweetRecord],
    active_set: Iterable[str],
    min_obs: int = DEFAULT_MIN_OBS,
    drop_gaps: bool = True,
    denominator: str = "inclusive",
    bucket: str = "day",
) -> tuple[list[IndividualFit], list[Skipped]]:
    """Fit the one-step predictor for every active author.

    Each author's own daily score is regressed on its lag and on the
    corpus-wide engagement fractions. Authors with fewer than ``min_obs``
    usable rows, or whose fit fails, land in the skipped list.
    Results are sorted by author id whatever the execution order.
    """
    if min_obs < 10:
        raise ValueError("min_obs must be at least 10")
    authors = sorted(set(active_set))
    if not authors:
        raise DataError("empty active set")
    records = list(records)
    table = engagement_table(records, denominator, bucket)
    own: dict[str, list[TweetRecord]] = {}
    for r in records:
        own.setdefault(r.author_id, []).append(r)

    def one(author: str) -> IndividualFit | Skipped:
        try:
            series = build_series(own.get(author, []), Individual(author), table, denominator, bucket)
            design = build_design(series, drop_gaps=drop_gaps, min_rows=1)
        except SentloopError as exc:
            return Skipped(author, str(exc), 0)
        if len(design) < min_obs:
            return Skipped(author, f"{len(design)} usable rows < min_obs {min_obs}", len(design))
        try:
            fit = fit_linear(design)
        except SentloopError as exc:
            return Skipped(author, str(exc), len(design))
        m = own[author][0]
        return IndividualFit(author, m.party, m.role, fit)

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(one, authors))
    fits = [r for r in results if isinstance(r, IndividualFit)]
    skipped = [r for r in results if isinstance(r, Skipped)]
    if fits:
        med = float(np.median([f.fit.alpha for f in fits]))
        if med <= 0:
            logger.warning("median persistence coefficient is %.3g <= 0 across fitted authors", med)
    return fits, skipped


def _summary(key: str, z: np.ndarray) -> GroupStats:
    q1, med, q3 = np.percentile(z, [25, 50, 75])
    return GroupStats(key, len(z), float(z.mean()), float(med), float(q3 - q1))


def zscores(fits: Sequence[IndividualFit]) -> ZScoreReport:
    """Standardize ``delta = beta - gamma`` over all fitted authors.

    Uses the sample mean and the n-1 sample standard deviation.
    """
    if len(fits) < 2:
        raise DegeneratePopulationError(f"degenerate population: {len(fits)} fitted author(s), need 2")
    fits = sorted(fits, key=lambda f: f.author_id)
    delta = np.array([f.delta for f in fits])
    mu = float(delta.mean())
    sigma = float(delta.std(ddof=1))
    if not sigma > 0:
        raise DegeneratePopulationError("degenerate population: all deltas are equal")
    z = (delta - mu) / sigma
    authors = tuple(
        AuthorScore(f.author_id, f.party, f.role, f.fit.alpha, f.fit.beta, f.fit.gamma, float(d), float(zi))
        for f, d, zi in zip(fits, delta, z)
    )
    return ZScoreReport(
        authors=authors,
        mu_delta=mu,
        sigma_delta=sigma,
        n=len(fits),
        parties=_group(authors, lambda a: a.party),
        roles=_group(authors, lambda a: a.role.value),
    )


def _group(authors: Sequence[AuthorScore], key) -> tuple[GroupStats, ...]:
    buckets: dict[str, list[float]] = {}
    for a in authors:
        buckets.setdefault(key(a), []).append(a.z)
    return tuple(_summary(k, np.array(v)) for k, v in sorted(buckets.items()))


def aggregate_by_party(report: ZScoreReport, min_group: int = 100) -> list[GroupStats]:
    """Party rows with at least ``min_group`` members, highest mean z first.

    Small parties still contribute to the population mean and deviation;
    they are only hidden from this table.
    """
    if min_group < 1:
        raise ValueError("min_group must be >= 1")
    kept = [g for g in report.parties if g.n >= min_group]
    return sorted(kept, key=lambda g: (-g.mean_z, g.key))


def write_individuals_csv(report: ZScoreReport, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["author_id", "party", "role", "alpha", "beta", "gamma", "delta", "z"])
    for a in report.authors:
        w.writerow([a.author_id, a.party, a.role.value, fmt(a.alpha), fmt(a.beta), fmt(a.gamma), fmt(a.delta), fmt(a.z)])


def write_parties_csv(parties: Sequence[GroupStats], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["party", "n", "mean_z", "median_z", "iqr_z"])
    for g in parties:
        w.writerow([g.key, g.n, fmt(g.mean_z), fmt(g.median_z), fmt(g.iqr_z)])


def write_skipped_csv(skipped: Sequence[Skipped], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["author_id", "n_rows", "reason"])
    for s in skipped:
        w.writerow([s.author_id, s.n_rows, s.reason])
