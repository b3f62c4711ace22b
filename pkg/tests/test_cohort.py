from __future__ import annotations

import io
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sentloop.cohort import (
    GroupStats,
    IndividualFit,
    ZScoreReport,
    aggregate_by_party,
    fit_all_individuals,
    write_parties_csv,
    zscores,
)
from sentloop.errors import DegeneratePopulationError
from sentloop.ingest import Role
from sentloop.regression import FitResult
from sentloop.synth import AuthorSpec, make_authors, synthesize_corpus


def _fit(author, beta, gamma, party="P", alpha=0.3):
    return IndividualFit(author, party, Role.UNKNOWN, FitResult(alpha, beta, gamma, None, 40, 1.0))


def _fits_with_delta(deltas, parties=None):
    parties = parties or ["P"] * len(deltas)
    return [_fit(f"u{i:04d}", d, 0.0, p) for i, (d, p) in enumerate(zip(deltas, parties))]


def test_single_author_recovers_coefficients():
    recs, _ = synthesize_corpus([AuthorSpec("solo", 0.4, 0.5, -0.3)], 200, 0.0, seed=1)
    fits, skipped = fit_all_individuals(recs, {"solo"})
    assert not skipped
    (f,) = fits
    assert f.fit.coefficients == pytest.approx([0.4, 0.5, -0.3], abs=1e-6)
    assert f.delta == pytest.approx(0.8, abs=1e-6)


def test_short_author_is_skipped_and_reported():
    recs, _ = synthesize_corpus([AuthorSpec("solo", 0.4, 0.5, -0.3)], 20, 0.0, seed=1)
    fits, skipped = fit_all_individuals(recs, {"solo"}, min_obs=30)
    assert fits == []
    assert skipped[0].author_id == "solo" and skipped[0].n_rows == 19
    assert "min_obs" in skipped[0].reason


def test_unknown_active_author_is_skipped():
    recs, _ = synthesize_corpus([AuthorSpec("solo", 0.4, 0.5, -0.3)], 40, 0.0, seed=1)
    fits, skipped = fit_all_individuals(recs, {"solo", "ghost"})
    assert [f.author_id for f in fits] == ["solo"]
    assert [s.author_id for s in skipped] == ["ghost"]


def test_identical_streams_identical_fits():
    recs, _ = synthesize_corpus([AuthorSpec("x", 0.3, 0.4, -0.2)], 80, 0.01, seed=3)
    twin = [
        type(r)(r.tweet_id + "b", "y", r.timestamp, r.sentiment, 0, r.party, r.role, r.region) for r in recs
    ]
    fits, _ = fit_all_individuals(recs + twin, {"x", "y"})
    assert list(fits[0].fit.coefficients) == list(fits[1].fit.coefficients)


def test_thread_count_does_not_change_results(monkeypatch):
    specs = make_authors(6, 0.3, 0.4, -0.2, spread=0.05, seed=2)
    recs, _ = synthesize_corpus(specs, 60, 0.02, seed=2)
    active = {s.author_id for s in specs}
    monkeypatch.setenv("SENTLOOP_THREADS", "1")
    serial = fit_all_individuals(recs, active)
    monkeypatch.setenv("SENTLOOP_THREADS", "4")
    assert fit_all_individuals(recs, active) == serial


def test_z_of_one_two_three():
    rep = zscores(_fits_with_delta([1.0, 2.0, 3.0]))
    assert [a.z for a in rep.authors] == pytest.approx([-1, 0, 1], abs=1e-15)
    assert rep.mu_delta == 2.0 and rep.sigma_delta == 1.0


def test_degenerate_population():
    with pytest.raises(DegeneratePopulationError):
        zscores(_fits_with_delta([0.5]))
    with pytest.raises(DegeneratePopulationError):
        zscores(_fits_with_delta([0.5, 0.5, 0.5]))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=200))
def test_z_identities(deltas):
    if np.std(deltas) < 1e-6:
        return
    z = np.array([a.z for a in zscores(_fits_with_delta(deltas)).authors])
    assert abs(z.mean()) < 1e-9
    assert abs(z.std(ddof=1) - 1) < 1e-9


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=3, max_size=50),
    st.floats(0.1, 10),
    st.floats(-10, 10),
    st.randoms(use_true_random=False),
)
def test_z_location_scale_and_order_invariance(deltas, a, b, rnd):
    if np.std(deltas) < 1e-3:
        return
    base = {x.author_id: x.z for x in zscores(_fits_with_delta(deltas)).authors}
    moved = {x.author_id: x.z for x in zscores(_fits_with_delta([a * d + b for d in deltas])).authors}
    assert list(moved.values()) == pytest.approx(list(base.values()), abs=1e-9)
    shuffled = _fits_with_delta(deltas)
    rnd.shuffle(shuffled)
    assert {x.author_id: x.z for x in zscores(shuffled).authors} == base


def test_min_group_filter():
    rng = np.random.default_rng(5)
    parties = ["Big"] * 150 + ["Small"] * 40
    rep = zscores(_fits_with_delta(rng.normal(size=190).tolist(), parties))
    kept = aggregate_by_party(rep, min_group=100)
    assert [g.key for g in kept] == ["Big"]
    assert len(rep.authors) == 190  # individuals unaffected
    assert sorted(g.key for g in aggregate_by_party(rep, min_group=1)) == ["Big", "Small"]
    with pytest.raises(ValueError):
        aggregate_by_party(rep, min_group=0)


def test_party_stats_oracle():
    rep = zscores(_fits_with_delta([1, 2, 3, 4, 5, 6], ["A", "A", "A", "B", "B", "B"]))
    z = (np.array([1, 2, 3, 4, 5, 6]) - 3.5) / np.std([1, 2, 3, 4, 5, 6], ddof=1)
    by = {g.key: g for g in rep.parties}
    assert by["A"].mean_z == pytest.approx(z[:3].mean(), abs=1e-12)
    assert by["B"].median_z == pytest.approx(z[4], abs=1e-12)
    assert by["A"].iqr_z == pytest.approx(np.percentile(z[:3], 75) - np.percentile(z[:3], 25), abs=1e-12)
    assert [g.key for g in aggregate_by_party(rep, 1)] == ["B", "A"]


def test_constructed_shift_orders_parties():
    specs = make_authors(
        24, 0.3, 0.4, -0.2, parties=[("Up", Role.GOVERNMENT), ("Down", Role.OPPOSITION)],
        beta_offsets=[0.3, -0.3], spread=0.03, seed=9,
    )
    recs, _ = synthesize_corpus(specs, 150, 0.01, seed=9)
    fits, skipped = fit_all_individuals(recs, {s.author_id for s in specs})
    assert not skipped
    rep = zscores(fits)
    parties = aggregate_by_party(rep, min_group=1)
    assert [g.key for g in parties] == ["Up", "Down"]
    assert parties[0].mean_z > 0.5 > -0.5 > parties[1].mean_z
    assert {g.key for g in rep.roles} == {"government", "opposition"}


def test_parties_csv_and_dict():
    rep = zscores(_fits_with_delta([1.0, 2.0, 3.0], ["A", "B", "B"]))
    buf = io.StringIO()
    write_parties_csv(aggregate_by_party(rep, 1), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "party,n,mean_z,median_z,iqr_z"
    assert lines[1].startswith("B,2,0.5,")
    d = rep.to_dict()
    assert d["population"] == {"mu_delta": 2.0, "sigma_delta": 1.0, "n": 3}
    assert [a["z"] for a in d["authors"]] == [-1.0, 0.0, 1.0]
