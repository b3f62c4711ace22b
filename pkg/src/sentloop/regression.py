"""Least-squares fitting of the one-step sentiment predictor and its diagnostics.

The predictor is ``S[t+1] ~ alpha*S[t] + beta*r_pos[t] + gamma*r_neg[t]``,
optionally with an intercept. No clipping is applied to predictions.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np
from scipy.linalg import solve_triangular

from sentloop.errors import (
    CollinearityError,
    DataError,
    InsufficientObservations,
    RankDeficientError,
    ZeroVarianceError,
)
from sentloop.series import Group, SentimentSeries

REGRESSORS = ("S", "r_pos", "r_neg")
MIN_ROWS = 4
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    X: np.ndarray  # (n, 3): S[t], r_pos[t], r_neg[t]
    y: np.ndarray  # (n,): S[t+1]
    row_days: tuple[date, ...]

    def __post_init__(self) -> None:
        if self.X.ndim != 2 or self.X.shape[1] != len(REGRESSORS):
            raise ValueError(f"design needs {len(REGRESSORS)} regressor columns, got shape {self.X.shape}")
        if len(self.y) != len(self.X) or len(self.row_days) != len(self.X):
            raise ValueError("rows, targets and row_days must align")

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, idx: slice) -> "DesignMatrix":
        return DesignMatrix(self.X[idx], self.y[idx], self.row_days[idx])


@dataclass(frozen=True)
class FitResult:
    alpha: float
    beta: float
    gamma: float
    intercept: float | None
    n_obs: int
    condition_number: float

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "intercept": self.intercept,
            "n_obs": self.n_obs,
            "condition_number": self.condition_number,
        }


@dataclass(frozen=True)
class Diagnostics:
    pearson: dict[str, float]
    vif: dict[str, float]
    rmse_model: float
    rmse_naive: float

    def to_dict(self) -> dict:
        return {
            "pearson": dict(self.pearson),
            "vif": dict(self.vif),
            "rmse_model": self.rmse_model,
            "rmse_naive": self.rmse_naive,
        }


def build_design(series: SentimentSeries, drop_gaps: bool = True, min_rows: int = MIN_ROWS) -> DesignMatrix:
    """Pair each day's regressors with the next day's score.

    With ``drop_gaps`` any pair touching a carried-forward day is skipped,
    since those values would bias the persistence coefficient upward.
    """
    if len(series) < 2:
        raise InsufficientObservations(0, min_rows)
    keep = np.ones(len(series) - 1, dtype=bool)
    if drop_gaps:
        keep &= ~series.gap_mask[:-1] & ~series.gap_mask[1:]
    idx = np.flatnonzero(keep)
    if len(idx) < min_rows:
        raise InsufficientObservations(len(idx), min_rows)
    X = np.column_stack([series.S[idx], series.r_pos[idx], series.r_neg[idx]])
    y = series.S[idx + 1].copy()
    return DesignMatrix(X, y, tuple(series.days[i] for i in idx))


def _solve_qr(A: np.ndarray, y: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(A, mode="reduced")
    return solve_triangular(R, Q.T @ y, lower=False)


def fit_linear(design: DesignMatrix, with_intercept: bool = False) -> FitResult:
    """Ordinary least squares through a QR factorization.

    Raises
    ------
    InsufficientObservations
        If there are fewer rows than free parameters.
    RankDeficientError
        If the regressor matrix has condition number of 1e12 or more.
    """
    A = design.X
    if with_intercept:
        A = np.column_stack([A, np.ones(len(A))])
    n, p = A.shape
    if n < p:
        raise InsufficientObservations(n, p)
    cond = float(np.linalg.cond(A))
    if not math.isfinite(cond) or cond >= MAX_CONDITION:
        raise RankDeficientError(cond)
    coef = _solve_qr(A, design.y)
    if not np.all(np.isfinite(coef)):
        raise RankDeficientError(cond)
    return FitResult(
        alpha=float(coef[0]),
        beta=float(coef[1]),
        gamma=float(coef[2]),
        intercept=float(coef[3]) if with_intercept else None,
        n_obs=n,
        condition_number=cond,
    )


def predict(fit: FitResult, design: DesignMatrix) -> np.ndarray:
    if design.X.shape[1] != len(REGRESSORS):
        raise ValueError("design layout does not match the fitted regressors")
    pred = design.X @ fit.coefficients
    if fit.intercept is not None:
        pred = pred + fit.intercept
    return pred


def residuals(fit: FitResult, design: DesignMatrix) -> np.ndarray:
    return design.y - predict(fit, design)


def rmse(predictions: Sequence[float], targets: Sequence[float]) -> float:
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise ValueError("rmse of an empty sample")
    return float(np.sqrt(np.mean((p - t) ** 2)))


def naive_rmse(design: DesignMatrix) -> float:
    """RMSE of the persistence forecast ``S[t+1] = S[t]``."""
    if len(design) == 0:
        raise ValueError("empty design")
    return rmse(design.X[:, 0], design.y)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("pearson needs two equal-length samples of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    nx = np.sqrt(dx @ dx)
    ny = np.sqrt(dy @ dy)
    if nx == 0 or ny == 0:
        raise ZeroVarianceError("zero variance")
    return float(np.clip((dx @ dy) / (nx * ny), -1.0, 1.0))


def vif(design: DesignMatrix | np.ndarray, names: Sequence[str] = REGRESSORS) -> dict[str, float]:
    """Variance inflation factor of each regressor.

    Each column is regressed on the remaining columns plus an intercept and
    ``1 / (1 - R^2)`` is reported.
    """
    X = design.X if isinstance(design, DesignMatrix) else np.asarray(design, dtype=float)
    n, p = X.shape
    if p < 2:
        raise ValueError("VIF needs at least two regressors")
    if len(names) != p:
        raise ValueError("one name per regressor column required")
    out = {}
    for j in range(p):
        target = X[:, j]
        centered = target - target.mean()
        sst = centered @ centered
        if sst == 0:
            raise CollinearityError(names[j])
        others = np.column_stack([np.delete(X, j, axis=1), np.ones(n)])
        if np.linalg.cond(others) >= MAX_CONDITION:
            raise CollinearityError(names[j])
        coef = _solve_qr(others, target)
        resid = target - others @ coef
        r2 = 1.0 - (resid @ resid) / sst
        if r2 >= 1.0 - 1e-12:
            raise CollinearityError(names[j])
        out[names[j]] = float(1.0 / (1.0 - r2))
    return out


def split_chronological(design: DesignMatrix, train_fraction: float = 0.7) -> tuple[DesignMatrix, DesignMatrix]:
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = math.floor(len(design) * train_fraction)
    if n_train == 0 or n_train == len(design):
        raise DataError(f"chronological split of {len(design)} rows at {train_fraction} leaves one side empty")
    return design[:n_train], design[n_train:]


def diagnose(fit: FitResult, full: DesignMatrix, test: DesignMatrix) -> Diagnostics:
    """Correlations and VIF over ``full``, out-of-sample RMSE over ``test``."""
    return Diagnostics(
        pearson={name: pearson(full.X[:, j], full.y) for j, name in enumerate(REGRESSORS)},
        vif=vif(full),
        rmse_model=rmse(predict(fit, test), test.y),
        rmse_naive=naive_rmse(test),
    )


def synthesize_open_loop(
    params: tuple[float, float, float],
    r_pos: Sequence[float] | float,
    r_neg: Sequence[float] | float,
    noise_std: float,
    T: int,
    seed: int | None = 0,
    s0: float = 0.0,
    start: date = date(2021, 1, 1),
) -> SentimentSeries:
    """Simulate the sentiment series under given engagement.

    ``S[t+1] = clip(alpha*S[t] + beta*r_pos[t] + gamma*r_neg[t] + w[t], -1, 1)``
    with ``w[t] ~ N(0, noise_std**2)`` drawn from ``numpy.random.default_rng(seed)``.
    Scalar engagement is broadcast to length ``T``.
    """
    if T < 10:
        raise ValueError("T must be at least 10")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    alpha, beta, gamma = params
    rp = np.broadcast_to(np.asarray(r_pos, dtype=float), (T,)).copy()
    rn = np.broadcast_to(np.asarray(r_neg, dtype=float), (T,)).copy()
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, noise_std, size=T - 1) if noise_std > 0 else np.zeros(T - 1)
    S = np.empty(T)
    S[0] = np.clip(s0, -1.0, 1.0)
    for t in range(T - 1):
        S[t + 1] = np.clip(alpha * S[t] + beta * rp[t] + gamma * rn[t] + noise[t], -1.0, 1.0)
    days = tuple(start + timedelta(days=i) for i in range(T))
    return SentimentSeries(Group("synthetic"), days, S, rp, rn, np.zeros(T, dtype=bool))


def random_engagement(T: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Exogenous engagement shares, kept away from 0 and 1."""
    return rng.uniform(0.15, 0.45, size=T), rng.uniform(0.10, 0.35, size=T)
