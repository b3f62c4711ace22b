"""Closed sentiment-engagement loop: linear analysis and saturated simulation.

Closing the one-step predictor with engagement that follows sentiment,
``r_pos[t+1] = a*(1 + S[t])/2`` and ``r_neg[t+1] = b*(1 - S[t])/2``, gives the
second-order recurrence

    S[t+1] = alpha*S[t] + k*S[t-1] + c,
    k = (beta*a - gamma*b)/2,   c = (beta*a + gamma*b)/2,

whose characteristic polynomial is ``z**2 - alpha*z - k``. The saturated
variant clips every new state to [-1, 1], which makes it a piecewise-affine
map with possible boundary equilibria (locking) and border-collision cycles.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from sentloop.regression import FitResult

DEFAULT_TOL = 1e-9
CONVERGENCE_STREAK = 10
BLOWUP = 1e6
SIM_STEPS = 10_000


class StabilityClass(str, Enum):
    MONOTONE = "MonotoneConvergent"
    OSCILLATORY = "OscillatoryConvergent"
    DIVERGENT = "Divergent"
    MARGINAL = "Marginal"


CLASS_ORDER = (
    StabilityClass.MONOTONE,
    StabilityClass.OSCILLATORY,
    StabilityClass.DIVERGENT,
    StabilityClass.MARGINAL,
)
_CODE = {cls: i for i, cls in enumerate(CLASS_ORDER)}


@dataclass(frozen=True)
class LoopParams:
    """Closed-loop coefficients.

    ``offset`` is an extra constant drive, zero unless a fitted intercept is
    folded in by :func:`close_loop_from_fit`.
    """

    alpha: float
    beta: float
    gamma: float
    a: float
    b: float
    offset: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "gamma", "a", "b", "offset"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.a < 0 or self.b < 0:
            raise ValueError("engagement scales a and b must be non-negative")

    @property
    def k(self) -> float:
        """Net feedback on the lagged state."""
        return (self.beta * self.a - self.gamma * self.b) / 2

    @property
    def c(self) -> float:
        """Constant forcing."""
        return (self.beta * self.a + self.gamma * self.b) / 2 + self.offset

    def derived(self) -> "DerivedLoop":
        return DerivedLoop(self.k, self.c)


@dataclass(frozen=True)
class DerivedLoop:
    k: float
    c: float


@dataclass(frozen=True)
class Equilibrium:
    kind: str  # "interior" | "boundary" | "none"
    value: float | None = None
    stable: bool | None = None
    note: str = ""
    boundary_signs: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "stable": self.stable,
            "note": self.note,
            "boundary_signs": list(self.boundary_signs),
        }


@dataclass(frozen=True)
class Terminal:
    kind: str  # "converged" | "cycle" | "max_steps"
    value: float | None = None
    period: int | None = None


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    states: np.ndarray
    saturation_events: tuple[int, ...]
    terminal: Terminal


@dataclass(frozen=True)
class Cycle:
    period: int
    states: tuple[float, ...]


def sat(x: float) -> float:
    if not math.isfinite(x):
        raise ValueError(f"sat needs a finite input, got {x}")
    return min(max(x, -1.0), 1.0)


def characteristic_roots(alpha: float, k: float) -> tuple[complex, complex]:
    """Roots of ``z**2 - alpha*z - k``, larger modulus first."""
    disc = alpha * alpha + 4.0 * k
    if disc >= 0:
        sq = math.sqrt(disc)
        # avoid cancellation: take the root of larger magnitude first
        big = (alpha + math.copysign(sq, alpha)) / 2.0
        if big == 0.0:
            return 0j, 0j
        small = -k / big
        return complex(big), complex(small)
    sq = cmath.sqrt(disc)
    r1, r2 = (alpha + sq) / 2.0, (alpha - sq) / 2.0
    return (r1, r2)


def spectral_radius(alpha: float, k: float) -> float:
    return max(abs(z) for z in characteristic_roots(alpha, k))


def classify_stability(alpha: float, k: float, tol: float = DEFAULT_TOL) -> StabilityClass:
    """Stability class of the linear recurrence with coefficients ``alpha``, ``k``.

    A negative real root counts as oscillatory: the approach alternates in
    sign even though no rotation is involved. A spectral radius within
    ``tol`` of one is reported as ``MARGINAL``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    roots = characteristic_roots(alpha, k)
    rho = max(abs(z) for z in roots)
    if rho > 1 + tol:
        return StabilityClass.DIVERGENT
    if abs(rho - 1) <= tol:
        return StabilityClass.MARGINAL
    complex_pair = any(z.imag != 0 for z in roots)
    if complex_pair or any(z.real < -tol for z in roots):
        return StabilityClass.OSCILLATORY
    return StabilityClass.MONOTONE


def _unclipped(params: LoopParams, s_t: float, s_tm1: float) -> float:
    p = params
    return (
        p.alpha * s_t
        + p.beta * p.a * (1 + s_tm1) / 2
        + p.gamma * p.b * (1 - s_tm1) / 2
        + p.offset
    )


def step_saturated(params: LoopParams, s_t: float, s_tm1: float) -> float:
    if not (-1 <= s_t <= 1 and -1 <= s_tm1 <= 1):
        raise ValueError(f"states must lie in [-1, 1], got ({s_t}, {s_tm1})")
    return sat(_unclipped(params, s_t, s_tm1))


def boundary_equilibria(params: LoopParams) -> list[tuple[int, bool]]:
    """Boundaries ``s = +-1`` that the saturated map holds fixed.

    Each entry is ``(sign, stable)``; a boundary is stable when the clipped
    value lies strictly beyond it, so small perturbations are clipped away.
    """
    out = []
    for sign in (1, -1):
        if step_saturated(params, float(sign), float(sign)) == sign:
            out.append((sign, sign * _unclipped(params, sign, sign) > 1))
    return out


def interior_equilibrium(params: LoopParams, tol: float = DEFAULT_TOL) -> Equilibrium:
    """Equilibrium of the saturated loop.

    The affine fixed point ``c / (1 - alpha - k)`` is returned when it lies in
    [-1, 1]. Otherwise each boundary is tested with one saturated step from
    ``(s, s)``; a held boundary is reported (preferring the side the affine
    fixed point lies on, if both hold). With ``1 - alpha - k`` numerically
    zero there is no affine fixed point unless ``c`` is zero too, in which
    case every state is fixed and 0 is returned by convention.
    """
    alpha, k, c = params.alpha, params.k, params.c
    denom = 1.0 - alpha - k
    rho = spectral_radius(alpha, k)
    note = ""
    if abs(denom) <= 1e-12:
        if c == 0:
            return Equilibrium(
                "interior", 0.0, stable=False, note="continuum of fixed points; 0 chosen by convention"
            )
        note = "no fixed point (resonant forcing)"
        s_star = None
    else:
        s_star = c / denom
        if abs(s_star) <= 1:
            return Equilibrium("interior", s_star, stable=rho < 1 - tol)
        note = f"affine fixed point {s_star:.6g} lies outside [-1, 1]"

    held = boundary_equilibria(params)
    if not held:
        return Equilibrium("none", None, None, note)
    signs = tuple(s for s, _ in held)
    if len(held) > 1 and s_star is not None:
        held.sort(key=lambda h: h[0] != math.copysign(1, s_star))
    sign, stable = held[0]
    return Equilibrium("boundary", float(sign), stable, note, signs)


def detect_cycle(trace: SimulationTrace | np.ndarray, max_period: int = 64, tol: float = 1e-7) -> Cycle | None:
    """Smallest period ``p <= max_period`` that repeats over the trace tail.

    The tail is the last ``4*max_period`` states. Period 1 means the trace
    has converged and yields ``None``, as does no repeating period at all.
    """
    if max_period < 2:
        raise ValueError("max_period must be >= 2")
    states = trace.states if isinstance(trace, SimulationTrace) else np.asarray(trace, dtype=float)
    window = 4 * max_period
    if len(states) < window:
        raise ValueError(f"trace too short: {len(states)} states, need {window}")
    tail = states[-window:]
    for p in range(1, max_period + 1):
        if np.max(np.abs(tail[p:] - tail[:-p])) < tol:
            if p == 1:
                return None
            return Cycle(p, tuple(float(v) for v in tail[-p:]))
    return None


def simulate(
    params: LoopParams,
    s0: float,
    s1: float,
    max_steps: int = SIM_STEPS,
    convergence_tol: float = 1e-10,
    max_period: int = 64,
    cycle_tol: float = 1e-7,
) -> SimulationTrace:
    """Iterate the saturated map from ``(S[0], S[1]) = (s0, s1)``.

    Stops once ``|S[t+1] - S[t]| < convergence_tol`` for 10 consecutive
    steps, or after ``max_steps`` new states, in which case the tail is
    checked for a cycle.
    """
    if max_steps < 2:
        raise ValueError("max_steps must be >= 2")
    if not (-1 <= s0 <= 1 and -1 <= s1 <= 1):
        raise ValueError("initial states must lie in [-1, 1]")
    states = [float(s0), float(s1)]
    events: list[int] = []
    streak = 0
    terminal = None
    for _ in range(max_steps):
        raw = _unclipped(params, states[-1], states[-2])
        nxt = sat(raw)
        if nxt != raw:
            events.append(len(states))
        streak = streak + 1 if abs(nxt - states[-1]) < convergence_tol else 0
        states.append(nxt)
        if streak >= CONVERGENCE_STREAK:
            terminal = Terminal("converged", nxt)
            break
    arr = np.array(states)
    if terminal is None:
        mp = min(max_period, len(arr) // 4)
        cyc = detect_cycle(arr, mp, cycle_tol) if mp >= 2 else None
        terminal = Terminal("cycle", period=cyc.period) if cyc else Terminal("max_steps")
    return SimulationTrace(arr, tuple(events), terminal)


def simulate_linear(alpha: float, k: float, c: float, s0: float, s1: float, steps: int) -> np.ndarray:
    """Unsaturated recurrence; stops early (keeping the offending state) past 1e300."""
    out = [float(s0), float(s1)]
    for _ in range(steps):
        nxt = alpha * out[-1] + k * out[-2] + c
        out.append(nxt)
        if not abs(nxt) < 1e300:
            break
    return np.array(out)


# --- stability diagrams ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class StabilityDiagram:
    alpha: np.ndarray  # cell centers, axis 0
    k: np.ndarray  # cell centers, axis 1
    codes: np.ndarray  # (len(alpha), len(k)) indices into CLASS_ORDER
    mode: str
    extras: dict = field(default_factory=dict)

    def cls(self, i: int, j: int) -> StabilityClass:
        return CLASS_ORDER[self.codes[i, j]]

    def counts(self) -> dict[StabilityClass, int]:
        return {cls: int(np.sum(self.codes == _CODE[cls])) for cls in CLASS_ORDER}


def cell_centers(lo: float, hi: float, n: int) -> np.ndarray:
    if not hi > lo:
        raise ValueError(f"degenerate range [{lo}, {hi}]")
    if n < 2:
        raise ValueError("resolution must be >= 2")
    width = (hi - lo) / n
    return lo + (np.arange(n) + 0.5) * width


def _simulated_codes(alpha: np.ndarray, k: np.ndarray, steps: int = SIM_STEPS, fan: int = 256) -> np.ndarray:
    """Classify cells from unsaturated trajectories alone.

    Two basis starts decide blow-up (``|x| > 1e6``), decay, or neither within
    ``steps``. Decaying cells are oscillatory if any start from a fan of
    directions changes sign at least twice; a sum of two non-negative
    exponentials can change sign only once.
    """
    n = alpha.size
    codes = np.full(n, _CODE[StabilityClass.MARGINAL])

    # blow-up vs decay, both basis directions at once
    idx = np.arange(n)
    a_, k_ = alpha.copy(), k.copy()
    prev = np.tile(np.array([1.0, 0.0]), (n, 1))
    cur = np.tile(np.array([0.0, 1.0]), (n, 1))
    for _ in range(steps):
        nxt = a_[:, None] * cur + k_[:, None] * prev
        prev, cur = cur, nxt
        big = np.max(np.abs(cur), axis=1) > BLOWUP
        small = np.maximum(np.max(np.abs(cur), axis=1), np.max(np.abs(prev), axis=1)) < 1e-10
        codes[idx[big]] = _CODE[StabilityClass.DIVERGENT]
        codes[idx[small]] = _CODE[StabilityClass.MONOTONE]
        keep = ~(big | small)
        if not keep.all():
            idx, a_, k_, prev, cur = idx[keep], a_[keep], k_[keep], prev[keep], cur[keep]
        if idx.size == 0:
            break

    conv = np.flatnonzero(codes == _CODE[StabilityClass.MONOTONE])
    if conv.size:
        osc = _alternates(alpha[conv], k[conv], fan, 64)
        rest = conv[~osc]
        if rest.size:
            osc2 = _alternates(alpha[rest], k[rest], 2, 5000)
            codes[rest[osc2]] = _CODE[StabilityClass.OSCILLATORY]
        codes[conv[osc]] = _CODE[StabilityClass.OSCILLATORY]
    return codes


def _alternates(alpha: np.ndarray, k: np.ndarray, fan: int, steps: int) -> np.ndarray:
    theta = np.pi * (np.arange(fan) + 0.5) / fan
    prev = np.broadcast_to(np.cos(theta), (alpha.size, fan)).copy()
    cur = np.broadcast_to(np.sin(theta), (alpha.size, fan)).copy()
    changes = (np.sign(prev) * np.sign(cur) < 0).astype(np.int64)
    last_sign = np.where(cur != 0, np.sign(cur), np.sign(prev))
    a_, k_ = alpha[:, None], k[:, None]
    for _ in range(steps):
        nxt = a_ * cur + k_ * prev
        scale = np.maximum(np.abs(nxt), np.abs(cur))
        scale[scale == 0] = 1.0
        prev, cur = cur / scale, nxt / scale
        s = np.sign(cur)
        flip = (s != 0) & (last_sign != 0) & (s != last_sign)
        changes += flip
        last_sign = np.where(s != 0, s, last_sign)
        if np.all(changes.max(axis=1) >= 2):
            break
    return changes.max(axis=1) >= 2


def stability_diagram(
    alpha_range: tuple[float, float] = (-2.0, 2.0),
    k_range: tuple[float, float] = (-2.0, 2.0),
    resolution: int | tuple[int, int] = 400,
    mode: str = "analytic",
    tol: float = DEFAULT_TOL,
) -> StabilityDiagram:
    """Classify every grid cell at its center ``(alpha, k)``.

    ``analytic`` uses the characteristic roots; ``simulated`` looks only at
    unsaturated trajectories. Cell order is fixed by grid indices.
    """
    na, nk = (resolution, resolution) if isinstance(resolution, int) else resolution
    alpha = cell_centers(*alpha_range, na)
    k = cell_centers(*k_range, nk)
    if mode == "analytic":
        codes = np.array([[_CODE[classify_stability(a, kk, tol)] for kk in k] for a in alpha])
    elif mode == "simulated":
        A, K = np.meshgrid(alpha, k, indexing="ij")
        flat_a, flat_k = A.ravel(), K.ravel()
        chunk = 4096
        parts = [
            _simulated_codes(flat_a[i : i + chunk], flat_k[i : i + chunk])
            for i in range(0, flat_a.size, chunk)
        ]
        codes = np.concatenate(parts).reshape(na, nk)
    else:
        raise ValueError(f"unknown diagram mode {mode!r}")
    return StabilityDiagram(alpha, k, codes, mode)


# --- closing a fitted model ------------------------------------------------


@dataclass(frozen=True)
class ClosedLoop:
    params: LoopParams
    k: float
    c: float
    stability: StabilityClass
    roots: tuple[complex, complex]


def close_loop_from_fit(fit: FitResult, a: float, b: float) -> ClosedLoop:
    """Close a fitted predictor with engagement scales ``a`` and ``b``.

    A fitted intercept is added to the constant forcing, with a warning,
    since the pure closed-loop recurrence carries no such term.
    """
    offset = 0.0
    if fit.intercept is not None:
        warnings.warn(
            "fitted intercept folded into the closed-loop forcing term", stacklevel=2
        )
        offset = fit.intercept
    params = LoopParams(fit.alpha, fit.beta, fit.gamma, a, b, offset)
    return ClosedLoop(
        params,
        params.k,
        params.c,
        classify_stability(params.alpha, params.k),
        characteristic_roots(params.alpha, params.k),
    )
