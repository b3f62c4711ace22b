"""SVG figures written next to the CSV/JSON outputs.

Figures are made reproducible by fixing the SVG hash salt and dropping the
creation date; the only version-dependent text is the generator comment.
"""

from __future__ import annotations

from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from sentloop import __version__  # noqa: E402
from sentloop.dynamics import CLASS_ORDER, StabilityClass, StabilityDiagram, SimulationTrace  # noqa: E402

CLASS_COLORS = {
    StabilityClass.MONOTONE: "#2e8b3a",
    StabilityClass.OSCILLATORY: "#a8dc8f",
    StabilityClass.DIVERGENT: "#9e9e9e",
    StabilityClass.MARGINAL: "#d62728",
}
CLASS_LABELS = {
    StabilityClass.MONOTONE: "monotone convergence",
    StabilityClass.OSCILLATORY: "damped oscillatory convergence",
    StabilityClass.DIVERGENT: "divergence",
    StabilityClass.MARGINAL: "marginal (|root| = 1)",
}

STYLE = {
    "svg.hashsalt": "sentloop",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": f"sentloop {__version__}"})
    plt.close(fig)
    return path


def plot_predictions(days: Sequence, actual, predicted, naive, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 3))
        x = np.arange(len(actual))
        ax.plot(x, actual, color="black", lw=1.2, label="observed")
        ax.plot(x, predicted, color="#1f77b4", lw=1.0, label="linear feedback model")
        ax.plot(x, naive, color="#ff7f0e", lw=0.8, ls="--", label="persistence baseline")
        if len(days):
            ticks = np.linspace(0, len(days) - 1, min(6, len(days))).astype(int)
            ax.set_xticks(ticks)
            ax.set_xticklabels([days[i].isoformat() for i in ticks])
        ax.set_ylabel("sentiment score")
        ax.legend(frameon=False, loc="best")
        fig.tight_layout()
        return _save(fig, path)


def plot_party_bars(parties: Sequence, path: Path) -> Path:
    """Bar of mean z per party with the interquartile range as error bar."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(3.0, 0.8 * len(parties) + 1.5), 3))
        names = [g.key or "(none)" for g in parties]
        means = [g.mean_z for g in parties]
        half_iqr = [g.iqr_z / 2 for g in parties]
        colors = ["#2e8b3a" if m >= 0 else "#c0392b" for m in means]
        ax.bar(names, means, yerr=half_iqr, color=colors, capsize=3)
        ax.axhline(0, color="black", lw=0.6)
        ax.set_ylabel("mean z")
        fig.tight_layout()
        return _save(fig, path)


def plot_trace(trace: SimulationTrace, path: Path, equilibrium: float | None = None) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7, 3))
        s = trace.states
        shown = min(len(s), 400)
        t = np.arange(shown)
        ax.plot(t, s[:shown], color="black", lw=0.9, marker=".", ms=2)
        ev = [i for i in trace.saturation_events if i < shown]
        if ev:
            ax.plot(ev, s[ev], ls="none", marker="o", ms=3, color="#d62728", label="clipped")
            ax.legend(frameon=False, loc="best")
        if equilibrium is not None:
            ax.axhline(equilibrium, color="#1f77b4", lw=0.7, ls="--")
        ax.set_ylim(-1.05, 1.05)
        ax.set_xlabel("t")
        ax.set_ylabel("S")
        fig.tight_layout()
        return _save(fig, path)


def plot_diagram(diagram: StabilityDiagram, path: Path) -> Path:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 4.2))
        cmap = ListedColormap([CLASS_COLORS[c] for c in CLASS_ORDER])
        da = (diagram.alpha[1] - diagram.alpha[0]) / 2
        dk = (diagram.k[1] - diagram.k[0]) / 2
        extent = (diagram.alpha[0] - da, diagram.alpha[-1] + da, diagram.k[0] - dk, diagram.k[-1] + dk)
        ax.imshow(
            diagram.codes.T,
            origin="lower",
            extent=extent,
            cmap=cmap,
            vmin=-0.5,
            vmax=len(CLASS_ORDER) - 0.5,
            interpolation="nearest",
            aspect="auto",
        )
        ax.set_xlabel(r"$\alpha$")
        ax.set_ylabel(r"$k = (\beta a - \gamma b)/2$")
        handles = [Patch(color=CLASS_COLORS[c], label=CLASS_LABELS[c]) for c in CLASS_ORDER]
        ax.legend(handles=handles, loc="upper center", bbox_to_anchor=(0.5, -0.15), ncol=2, frameon=False)
        fig.tight_layout()
        return _save(fig, path)
