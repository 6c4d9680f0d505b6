"""Figure rendering for trace and weight-family reports.

All figures are written to files with the Agg backend; no interactive state.
PNG metadata omits timestamps so identical inputs give identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .asymptotics import ResidualSeries
from .minima import Trajectory

FIGSIZE = (6.4, 4.2)
DPI = 150
PNG_METADATA = {"Date": None}


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata=PNG_METADATA)
    plt.close(fig)
    return path


def render_trace_figures(
    traj: Trajectory,
    dual_lengths: dict[str, tuple[float, ...]],
    series: ResidualSeries | None,
    outdir: Path,
    stem: str = "trace",
) -> list[Path]:
    """Length, twist, dual and residual figures for one traced line.

    dual_lengths maps curve name to per-sample lengths aligned with the
    trajectory points; zero entries mark samples where the curve has pinched
    below resolution and are left out of the log plots.
    """
    outdir = Path(outdir)
    s = np.array([pt.s for pt in traj.points])
    lengths = np.array([pt.coords.lengths for pt in traj.points])
    twists = np.array([pt.coords.twists for pt in traj.points])
    names = traj.problem.surface.pants_curves
    written: list[Path] = []

    fig, ax = _new_axes("Pants-curve lengths along the trace", "s", "length")
    for k, name in enumerate(names):
        ax.loglog(s, lengths[:, k], marker="o", markersize=3, label=f"l_{name}")
    ref = lengths[-1, 0] * (s / s[-1])
    ax.loglog(s, ref, linestyle="--", color="gray", label="slope 1 reference")
    ax.legend()
    written.append(_save(fig, outdir / f"{stem}_lengths.png"))

    fig, ax = _new_axes("Twists along the trace", "s", "twist")
    for k, name in enumerate(names):
        ax.semilogx(s, twists[:, k], marker="o", markersize=3, label=f"t_{name}")
    ax.legend()
    written.append(_save(fig, outdir / f"{stem}_twists.png"))

    if dual_lengths:
        fig, ax = _new_axes("Dual-curve growth along the trace", "log(1/s)", "length")
        x = np.log(1.0 / s)
        for name, vals in sorted(dual_lengths.items()):
            vals = np.array(vals, dtype=float)
            mask = vals > 0.0
            ax.plot(x[mask], vals[mask], marker="o", markersize=3, label=f"l_{name}")
        ax.legend()
        written.append(_save(fig, outdir / f"{stem}_duals.png"))

    if series is not None:
        fig, ax = _new_axes(
            f"Collar-estimate residual for {series.curve}", "log(1/s)", "residual"
        )
        x = np.log(1.0 / np.array(series.s_values))
        ax.plot(x, series.residuals, marker="o", markersize=3)
        written.append(_save(fig, outdir / f"{stem}_residual.png"))

    return written


def render_simplex_figure(runs, path: Path) -> Path:
    """Bar chart of inferred weights per family member; divergence is marked."""
    path = Path(path)
    labels = []
    for run in runs:
        eps = run.epsilon
        labels.append(f"eps={eps:g}")
    fig, ax = _new_axes(
        "Inferred limit weights across the family",
        "family member",
        "weight (max-normalized)",
    )
    positions = np.arange(len(runs))
    width = 0.38
    probes = runs[0].probe_curves
    for k, probe in enumerate(probes):
        vals = [run.weights[k] if run.weights else 0.0 for run in runs]
        ax.bar(positions + (k - 0.5) * width, vals, width, label=f"weight via {probe}")
    for pos, run in zip(positions, runs):
        if run.diverged:
            ax.text(pos, 0.05, "diverged", ha="center", rotation=90)
    ax.axhline(1.0, linestyle="--", color="gray", alpha=0.7)
    ax.set_xticks(positions)
    ax.set_xticklabels(labels)
    ax.legend()
    return _save(fig, path)
