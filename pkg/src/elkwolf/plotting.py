"""SVG figures: time series, stability grids, bifurcation diagrams, PRCC bars."""

from __future__ import annotations

from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PatchCollection  # noqa: E402
from matplotlib.patches import Patch, Rectangle  # noqa: E402

from .scan import BifurcationDiagram, CellClass, ScanGrid  # noqa: E402

CELL_COLORS = {
    CellClass.ABSENT: "#ffffff",
    CellClass.STABLE: "#ff0000",
    CellClass.UNSTABLE: "#0000ff",
    CellClass.MARGINAL: "#808080",
}
VARIABLE_LABELS = {"E": "Banff elk E", "N": "Bow Valley elk N", "P": "wolves P"}

# fixed ids and no timestamp so repeated renders are byte-identical
plt.rcParams["svg.hashsalt"] = "elkwolf"
plt.rcParams["svg.fonttype"] = "none"


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_series(series: Mapping[str, tuple], path, xlabel: str = "", ylabel: str = "",
                title: str = "") -> None:
    """One line-with-markers artist per named (x, y) series.

    Each series is drawn in a group with id ``series-<name>`` so the markers
    of a series can be counted in the output.
    """
    if not series or all(len(np.atleast_1d(x)) == 0 for x, _ in series.values()):
        raise ValueError("nothing to plot")
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for name, (x, y) in series.items():
        x, y = np.atleast_1d(x), np.atleast_1d(y)
        marker = "o" if len(x) < 50 else None
        (line,) = ax.plot(x, y, marker=marker, lw=1.2, label=name)
        line.set_gid(f"series-{name}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(loc="best", frameon=False)
    fig.tight_layout()
    _save(fig, path)


def plot_orbit(times, states, path, title: str = "") -> None:
    """Time series of E, N, P with an N-P phase projection."""
    states = np.asarray(states)
    if states.size == 0:
        raise ValueError("nothing to plot")
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0))
    for ax, j, name in zip(axes.flat[:3], range(3), "ENP"):
        (line,) = ax.plot(times, states[:, j], lw=1.0, color="C%d" % j)
        line.set_gid(f"series-{name}")
        ax.set_xlabel("time")
        ax.set_ylabel(VARIABLE_LABELS[name])
    ax = axes.flat[3]
    ax.plot(states[:, 1], states[:, 2], lw=0.8, color="k")
    ax.plot(states[0, 1], states[0, 2], "o", color="C3")
    ax.set_xlabel("N")
    ax.set_ylabel("P")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    _save(fig, path)


def plot_grid(grid: ScanGrid, path, title: str = "") -> None:
    """Region map: white = X* absent, red = stable, blue = unstable."""
    if grid.classes.size == 0:
        raise ValueError("nothing to plot")
    dx = (grid.x[-1] - grid.x[0]) / (len(grid.x) - 1)
    dy = (grid.y[-1] - grid.y[0]) / (len(grid.y) - 1)
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    handles = []
    for cls, color in CELL_COLORS.items():
        idx = [(iy, ix) for iy in range(len(grid.y)) for ix in range(len(grid.x))
               if grid.classes[iy, ix] is cls]
        if not idx:
            continue
        rects = [Rectangle((grid.x[ix] - dx / 2, grid.y[iy] - dy / 2), dx, dy) for iy, ix in idx]
        coll = PatchCollection(rects, facecolor=color, edgecolor="none")
        coll.set_gid(f"cells-{cls.value}")
        ax.add_collection(coll)
        handles.append(Patch(facecolor=color, edgecolor="k", lw=0.5, label=cls.value))
    ax.set_xlim(grid.x[0] - dx / 2, grid.x[-1] + dx / 2)
    ax.set_ylim(grid.y[0] - dy / 2, grid.y[-1] + dy / 2)
    ax.set_xlabel(grid.x_axis.name)
    ax.set_ylabel(grid.y_axis.name)
    ax.legend(handles=handles, loc="upper right", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def plot_bifurcation(diagram: BifurcationDiagram, path) -> None:
    if not diagram.entries:
        raise ValueError("nothing to plot")
    fig, axes = plt.subplots(3, 1, figsize=(6.0, 8.0), sharex=True)
    for ax, name in zip(axes, "ENP"):
        xs, ys, xt, yt = [], [], [], []
        for e in diagram.entries:
            if e.extrema is None:
                continue
            ex = e.extrema[name]
            pts = np.concatenate([ex.minima, ex.maxima])
            if len(pts):
                xs.extend([e.value] * len(pts))
                ys.extend(pts)
            else:
                xt.append(e.value)
                yt.append(ex.terminal)
        ax.plot(xt, yt, ".", color="C0", ms=4, label="steady state")
        ax.plot(xs, ys, ".", color="C3", ms=2, label="cycle extrema")
        if diagram.hopf_marker is not None:
            ax.axvline(diagram.hopf_marker, color="k", ls="--", lw=0.8)
        ax.set_ylabel(VARIABLE_LABELS[name])
    axes[0].legend(loc="best", fontsize=8, frameon=False)
    axes[-1].set_xlabel(diagram.parameter)
    fig.tight_layout()
    _save(fig, path)


def plot_prcc(table, path) -> None:
    """Final-time PRCC bars per output; significant bars are starred."""
    fig, axes = plt.subplots(len(table.outputs), 1, figsize=(7.0, 2.6 * len(table.outputs)),
                             sharex=True, squeeze=False)
    pos = np.arange(len(table.parameters))
    for ax, (j, out) in zip(axes[:, 0], enumerate(table.outputs)):
        r = table.prcc[:, j, -1]
        p = table.p[:, j, -1]
        ax.bar(pos, r, color=np.where(r < 0, "C0", "C3"))
        for x, rv, pv in zip(pos, r, p):
            if pv < 0.05:
                ax.text(x, rv + np.sign(rv) * 0.05, "*", ha="center", va="center")
        ax.axhline(0, color="k", lw=0.6)
        ax.set_ylim(-1.1, 1.1)
        ax.set_ylabel(f"PRCC ({out})")
    axes[-1, 0].set_xticks(pos, table.parameters, rotation=45)
    fig.tight_layout()
    _save(fig, path)


def plot_hopf(betas, margins, derivative, beta_sharp, path) -> None:
    """b1 b2 - b3 and d/dbeta (b3 - b1 b2) across beta with the Hopf point."""
    betas = np.asarray(betas, dtype=float)
    if betas.size == 0:
        raise ValueError("nothing to plot")
    fig, (a1, a2) = plt.subplots(2, 1, figsize=(6.0, 5.5), sharex=True)
    a1.plot(betas, margins, color="C0")
    a1.axhline(0, color="k", lw=0.6)
    a1.set_ylabel("b1 b2 - b3")
    a2.plot(betas, derivative, color="C1")
    a2.set_ylabel("d/dbeta (b3 - b1 b2)")
    a2.set_xlabel("beta")
    if beta_sharp is not None:
        for ax in (a1, a2):
            ax.axvline(beta_sharp, color="k", ls="--", lw=0.8)
    fig.tight_layout()
    _save(fig, path)


def render_svg(data, path, style: Mapping | None = None) -> None:
    """Render a :class:`ScanGrid` or a mapping of named (x, y) series to SVG."""
    style = dict(style or {})
    if isinstance(data, ScanGrid):
        plot_grid(data, path, **style)
    elif isinstance(data, BifurcationDiagram):
        plot_bifurcation(data, path)
    elif isinstance(data, Mapping):
        plot_series(data, path, **style)
    else:
        raise TypeError(f"cannot render {type(data).__name__}")
