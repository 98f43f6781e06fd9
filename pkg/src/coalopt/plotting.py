"""Figures rendered next to the delimited output files.

Uses the object-oriented Matplotlib API with the Agg canvas so nothing touches
pyplot's global state; PNG metadata is stripped so reruns are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
DPI = 120


def _figure(width=4.5, height=3.4, projection=None):
    import matplotlib

    with matplotlib.rc_context(STYLE):
        fig = Figure(figsize=(width, height), dpi=DPI)
        FigureCanvasAgg(fig)
        ax = fig.add_subplot(1, 1, 1, projection=projection)
    return fig, ax


def save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", dpi=DPI, metadata={"Software": None})
    return path


def front_figure(values: np.ndarray, labels: list[str], title: str = "", highlight: np.ndarray | None = None) -> Figure:
    """Scatter of a 2- or 3-objective front in Mt; ``highlight`` marks one point."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    m = values.shape[1] if values.size else len(labels)
    if m == 3:
        fig, ax = _figure(4.8, 4.0, projection="3d")
        ax.scatter(values[:, 0], values[:, 1], values[:, 2], s=10, c="k", depthshade=False)
        if highlight is not None:
            ax.scatter(*np.asarray(highlight, dtype=float), s=40, c="tab:red", marker="*", depthshade=False)
        ax.set_zlabel(f"{labels[2]} [Mt]")
    elif m == 2:
        fig, ax = _figure()
        order = np.argsort(values[:, 0]) if len(values) else []
        ax.plot(values[order, 0], values[order, 1], "o-", ms=3, lw=0.8, c="k")
        if highlight is not None:
            ax.plot(*np.asarray(highlight, dtype=float), "*", ms=10, c="tab:red", label="max total")
            ax.legend(frameon=False)
    else:
        fig, ax = _figure()
        ax.bar(range(len(values)), values.sum(axis=1), color="0.4")
        ax.set_xlabel("point")
        ax.set_ylabel("total [Mt]")
        ax.set_title(title)
        return fig
    ax.set_xlabel(f"{labels[0]} [Mt]")
    ax.set_ylabel(f"{labels[1]} [Mt]")
    ax.set_title(title)
    return fig


def comparison_figure(rows: list[dict], agent_labels: list[str], criterion: str) -> Figure:
    """Stacked per-well totals of the selected point for each structure."""
    rows = [r for r in rows if r["criterion"] == criterion]
    fig, ax = _figure(5.5, 3.4)
    bottom = np.zeros(len(rows))
    for w, label in enumerate(agent_labels):
        heights = np.array([r["well_totals_mt"][w] for r in rows])
        ax.bar(range(len(rows)), heights, bottom=bottom, label=label)
        bottom += heights
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels([f"{r['structure']}\n({r['method']})" for r in rows], rotation=0, fontsize=6)
    ax.set_ylabel("injected CO$_2$ [Mt]")
    ax.set_title(criterion)
    ax.legend(frameon=False, ncol=len(agent_labels))
    fig.tight_layout()
    return fig


def pressure_figure(field: np.ndarray, wells: list[tuple[int, int]], title: str = "") -> Figure:
    """Map of ``p / p_ob`` with well locations."""
    fig, ax = _figure(4.2, 3.6)
    im = ax.imshow(field.T, origin="lower", cmap="viridis")
    for i, j in wells:
        ax.plot(i, j, "w^", ms=5)
    fig.colorbar(im, ax=ax, label="p / p$_{ob}$")
    ax.set_xlabel("i")
    ax.set_ylabel("j")
    ax.set_title(title)
    return fig
