"""Figure rendering for CLI reports.

Each function writes one figure file next to the JSON report. PNG
metadata that varies between runs (creation date) is stripped so report
outputs stay byte-reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_METADATA = {"Software": None}


def _save(fig, path):
    path = str(path)
    if path.endswith(".png"):
        fig.savefig(path, dpi=150, bbox_inches="tight", metadata=_PNG_METADATA)
    else:
        fig.savefig(path, bbox_inches="tight", metadata={"CreationDate": None})
    plt.close(fig)


def correlation_heatmap(categories, matrix, path, title="Category Pearson correlation"):
    """Heatmap of a (possibly partially undefined) correlation matrix."""
    data = np.array(
        [[np.nan if v is None else v for v in row] for row in matrix], dtype=float
    )
    k = len(categories)
    fig, ax = plt.subplots(figsize=(max(4, 0.6 * k + 2), max(3.5, 0.6 * k + 1.5)))
    im = ax.imshow(data, vmin=-1, vmax=1, cmap="RdYlGn")
    ax.set_xticks(range(k), categories, rotation=45, ha="right")
    ax.set_yticks(range(k), categories)
    for i in range(k):
        for j in range(k):
            label = "n/a" if np.isnan(data[i, j]) else f"{data[i, j]:.2f}"
            ax.text(j, i, label, ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, fraction=0.046)
    ax.set_title(title)
    _save(fig, path)


def shapley_bars(per_player, path, title="Shapley value per souping candidate"):
    players = list(per_player)
    values = [per_player[p] for p in players]
    fig, ax = plt.subplots(figsize=(max(4, 0.9 * len(players) + 2), 3.5))
    ax.bar(players, values, color="seagreen")
    ax.axhline(0, color="black", linewidth=0.8)
    ax.set_ylabel("Shapley value")
    ax.set_title(title)
    plt.setp(ax.get_xticklabels(), rotation=30, ha="right")
    _save(fig, path)


def correlation_shift_figure(report, path):
    """Paired pre/post bars per category pair plus the mean shift."""
    pairs = list(report.per_pair)
    labels = [f"{a}\n{b}" for a, b in pairs]
    pre = [report.per_pair[p][0] for p in pairs]
    post = [report.per_pair[p][1] for p in pairs]
    x = np.arange(len(pairs))
    fig, ax = plt.subplots(figsize=(max(4, 0.8 * len(pairs) + 2), 3.5))
    ax.bar(x - 0.2, pre, width=0.4, label="before souping", color="steelblue")
    ax.bar(x + 0.2, post, width=0.4, label="after souping", color="darkorange")
    ax.set_xticks(x, labels, fontsize=8)
    ax.set_ylabel("Pearson correlation")
    ax.set_title(
        f"Mean off-diagonal correlation: {report.pre_mean:.3f} -> "
        f"{report.post_mean:.3f} (delta {report.delta:+.3f})"
    )
    ax.legend()
    _save(fig, path)


def search_trace(search_report, path):
    """Objective of every evaluated recipe in enumeration order."""
    objectives = [e["objective"] for e in search_report["evaluated"]]
    best = search_report["best_objective"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(len(objectives)), objectives, marker="o", markersize=3, linewidth=0.8)
    ax.axhline(best, color="firebrick", linestyle="--", linewidth=0.8,
               label=f"best = {best:.3f}")
    ax.set_xlabel("recipe index (enumeration order)")
    ax.set_ylabel("macro objective")
    ax.set_title("Weight lattice sweep")
    ax.legend()
    _save(fig, path)
