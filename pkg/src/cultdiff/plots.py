"""Static report figures: SEM bar charts and per-group scatter plots."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .metrics import AggregateRow


def bar_chart_with_sem(
    rows: Sequence[AggregateRow],
    path: str | Path,
    title: str = "",
    ylabel: str = "mean score",
) -> None:
    """One bar per group, ranked highest to lowest, SEM error bars."""
    ordered = sorted(rows, key=lambda r: -r.mean)
    labels = [" / ".join(str(g) for g in r.group) for r in ordered]
    means = [r.mean for r in ordered]
    errors = [r.sem if r.sem is not None else 0.0 for r in ordered]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(labels)), 4))
    ax.bar(range(len(labels)), means, yerr=errors, capsize=3, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_ylim(0, 5.2)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def scatter_grid_with_r(
    per_group_points: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    per_group_r: Mapping[str, Optional[float]],
    path: str | Path,
    xlabel: str,
    ylabel: str,
) -> None:
    """One scatter subplot per group with its Pearson r in the title."""
    groups = sorted(per_group_points)
    ncols = min(5, max(1, len(groups)))
    nrows = (len(groups) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 3 * nrows), squeeze=False)
    for i, group in enumerate(groups):
        ax = axes[i // ncols][i % ncols]
        xs, ys = per_group_points[group]
        ax.scatter(xs, ys, s=12, alpha=0.7)
        r = per_group_r.get(group)
        r_text = "undefined" if r is None else f"{r:.2f}"
        ax.set_title(f"{group} (r = {r_text})", fontsize=9)
        ax.set_xlim(0.5, 5.5)
        ax.set_ylim(0.5, 5.5)
        ax.set_xlabel(xlabel, fontsize=8)
        ax.set_ylabel(ylabel, fontsize=8)
    for j in range(len(groups), nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
