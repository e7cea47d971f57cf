"""Static PNG figures from grid summaries."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import GroupSummary  # noqa: E402

SAD_COLORS = {0.0: "tab:blue", 0.01: "tab:cyan", 0.05: "tab:green", 0.1: "tab:red"}


def plot_unsup(groups: list[GroupSummary], path) -> Path:
    """One panel per normal class: mean AUC versus pollution ratio, a line per method."""
    normals = sorted({g.normal_class for g in groups})
    methods = sorted({g.method for g in groups})
    fig, axes = plt.subplots(1, len(normals), figsize=(4 * len(normals), 3.6), sharey=True, squeeze=False)
    for ax, normal in zip(axes[0], normals):
        for method in methods:
            pts = sorted((g.ratio, g.mean_auc, g.mean_std) for g in groups
                         if g.method == method and g.normal_class == normal)
            if not pts:
                continue
            r, m, s = map(np.array, zip(*pts))
            ax.errorbar(100 * r, m, yerr=s, marker="o", ms=3, capsize=2, label=method)
        ax.set_title(f"normal class {normal}")
        ax.set_xlabel("pollution ratio (%)")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel("ROC AUC")
    handles, labels = axes[0][-1].get_legend_handles_labels()
    fig.legend(handles, labels, fontsize=7, loc="center left", bbox_to_anchor=(1.0, 0.5))
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sad(groups: list[GroupSummary], path) -> Path:
    """Grouped bars: mean AUC per normal class, a bar per labeled-anomaly ratio."""
    normals = sorted({g.normal_class for g in groups})
    ratios = sorted({g.ratio for g in groups})
    width = 0.8 / max(len(ratios), 1)
    fig, ax = plt.subplots(figsize=(1.8 * len(normals) + 2, 3.6))
    for j, ratio in enumerate(ratios):
        vals = {g.normal_class: g for g in groups if g.ratio == ratio}
        xs = np.arange(len(normals)) + (j - (len(ratios) - 1) / 2) * width
        means = [vals[n].mean_auc if n in vals else np.nan for n in normals]
        stds = [vals[n].mean_std if n in vals else 0.0 for n in normals]
        ax.bar(xs, means, width, yerr=stds, capsize=2, color=SAD_COLORS.get(ratio), label=f"{100 * ratio:g}%")
    ax.set_xticks(np.arange(len(normals)), [f"class {n}" for n in normals])
    ax.set_ylabel("ROC AUC")
    ax.set_ylim(0, 1)
    ax.legend(title="labeled", fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
