"""Figure rendering for evaluation reports.

Every eval CLI path writes a PNG next to its CSV output so score tables
come with a visual summary. Rendering uses the Agg backend and never
requires a display.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import ManualScoreReport, SemanticScoreReport

_BAR_COLOR = "#4c78a8"
_ACCENT_COLOR = "#f58518"


def _grouped_bar(path: Path, groups: Sequence[str], values: Sequence[float], title: str,
                 ylabel: str, ylim: tuple[float, float]) -> Path:
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(groups) + 2), 3.5))
    ax.bar(range(len(groups)), values, color=_BAR_COLOR)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups, rotation=30, ha="right")
    ax.set_ylabel(ylabel)
    ax.set_ylim(*ylim)
    ax.set_title(title)
    for index, value in enumerate(values):
        ax.text(index, value, f"{value:.2f}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_manual_figure(reports: Sequence[ManualScoreReport], path: str | Path) -> Path:
    """Bar chart of per-group mean rubric scores (scale 0 to 1.5)."""
    return _grouped_bar(
        Path(path),
        [r.group_id for r in reports],
        [r.mean_score for r in reports],
        title="Manual rubric scores",
        ylabel="mean weighted score",
        ylim=(0.0, 1.55),
    )


def render_semantic_figure(reports: Sequence[SemanticScoreReport], path: str | Path) -> Path:
    """Per-group mean bucket scores plus the within-group score spread."""
    path = Path(path)
    groups = [r.group_id for r in reports]
    means = [r.mean_score for r in reports]
    fig, (ax_mean, ax_items) = plt.subplots(
        1, 2, figsize=(max(7.0, 1.6 * len(groups) + 4), 3.5)
    )
    ax_mean.bar(range(len(groups)), means, color=_BAR_COLOR)
    ax_mean.set_xticks(range(len(groups)))
    ax_mean.set_xticklabels(groups, rotation=30, ha="right")
    ax_mean.set_ylim(0.0, 1.05)
    ax_mean.set_ylabel("mean bucket score")
    ax_mean.set_title("Semantic scores by group")
    for offset, report in enumerate(reports):
        xs = [offset + 1] * len(report.items)
        ax_items.scatter(xs, [i.score for i in report.items], color=_ACCENT_COLOR, alpha=0.6, s=18)
    ax_items.set_xticks(range(1, len(groups) + 1))
    ax_items.set_xticklabels(groups, rotation=30, ha="right")
    ax_items.set_ylim(-0.05, 1.05)
    ax_items.set_ylabel("item bucket score")
    ax_items.set_title("Per-item spread")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_diversity_figure(
    rows: Sequence[tuple[str, float, float]], path: str | Path
) -> Path:
    """Mean pairwise similarity per group; lower bars mean more diversity."""
    path = Path(path)
    groups = [g for g, _, _ in rows]
    means = [m for _, m, _ in rows]
    variances = [v for _, _, v in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(groups) + 2), 3.5))
    ax.bar(range(len(groups)), means, yerr=[v ** 0.5 for v in variances],
           color=_BAR_COLOR, capsize=4)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels(groups, rotation=30, ha="right")
    ax.set_ylim(-1.05, 1.05)
    ax.set_ylabel("mean pairwise cosine")
    ax.set_title("Intra-group similarity (lower = more diverse)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
