"""Figure rendering for the stats report path.

Kept out of the analytics module on purpose: statistics stay tabular and
library-consumable, and this module only turns an already-computed
summary plus its records into PNG files next to the delimited output.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analytics import DEFAULT_BAND, SessionRecord, StatsSummary


def _scatter_with_trend(ax, xs, ys, slope, intercept_x, intercept_y):
    ax.scatter(xs, ys, s=14, alpha=0.6, color="#1f77b4", edgecolors="none")
    if slope is not None:
        x0, x1 = min(xs), max(xs)
        # Line through the mean point with the fitted slope.
        y0 = intercept_y + slope * (x0 - intercept_x)
        y1 = intercept_y + slope * (x1 - intercept_x)
        ax.plot([x0, x1], [y0, y1], color="#d62728", linewidth=1.5)


def render_stats_figures(
    records: Sequence[SessionRecord],
    summary: StatsSummary,
    out_dir: str | Path,
    band: tuple[float, float] = DEFAULT_BAND,
) -> list[Path]:
    """Write the three stats figures into ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    complexity = [r.complexity for r in records]
    scores = [r.score for r in records]
    disputes = [1.0 if r.disputed else 0.0 for r in records]
    mean_c = sum(complexity) / len(complexity)
    paths: list[Path] = []

    fig, ax = plt.subplots(figsize=(6, 4))
    _scatter_with_trend(
        ax,
        complexity,
        scores,
        summary.slope_complexity_score,
        mean_c,
        sum(scores) / len(scores),
    )
    label = (
        f"r = {summary.r_complexity_score:.2f}"
        if summary.r_complexity_score is not None
        else "r undefined"
    )
    ax.set_xlabel("complexity index")
    ax.set_ylabel("session score")
    ax.set_title(f"Complexity vs score ({label})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    path = out_dir / "complexity_vs_score.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    width = 0.5
    buckets: dict[int, list[float]] = {}
    for c, d in zip(complexity, disputes):
        buckets.setdefault(int(c / width), []).append(d)
    xs = [k * width + width / 2 for k in sorted(buckets)]
    rates = [sum(buckets[k]) / len(buckets[k]) for k in sorted(buckets)]
    ax.bar(xs, rates, width=width * 0.9, color="#ff7f0e", alpha=0.8)
    label = (
        f"r = {summary.r_complexity_dispute:.2f}"
        if summary.r_complexity_dispute is not None
        else "r undefined"
    )
    ax.set_xlabel("complexity index (bucketed)")
    ax.set_ylabel("dispute rate")
    ax.set_title(f"Complexity vs dispute rate ({label})")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = out_dir / "complexity_vs_disputes.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(complexity, bins=20, color="#2ca02c", alpha=0.8)
    ax.axvspan(band[0], band[1], color="#9467bd", alpha=0.25, label="calibrated band")
    ax.set_xlabel("complexity index")
    ax.set_ylabel("sessions")
    ax.set_title("Complexity distribution")
    ax.legend(loc="upper right")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    path = out_dir / "complexity_histogram.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths
