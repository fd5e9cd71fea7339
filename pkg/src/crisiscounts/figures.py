"""Figure rendering for experiment reports.

All figures are written as SVG through the Agg backend so runs are
reproducible byte-for-byte: the SVG hash salt is pinned and the
creation-date metadata is stripped.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "crisiscounts"


def _save(fig, path) -> None:
    # Date metadata would change across runs
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def reliability_figure(bins, path, title: str = "Reliability") -> None:
    """Bar chart of per-bin accuracy against the diagonal."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    centers = [(b.lower + b.upper) / 2 for b in bins]
    widths = [b.upper - b.lower for b in bins]
    heights = [b.accuracy for b in bins]
    ax.bar(centers, heights, width=widths, align="center",
           edgecolor="black", linewidth=0.5, color="#4878a8", alpha=0.85)
    ax.plot([0, 1], [0, 1], linestyle="--", color="gray", linewidth=1)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("confidence")
    ax.set_ylabel("accuracy")
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def confusion_figure(matrix, labels, path, title: str = "Confusion") -> None:
    """Heatmap of a row-normalized confusion matrix."""
    fig, ax = plt.subplots(figsize=(4.5, 4))
    image = ax.imshow(matrix, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(labels)), labels=labels, rotation=45, ha="right")
    ax.set_yticks(range(len(labels)), labels=labels)
    ax.set_xlabel("predicted")
    ax.set_ylabel("gold")
    ax.set_title(title)
    for i, row in enumerate(matrix):
        for j, value in enumerate(row):
            color = "white" if value > 0.5 else "black"
            ax.text(j, i, f"{value:.2f}", ha="center", va="center",
                    color=color, fontsize=8)
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    _save(fig, path)


def fewshot_figure(fractions, values, path, metric: str = "exact match") -> None:
    """Few-shot curve over training fractions.

    Fractions span three orders of magnitude plus zero, so they are
    placed at equal spacing with percentage tick labels rather than on
    a log axis that could not hold the zero point.
    """
    fig, ax = plt.subplots(figsize=(5, 3.5))
    positions = range(len(fractions))
    ax.plot(positions, values, marker="o", color="#4878a8")
    ax.set_xticks(list(positions),
                  labels=[f"{f:g}%" for f in (100 * f for f in fractions)])
    ax.set_xlabel("training fraction")
    ax.set_ylabel(metric)
    ax.set_ylim(0, 1)
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.tight_layout()
    _save(fig, path)


def timeline_figure(dates, totals, path, victim_type: str = "") -> None:
    """Daily aggregated counts over time."""
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(dates, totals, marker=".", linewidth=1, color="#a84848")
    ax.set_xlabel("date")
    ax.set_ylabel(f"{victim_type} count".strip())
    ax.grid(True, linewidth=0.3, alpha=0.5)
    fig.autofmt_xdate(rotation=30)
    fig.tight_layout()
    _save(fig, path)
