"""Figures for recall reports, written next to the text/JSON output."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

# one hue family per method so that configurations of a method read as a group
_CMAPS = {"fake words": "Blues", "lexical LSH": "Oranges", "k-d tree": "Greens"}


def _colors(report):
    groups = {}
    for row in report.rows:
        groups.setdefault(row.model, []).append(row)
    colors = {}
    for model, rows in groups.items():
        cmap = plt.get_cmap(_CMAPS.get(model, "Greys"))
        for i, row in enumerate(rows):
            colors[id(row)] = cmap(0.45 + 0.5 * (i + 1) / (len(rows) + 1))
    return colors


def plot_recall_vs_depth(report, path):
    colors = _colors(report)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for row in report.rows:
            ax.plot(report.depths, [row.recall[d] for d in report.depths], marker="o", ms=3,
                    color=colors[id(row)], label=f"{row.model} {row.configuration}")
        ax.set_xscale("log")
        ax.set_xticks(report.depths)
        ax.set_xticklabels([str(d) for d in report.depths])
        ax.set_ylim(-0.02, 1.02)
        ax.set_xlabel("retrieval depth d")
        ax.set_ylabel(f"R@({report.k}, d)")
        ax.legend(loc="center left", bbox_to_anchor=(1.01, 0.5), frameon=False)
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def plot_tradeoff(report, path):
    """Recall at the deepest depth against mean latency; marker area tracks index size."""
    colors = _colors(report)
    d = max(report.depths)
    rows = [r for r in report.rows if r.latency_mean_ms is not None]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        if rows:
            biggest = max(r.index_size_bytes for r in rows) or 1
            for row in rows:
                ax.scatter(row.latency_mean_ms, row.recall[d], s=20 + 180 * row.index_size_bytes / biggest,
                           color=colors[id(row)], edgecolor="k", linewidth=0.4, alpha=0.85,
                           label=f"{row.model} {row.configuration}")
            ax.legend(loc="center left", bbox_to_anchor=(1.01, 0.5), frameon=False)
        else:
            ax.text(0.5, 0.5, "latency not measured (parallel run)", ha="center", transform=ax.transAxes)
        ax.set_xlabel("mean query latency (ms)")
        ax.set_ylabel(f"R@({report.k}, {d})")
        ax.set_ylim(-0.02, 1.02)
        fig.savefig(path)
        plt.close(fig)
    return Path(path)


def render_report_figures(report, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [plot_recall_vs_depth(report, out_dir / "recall_vs_depth.png"),
            plot_tradeoff(report, out_dir / "recall_vs_latency.png")]
