"""Figures written next to the JSON/Markdown reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "figure.dpi": 100,
}

# PNG metadata otherwise embeds the matplotlib version
_META = {"Software": None}


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_confusion(report, path, normalize=True):
    """Heatmap of a MetricReport's confusion matrix, rows normalised by support."""
    cells = np.asarray(report.confusion, dtype=float)
    labels = [str(l) for l in report.labels]
    shown = cells
    if normalize:
        rows = cells.sum(axis=1, keepdims=True)
        shown = np.divide(cells, rows, out=np.zeros_like(cells), where=rows > 0)
    with plt.rc_context(STYLE):
        size = 1.0 + 0.7 * len(labels)
        fig, ax = plt.subplots(figsize=(size + 0.8, size))
        im = ax.imshow(shown, cmap="Blues", vmin=0, vmax=1 if normalize else None)
        ax.set_xticks(range(len(labels)), labels)
        ax.set_yticks(range(len(labels)), labels)
        ax.set_xlabel("predicted")
        ax.set_ylabel("gold")
        ax.set_title(report.name or "confusion")
        for i in range(len(labels)):
            for j in range(len(labels)):
                dark = shown[i, j] > 0.5 * (shown.max() or 1)
                ax.text(j, i, f"{int(cells[i, j])}", ha="center", va="center",
                        color="white" if dark else "black")
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
        return _save(fig, path)


def plot_comparison(table, path):
    """Grouped bars, one group per system, one bar per metric column."""
    names = [n for n, _ in table.rows] + ["Mean", "Median"]
    values = np.array([v for _, v in table.rows] + [table.mean, table.median])
    n_sys, n_col = values.shape
    width = 0.8 / n_col
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 1.1 * n_sys + 1), 3.2))
        x = np.arange(n_sys)
        for j, col in enumerate(table.columns):
            ax.bar(x + (j - (n_col - 1) / 2) * width, values[:, j], width, label=col)
        ax.set_xticks(x, names, rotation=30, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("score")
        ax.axvline(n_sys - 2.5, color="0.6", lw=0.8, ls="--")
        ax.legend(ncol=min(n_col, 5), loc="lower center", bbox_to_anchor=(0.5, 1.0), frameon=False)
        return _save(fig, path)


def plot_disagreement(report, path):
    """Partition sizes and per-system/or-union recall for a pair of systems."""
    a, b = report.names
    parts = ["both correct", f"only {a}", f"only {b}", "both wrong"]
    counts = [len(report.both_correct), len(report.only_a), len(report.only_b), len(report.both_wrong)]
    with plt.rc_context(STYLE):
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7, 2.8))
        ax1.barh(parts[::-1], counts[::-1], color=["0.3", "C1", "C0", "C2"])
        ax1.set_xlabel("samples")
        ax2.bar([a, b, "or-union"], [report.recall_a, report.recall_b, report.union_recall],
                color=["C0", "C1", "C3"])
        ax2.set_ylim(0, 1.05)
        ax2.set_ylabel(f"recall (class {report.positive})")
        fig.tight_layout()
        return _save(fig, path)
