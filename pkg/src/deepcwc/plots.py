"""Figure rendering for reports and residual dumps.

Everything draws through the Agg backend straight to files, next to the
delimited output the CLI already writes.  The dump CSV stays the canonical
plot-ready artifact; these renderers are a convenience on top of it.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import EvalReport


def confusion_heatmap(report: EvalReport, out_path) -> Path:
    out_path = Path(out_path)
    fig, ax = plt.subplots(figsize=(5.5, 4.8))
    im = ax.imshow(report.confusion, cmap="Blues")
    fig.colorbar(im, ax=ax, label="count")
    ax.set_xlabel("predicted class")
    ax.set_ylabel("true class")
    ax.set_title(f"{report.kind} run, accuracy {report.accuracy:.3f}")
    if report.num_classes <= 20:
        ax.set_xticks(range(report.num_classes))
        ax.set_yticks(range(report.num_classes))
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def accuracy_bars(report: EvalReport, out_path) -> Path:
    """Side-by-side accuracy of the two single views and the fused run."""
    if report.kind != "fused":
        raise ValueError("accuracy_bars needs a fused report")
    out_path = Path(out_path)
    names = ["CR (image)", "CR (deep)", "fused"]
    values = [report.accuracy_image, report.accuracy_deep, report.accuracy]
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    bars = ax.bar(names, values, color=["#4878d0", "#ee854a", "#6acc64"])
    for bar, value in zip(bars, values):
        ax.text(
            bar.get_x() + bar.get_width() / 2,
            value,
            f"{value:.3f}",
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    improvement = report.improvement
    if improvement is not None:
        ax.set_title(f"improvement rate {improvement:.4f}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def residual_bars(dump_table: np.ndarray, query_id: int, out_path) -> Path:
    """Per-class residual triplet (image, deep, fused) for one dumped query."""
    out_path = Path(out_path)
    rows = dump_table[dump_table[:, 0] == query_id]
    if rows.size == 0:
        raise ValueError(f"query {query_id} not present in the dump")
    classes = rows[:, 2].astype(int)
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(4.8, 0.55 * len(classes)), 3.6))
    ax.bar(classes - width, rows[:, 3], width, label="image", color="#4878d0")
    ax.bar(classes, rows[:, 4], width, label="deep", color="#ee854a")
    ax.bar(classes + width, rows[:, 5], width, label="fused", color="#6acc64")
    truth = int(rows[0, 1])
    ax.axvline(truth, color="0.4", linestyle=":", linewidth=1, label=f"true class {truth}")
    ax.set_xticks(classes)
    ax.set_xlabel("class")
    ax.set_ylabel("residual")
    ax.set_title(f"query {query_id}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def render_report_figures(report: EvalReport, out_dir, stem: str = "report") -> list:
    """Render the figures that make sense for the given report kind."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [confusion_heatmap(report, out_dir / f"{stem}_confusion.png")]
    if report.kind == "fused":
        paths.append(accuracy_bars(report, out_dir / f"{stem}_accuracy.png"))
    return paths


def render_residual_figures(
    dump_table: np.ndarray, out_dir, max_queries: int = 4
) -> list:
    if dump_table.size == 0:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for query_id in np.unique(dump_table[:, 0].astype(int))[:max_queries]:
        paths.append(
            residual_bars(dump_table, int(query_id), out_dir / f"residuals_q{query_id}.png")
        )
    return paths
