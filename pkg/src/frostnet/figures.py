"""Render run figures next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_SAVE_OPTS = {"dpi": 120, "metadata": {"Date": None}}


def render_training_figures(report: dict, out_dir) -> list[Path]:
    """Loss curve and the per-epoch cost-weight trajectory."""
    out = Path(out_dir)
    epochs = [e["epoch"] for e in report["epochs"]]
    written = []

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(epochs, [e["mean_loss"] for e in report["epochs"]], lw=1.2)
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean training loss")
    ax.set_title(f"{report['run_id']}: training loss")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = out / "training_curves.png"
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    written.append(path)

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    ax1.plot(epochs, [e["miss_rate"] for e in report["epochs"]], lw=1.2, color="tab:red")
    ax1.set_ylabel("positive miss rate")
    ax1.set_ylim(-0.05, 1.05)
    ax1.grid(alpha=0.3)
    ax2.plot(epochs, [e["w1"] for e in report["epochs"]], lw=1.2, label="w1 (frosted)")
    ax2.plot(epochs, [e["w0"] for e in report["epochs"]], lw=1.2, label="w0 (healthy)")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("cost weight")
    ax2.legend(loc="best")
    ax2.grid(alpha=0.3)
    fig.suptitle(f"{report['run_id']}: cost-weight trajectory")
    fig.tight_layout()
    path = out / "weight_trajectory.png"
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    written.append(path)
    return written


def render_ablation_figure(table: dict, out_dir) -> Path:
    """Grouped bars of the median metrics per loss mode."""
    out = Path(out_dir)
    labels = [row["label"] for row in table["rows"]]
    keys = ("accuracy", "precision", "recall", "f1")
    fig, ax = plt.subplots(figsize=(8, 4.5))
    width = 0.8 / len(keys)
    for j, key in enumerate(keys):
        values = [100 * row["median"][key] for row in table["rows"]]
        ax.bar([i + j * width for i in range(len(labels))], values, width, label=key)
    ax.set_xticks([i + 1.5 * width for i in range(len(labels))])
    ax.set_xticklabels(labels, rotation=12, ha="right")
    ax.set_ylabel("median metric (%)")
    ax.set_title(f"ablation over seeds {table['seeds']}")
    ax.legend(loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    path = out / "ablation_metrics.png"
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path
