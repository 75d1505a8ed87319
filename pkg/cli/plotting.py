"""
Static loss / learning-rate plot of a metrics log.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from training.metrics_log import read_metrics  # noqa: E402


def plot_metrics(metrics_path, output_path):
    frame = read_metrics(metrics_path)
    fig, (loss_ax, lr_ax) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for stage, rows in frame.groupby("stage"):
        loss_ax.plot(rows["step"], rows["loss"], label=f"stage {stage}")
        lr_ax.plot(rows["step"], rows["lr"], label=f"stage {stage}")
    loss_ax.set_ylabel("loss")
    loss_ax.legend()
    lr_ax.set_ylabel("learning rate")
    lr_ax.set_xlabel("step")
    fig.tight_layout()
    fig.savefig(output_path)
    plt.close(fig)
    return frame
