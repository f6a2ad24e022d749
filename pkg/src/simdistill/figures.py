"""Matplotlib rendering of report data to PNG files.

Every writer pairs with one of the TSV reports: angle histograms against the
theoretical density, training history, and per-batch MRR traces.  Figures
are rendered with the Agg backend and stripped of metadata so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KWARGS = {"dpi": 110, "metadata": {"Software": None, "CreationDate": None}}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_angle_figure(path, centers, density, theory, title):
    """Histogram bars with the theoretical density overlaid."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    width = centers[1] - centers[0] if len(centers) > 1 else np.pi
    ax.bar(centers, density, width=width * 0.92, color="#7aa6c2", label="sample")
    ax.plot(centers, theory, color="#c24a3a", lw=1.6, label="theory")
    ax.set_xlabel("angle (rad)")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def save_history_figure(path, history):
    """Loss curve with the learning-rate schedule on a twin axis."""
    steps = [h[0] for h in history]
    lrs = [h[1] for h in history]
    losses = [h[2] for h in history]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(steps, losses, color="#2d5d7b", lw=1.0)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    twin = ax.twinx()
    twin.plot(steps, lrs, color="#c2a34a", lw=1.0, alpha=0.8)
    twin.set_ylabel("learning rate")
    ax.set_title("training history")
    _save(fig, path)


def save_mrr_figure(path, steps, per_teacher, fused):
    """Per-batch MRR of each teacher's similarities vs. the fused matrix."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k, series in enumerate(per_teacher):
        ax.plot(steps, series, lw=0.8, alpha=0.7, label=f"teacher {k}")
    ax.plot(steps, fused, color="black", lw=1.4, label="fused")
    ax.set_xlabel("step")
    ax.set_ylabel("batch MRR")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("fused vs. teacher batch MRR")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
