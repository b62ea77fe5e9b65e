from typing import Optional

import matplotlib

matplotlib.use("Agg")
import pandas as pd
from matplotlib import pyplot as plt

from src.evaluation.sweep import SweepResult

_LOSS_COLUMNS_EXCLUDED = ("step", "lr_main", "lr_disc")


def plot_losses(
    history: pd.DataFrame,
    save_path: str,
    title: Optional[str] = None,
) -> None:
    """
    One panel per recorded loss term against the step counter, log-scaled.
    """
    columns = [c for c in history.columns if c not in _LOSS_COLUMNS_EXCLUDED]
    fig, axes = plt.subplots(
        len(columns), 1, figsize=(6, 2 * len(columns)), sharex=True, squeeze=False
    )
    for ax, column in zip(axes[:, 0], columns):
        values = history[column]
        ax.plot(history["step"], values)
        if (values > 0).all():
            ax.set_yscale("log")
        ax.set_ylabel(column)
    axes[-1, 0].set_xlabel("step")
    if title is not None:
        axes[0, 0].set_title(title)
    fig.savefig(save_path, bbox_inches="tight")
    plt.close(fig)


def plot_sweep(
    sweep: SweepResult,
    save_path: str,
    title: Optional[str] = None,
) -> None:
    """
    Output against ground-truth channel log-energy ratio, one panel per blend weight.
    """
    lambdas = sorted(sweep.correlations)
    fig, axes = plt.subplots(
        1, len(lambdas), figsize=(3 * len(lambdas), 3), sharey=True, squeeze=False
    )
    for ax, lam in zip(axes[0], lambdas):
        group = sweep.frame[sweep.frame["lambda"] == lam]
        ax.scatter(group["gt_ratio"], group["out_ratio"], s=8, alpha=0.7)
        ax.set_title(f"lambda={lam:g}, r={sweep.correlations[lam]:.2f}")
        ax.set_xlabel("ground truth log L/R")
    axes[0, 0].set_ylabel("output log L/R")
    if title is not None:
        fig.suptitle(title)
    fig.savefig(save_path, bbox_inches="tight")
    plt.close(fig)
