"""
Chart generation for registration diagnostics
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from ..bspline import TraceEntry  # noqa: E402
from ..bspline.io import trace_frame  # noqa: E402
from ..imaging import ScalarImage  # noqa: E402
from ..metrics import MetricsReport, pair_frame  # noqa: E402

logger = logging.getLogger(__name__)


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    logger.info(f"Wrote chart {path}")
    return path


def plot_loss_trace(trace: List[TraceEntry], path: Union[str, Path], title: str = "B-spline loss") -> Path:
    """Total, NCC and regularization curves of one optimization"""
    df = trace_frame(trace)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(df["iteration"], df["total"], label="total")
    ax.plot(df["iteration"], df["ncc"], label="ncc")
    ax.plot(df["iteration"], df["reg"], label="reg")
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_landmarks(
    fixed_points: np.ndarray,
    moving_truth: np.ndarray,
    mapped: np.ndarray,
    image: Optional[ScalarImage],
    path: Union[str, Path],
    title: str = "Landmarks"
) -> Path:
    """Overlay of fixed landmarks, moving truth and mapped landmarks"""
    fig, ax = plt.subplots(figsize=(6, 6))
    if image is not None:
        ax.imshow(image.pixels, cmap="gray", vmin=0.0, vmax=1.0)
    ax.scatter(fixed_points[:, 0], fixed_points[:, 1], s=14, marker="o", label="fixed")
    ax.scatter(moving_truth[:, 0], moving_truth[:, 1], s=14, marker="x", label="moving truth")
    ax.scatter(mapped[:, 0], mapped[:, 1], s=14, marker="+", label="mapped")
    ax.set_title(title)
    ax.legend(loc="upper right")
    if image is None:
        ax.invert_yaxis()
    return _save(fig, path)


def plot_metrics(report: MetricsReport, path: Union[str, Path], title: str = "rTRE per pair") -> Path:
    """Median, mean and max rTRE bars per pair"""
    df: pd.DataFrame = pair_frame(report)
    labels = [f"{f}\n{m}" for f, m in zip(df["fixed_id"], df["moving_id"])]
    positions = np.arange(len(df))
    width = 0.27
    fig, ax = plt.subplots(figsize=(max(6, len(df) * 0.9), 4))
    ax.bar(positions - width, df["median_rtre"], width, label="median")
    ax.bar(positions, df["mean_rtre"], width, label="mean")
    ax.bar(positions + width, df["max_rtre"], width, label="max")
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, fontsize=7)
    ax.set_ylabel("rTRE")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)
