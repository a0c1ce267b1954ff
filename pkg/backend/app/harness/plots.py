"""
Static SVG plots: linear axes for state components, log-log axes for metrics.
"""

from pathlib import Path
from typing import Dict, Iterable, Union
import numpy as np
import pandas as pd
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from app.core.logging import setup_logger

logger = setup_logger(__name__)

METRIC_LABELS = {
    "gap_xhat": "primal-dual gap",
    "feas_xhat": "feasibility violation",
    "iterate_err": "iterate error",
    "vel_norm": "velocity norm",
}


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    logger.info(f"wrote plot {path}")
    return path


def _positive(t: np.ndarray, values: np.ndarray):
    mask = values > 0
    return t[mask], values[mask]


def plot_positions(frame: pd.DataFrame, path: Union[str, Path], title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for col in (c for c in frame.columns if c.startswith("x_")):
        ax.plot(frame["t"], frame[col], label=col)
    ax.set_xlabel("t")
    ax.set_ylabel("x(t)")
    ax.set_title(title)
    ax.grid(True)
    ax.legend(loc="best")
    return _save(fig, path)


def plot_metrics(frame: pd.DataFrame, path: Union[str, Path], title: str = "",
                 metrics: Iterable[str] = tuple(METRIC_LABELS)) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    t = frame["t"].to_numpy()
    for metric in metrics:
        ts, vs = _positive(t, frame[metric].to_numpy())
        if ts.size:
            ax.loglog(ts, vs, label=METRIC_LABELS.get(metric, metric))
    ax.set_xlabel("t")
    ax.set_title(title)
    ax.grid(True, which="both")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_overlay(frames: Dict[str, pd.DataFrame], metric: str, path: Union[str, Path],
                 title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, frame in frames.items():
        ts, vs = _positive(frame["t"].to_numpy(), frame[metric].to_numpy())
        if ts.size:
            ax.loglog(ts, vs, label=label)
    ax.set_xlabel("t")
    ax.set_ylabel(METRIC_LABELS.get(metric, metric))
    ax.set_title(title)
    ax.grid(True, which="both")
    ax.legend(loc="best")
    return _save(fig, path)
