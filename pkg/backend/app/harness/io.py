"""
CSV serialization of trajectories, comparisons and Tikhonov paths.
Floats are written with 17 significant digits so a read-back is bit-exact.
"""

from pathlib import Path
from typing import List, Sequence, Union
import pandas as pd

from app.core.exceptions import ConfigError
from app.core.logging import setup_logger
from app.diagnostics.records import METRIC_COLUMNS
from app.tikhonov.path import PathPoint

logger = setup_logger(__name__)

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"CSV file not found: {path}")
    return pd.read_csv(path, float_precision="round_trip")


def metric_columns(frame: pd.DataFrame) -> List[str]:
    """Metric columns of a trajectory CSV, or every non-time column otherwise"""
    present = [c for c in METRIC_COLUMNS if c in frame.columns]
    if present:
        return present
    return [c for c in frame.columns if c != "t"]


def path_frame(points: Sequence[PathPoint]) -> pd.DataFrame:
    """eps, x_0..x_{n-1}, norm, residual"""
    if not points:
        return pd.DataFrame(columns=["eps", "norm", "residual"])
    n = points[0].x_eps.size
    rows = [[pt.eps, *pt.x_eps, pt.norm, pt.residual] for pt in points]
    return pd.DataFrame(rows, columns=["eps"] + [f"x_{i}" for i in range(n)] + ["norm", "residual"])
