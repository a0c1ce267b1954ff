"""
Empirical convergence rates: log-log slope fits and scaled suprema.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple
import numpy as np

from app.core.exceptions import DomainError, InsufficientDataError
from app.core.logging import setup_logger

logger = setup_logger(__name__)

MIN_POINTS = 5
MAX_DROPPED_FRACTION = 0.2


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]
    used: int = 0
    dropped: int = 0
    
    @property
    def reliable(self) -> bool:
        total = self.used + self.dropped
        return total > 0 and self.dropped <= MAX_DROPPED_FRACTION * total


def _window(t: np.ndarray, values: np.ndarray,
            window: Optional[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray, Tuple[float, float]]:
    if t.size == 0:
        raise InsufficientDataError("empty series")
    if window is None:
        window = (float(t[0]), float(t[-1]))
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise DomainError(f"window must satisfy t_lo < t_hi, got {window}")
    mask = (t >= t_lo) & (t <= t_hi)
    return t[mask], values[mask], (float(t_lo), float(t_hi))


def rate_fit(t: Sequence[float], values: Sequence[float],
             window: Optional[Tuple[float, float]] = None) -> RateFit:
    """Least-squares slope of log(value) against log(t) over the window"""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    t, values, window = _window(t, values, window)
    
    positive = values > 0
    dropped = int(np.count_nonzero(~positive))
    if np.count_nonzero(positive) < MIN_POINTS:
        raise InsufficientDataError(
            f"rate fit needs at least {MIN_POINTS} positive values in {window}, "
            f"got {np.count_nonzero(positive)}"
        )
    log_t = np.log(t[positive])
    log_v = np.log(values[positive])
    slope, intercept = np.polyfit(log_t, log_v, 1)
    
    predicted = slope * log_t + intercept
    ss_res = float(np.sum((log_v - predicted) ** 2))
    ss_tot = float(np.sum((log_v - log_v.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    
    fit = RateFit(float(slope), float(intercept), r_squared, window,
                  used=int(np.count_nonzero(positive)), dropped=dropped)
    if not fit.reliable:
        logger.warning(f"rate fit over {window} dropped {dropped} non-positive values; unreliable")
    return fit


def scaled_sup(t: Sequence[float], values: Sequence[float], scale: Callable[[float], float],
               window: Optional[Tuple[float, float]] = None) -> float:
    """sup over the window of scale(t) * value(t)"""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    t, values, _ = _window(t, values, window)
    if t.size == 0:
        raise InsufficientDataError("no samples inside the window")
    scaled = np.array([scale(s) for s in t]) * values
    return float(np.max(scaled))
