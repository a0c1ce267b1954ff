"""
Per-sample diagnostics along a trajectory and trajectory-level metrics.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional
import numpy as np
import pandas as pd
from scipy import linalg
from scipy.integrate import cumulative_trapezoid
from scipy.signal import find_peaks, medfilt

from app.core.exceptions import DomainError, InsufficientDataError
from app.core.logging import setup_logger
from app.diagnostics.energy import (
    EnergyParams,
    energy_E_eps,
    energy_E_mu,
    energy_derivative_analytic,
)
from app.dynamics.schedule import CoefficientSchedule, SystemKind
from app.dynamics.system import PhaseVector, extrapolated_points, rhs
from app.integration.solver import Trajectory
from app.problems.core import Problem, aug_lagrangian_value, feasibility

logger = setup_logger(__name__)

METRIC_COLUMNS = ["gap_xhat", "feas_xhat", "iterate_err", "vel_norm", "E", "E_eps", "dEdt"]


def state_columns(n: int, m: int) -> List[str]:
    return (
        [f"x_{i}" for i in range(n)]
        + [f"lam_{i}" for i in range(m)]
        + [f"vx_{i}" for i in range(n)]
        + [f"vlam_{i}" for i in range(m)]
    )


def csv_columns(n: int, m: int) -> List[str]:
    """t, x_0..x_{n-1}, lam_*, vx_*, vlam_*, then the metric columns"""
    return ["t"] + state_columns(n, m) + METRIC_COLUMNS


@dataclass
class DiagnosticsRecord:
    t: float
    gap_at_xhat: float
    feasibility_at_xhat: float
    iterate_error: float
    velocity_norm: float
    energy_E: float
    energy_E_eps: float
    dE_dt_analytic: float
    
    def metrics(self) -> List[float]:
        return [self.gap_at_xhat, self.feasibility_at_xhat, self.iterate_error,
                self.velocity_norm, self.energy_E, self.energy_E_eps, self.dE_dt_analytic]


def diagnostics_record(params: EnergyParams, p: Problem, system: SystemKind,
                       t: float, Z: PhaseVector) -> DiagnosticsRecord:
    """Evaluate every per-sample metric at (t, Z); the gap is measured against mu"""
    s = params.schedule
    x_hat, _, _ = extrapolated_points(s, t, Z)
    gap = aug_lagrangian_value(p, x_hat, params.mu) - aug_lagrangian_value(p, params.x_star, params.mu)
    derivative = rhs(s, p, system, t, Z)
    return DiagnosticsRecord(
        t=float(t),
        gap_at_xhat=float(gap),
        feasibility_at_xhat=feasibility(p, x_hat),
        iterate_error=float(linalg.norm(Z.x - params.x_star)),
        velocity_norm=float(np.sqrt(Z.vx @ Z.vx + Z.vlam @ Z.vlam)),
        energy_E=energy_E_mu(params, p, t, Z),
        energy_E_eps=energy_E_eps(params, p, t, Z),
        dE_dt_analytic=energy_derivative_analytic(params, p, t, Z, derivative),
    )


def diagnostics_frame(traj: Trajectory, params: EnergyParams, p: Problem,
                      system: SystemKind) -> pd.DataFrame:
    """Trajectory plus diagnostics, one row per sample, in CSV column order"""
    if traj.layout is None:
        raise DomainError("diagnostics need a phase-vector trajectory")
    n, m = traj.layout
    rows = []
    for i, (t, Z) in enumerate(traj.phases()):
        record = diagnostics_record(params, p, system, t, Z)
        rows.append([t, *traj.states[i], *record.metrics()])
    return pd.DataFrame(rows, columns=csv_columns(n, m))


def positions(frame: pd.DataFrame) -> np.ndarray:
    cols = [c for c in frame.columns if c.startswith("x_")]
    return frame[cols].to_numpy()


def oscillation_count(values, kernel: int = 5) -> int:
    """Local maxima (flat tops count once) after a median filter of the given odd width"""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        return 0
    smoothed = medfilt(values, kernel_size=kernel)
    peaks, _ = find_peaks(smoothed)
    return int(peaks.size)


def ball_crossings(frame: pd.DataFrame, radius: float) -> int:
    """Sign changes of ||x(t)|| - radius (exact zeros are skipped)"""
    distance = linalg.norm(positions(frame), axis=1) - radius
    signs = np.sign(distance)
    signs = signs[signs != 0]
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


@dataclass
class IntegralEstimate:
    name: str
    value: float
    bounded: bool


def integral_estimates(frame: pd.DataFrame, schedule: CoefficientSchedule,
                       t_lo: Optional[float] = None) -> Dict[str, IntegralEstimate]:
    """
    Discrete quadratures of the integral estimates over [t_lo, T]:
    t xi gap, t ||(x', lam')||^2, t xi ||A x_hat - b||^2, t xi eps ||x||^2.
    
    An integral is flagged bounded when its growth over the last 10% of the
    window stays below 1% of its value.
    """
    window = frame if t_lo is None else frame[frame["t"] >= t_lo]
    if len(window) < 5:
        raise InsufficientDataError("need at least 5 samples for integral estimates")
    t = window["t"].to_numpy()
    xi = np.array([schedule.xi.value(s) for s in t])
    eps = np.array([schedule.eps.value(s) for s in t])
    norm_sq = np.sum(positions(window) ** 2, axis=1)
    integrands = {
        "gap": t * xi * window["gap_xhat"].to_numpy(),
        "velocity": t * window["vel_norm"].to_numpy() ** 2,
        "feasibility": t * xi * window["feas_xhat"].to_numpy() ** 2,
        "tikhonov": t * xi * eps * norm_sq,
    }
    cutoff = t[0] + 0.9 * (t[-1] - t[0])
    tail_start = int(np.searchsorted(t, cutoff))
    estimates = {}
    for name, values in integrands.items():
        running = cumulative_trapezoid(values, t, initial=0.0)
        total = float(running[-1])
        growth = abs(total - float(running[tail_start]))
        bounded = growth <= 0.01 * abs(total) or abs(total) < 1e-14
        estimates[name] = IntegralEstimate(name, total, bool(bounded))
    return estimates
